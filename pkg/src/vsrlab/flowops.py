"""Dense optical-flow utilities: warping, occlusion masks, and flow estimators.

Numpy implementations are the reference semantics (used by the metrics);
`warp_features` is the torch twin used inside the recurrent propagation.
"""

from __future__ import annotations

import os
import re

import numpy as np
import torch
import torch.nn.functional as F
from scipy.ndimage import correlate1d

from .errors import DataError
from .videodata import (
    FlowField,
    OcclusionMask,
    SyntheticSceneSpec,
    VideoClip,
    gaussian_kernel_1d,
    read_flo,
    synth_sequence,
)

OCCLUSION_REL = 0.01
OCCLUSION_ABS = 0.5


def backward_warp(image: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Sample `image` at p + flow(p) with bilinear interpolation, edge-clamped.

    Args:
        image: (H, W) or (H, W, C) array.
        flow: (H, W, 2) displacement field, (dx, dy) in pixels.

    Returns:
        Warped array with the shape of `image`, in float64.
    """
    image = np.asarray(image, dtype=np.float64)
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise DataError(f"flow must be (H, W, 2), got {flow.shape}")
    if image.shape[:2] != flow.shape[:2]:
        raise DataError(f"image {image.shape[:2]} and flow {flow.shape[:2]} disagree")
    h, w = image.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xs = np.clip(xx + flow[..., 0], 0.0, w - 1.0)
    ys = np.clip(yy + flow[..., 1], 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    if image.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = image[y0, x0] * (1 - fx) + image[y0, x1] * fx
    bot = image[y1, x0] * (1 - fx) + image[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def warp_features(feats: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
    """Torch twin of `backward_warp` for (N, C, H, W) features.

    Args:
        feats: (N, C, H, W) tensor.
        flow: (N, H, W, 2) displacement field in pixels.
    """
    n, _, h, w = feats.shape
    device, dtype = feats.device, feats.dtype
    yy, xx = torch.meshgrid(
        torch.arange(h, device=device, dtype=dtype),
        torch.arange(w, device=device, dtype=dtype),
        indexing="ij",
    )
    xs = xx.unsqueeze(0) + flow[..., 0]
    ys = yy.unsqueeze(0) + flow[..., 1]
    # grid_sample expects coordinates normalized to [-1, 1].
    gx = 2.0 * xs / max(w - 1, 1) - 1.0
    gy = 2.0 * ys / max(h - 1, 1) - 1.0
    grid = torch.stack((gx, gy), dim=-1)
    return F.grid_sample(feats, grid, mode="bilinear", padding_mode="border", align_corners=True)


def occlusion_mask(flow_fwd: FlowField, flow_bwd: FlowField) -> OcclusionMask:
    """Forward-backward consistency mask; 1 marks pixels that survive the check.

    A pixel of frame t is kept when the round trip through frame t+1 nearly
    cancels: |f + g|^2 <= 0.01 (|f|^2 + |g|^2) + 0.5, where f is the forward
    flow and g the backward flow warped onto frame t by f.
    """
    if flow_fwd.direction != "forward" or flow_bwd.direction != "backward":
        raise DataError("occlusion_mask expects a (forward, backward) flow pair")
    if flow_fwd.flow.shape != flow_bwd.flow.shape:
        raise DataError("forward/backward flows disagree in shape")
    masks = []
    for t in range(flow_fwd.flow.shape[0]):
        f = flow_fwd.flow[t].astype(np.float64)
        g = backward_warp(flow_bwd.flow[t], f)
        lhs = np.sum((f + g) ** 2, axis=-1)
        rhs = OCCLUSION_REL * (np.sum(f**2, axis=-1) + np.sum(g**2, axis=-1)) + OCCLUSION_ABS
        masks.append(lhs <= rhs)
    return OcclusionMask(np.stack(masks).astype(np.uint8))


# ---------------------------------------------------------------------------
# Classical pyramidal Lucas-Kanade estimation
# ---------------------------------------------------------------------------

def _to_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        return img.mean(axis=2)
    return img


def _blur(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel_1d(sigma)
    out = correlate1d(img, k, axis=0, mode="mirror")
    return correlate1d(out, k, axis=1, mode="mirror")


def _resize_bilinear(arr: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resize with half-pixel-centred sampling, edge-clamped."""
    h_out, w_out = shape
    h_in, w_in = arr.shape[:2]
    ys = np.clip((np.arange(h_out) + 0.5) * (h_in / h_out) - 0.5, 0, h_in - 1)
    xs = np.clip((np.arange(w_out) + 0.5) * (w_in / w_out) - 0.5, 0, w_in - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h_in - 1)
    x1 = np.minimum(x0 + 1, w_in - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    if arr.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    top = arr[np.ix_(y0, x0)] * (1 - fx) + arr[np.ix_(y0, x1)] * fx
    bot = arr[np.ix_(y1, x0)] * (1 - fx) + arr[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def estimate_flow_classical(
    a: np.ndarray,
    b: np.ndarray,
    levels: int = 3,
    iters: int = 3,
    window_sigma: float = 2.0,
    reg: float = 1.0e-3,
) -> np.ndarray:
    """Dense coarse-to-fine Lucas-Kanade flow from frame `a` to frame `b`.

    Args:
        a, b: (H, W) or (H, W, C) frames in [0, 1].
        levels: number of 2x pyramid reductions; needs H, W >= 2**levels * 8.
        iters: warp/solve refinements per level.
        window_sigma: Gaussian aggregation window for the normal equations.
        reg: Tikhonov damping added to the 2x2 structure tensor.

    Returns:
        (H, W, 2) float64 flow such that a(p) ~= b(p + flow(p)).
    """
    ga, gb = _to_gray(a), _to_gray(b)
    if ga.shape != gb.shape:
        raise DataError("frames disagree in shape")
    h, w = ga.shape
    if min(h, w) < (1 << levels) * 8:
        raise DataError(f"frames too small for {levels} pyramid levels: {h}x{w}")
    pyr_a, pyr_b = [ga], [gb]
    for _ in range(levels):
        pyr_a.append(_blur(pyr_a[-1], 1.0)[::2, ::2])
        pyr_b.append(_blur(pyr_b[-1], 1.0)[::2, ::2])

    flow = np.zeros(pyr_a[-1].shape + (2,), dtype=np.float64)
    for lvl in range(levels, -1, -1):
        fa, fb = pyr_a[lvl], pyr_b[lvl]
        if flow.shape[:2] != fa.shape:
            flow = _resize_bilinear(flow, fa.shape) * 2.0
        for _ in range(iters):
            bw = backward_warp(fb, flow)
            ix = np.gradient(bw, axis=1)
            iy = np.gradient(bw, axis=0)
            it = bw - fa
            k = gaussian_kernel_1d(window_sigma)

            def acc(img):
                out = correlate1d(img, k, axis=0, mode="mirror")
                return correlate1d(out, k, axis=1, mode="mirror")

            gxx = acc(ix * ix) + reg
            gyy = acc(iy * iy) + reg
            gxy = acc(ix * iy)
            bx = -acc(ix * it)
            by = -acc(iy * it)
            det = gxx * gyy - gxy * gxy
            du = (gyy * bx - gxy * by) / det
            dv = (gxx * by - gxy * bx) / det
            flow = flow + np.stack((du, dv), axis=-1)
    return flow


# ---------------------------------------------------------------------------
# Estimator interface
# ---------------------------------------------------------------------------

class FlowEstimator:
    """Produces dense flow between two frames of a clip.

    `estimate(a, b, index, reverse)` returns the (H, W, 2) flow a -> b.
    `index` is the pair index t (frames t, t+1); `reverse` marks that (a, b)
    is the (t+1, t) ordering. Frame-driven estimators ignore both hints.
    """

    name: str = "base"
    is_exact: bool = False

    def estimate(self, a: np.ndarray, b: np.ndarray, index: int | None = None,
                 reverse: bool = False) -> np.ndarray:
        raise NotImplementedError

    def clip_flows(self, clip: VideoClip) -> tuple[FlowField, FlowField]:
        """Forward and backward flow fields over consecutive frame pairs."""
        fwd, bwd = [], []
        for t in range(len(clip) - 1):
            fwd.append(self.estimate(clip.frames[t], clip.frames[t + 1], index=t))
            bwd.append(self.estimate(clip.frames[t + 1], clip.frames[t], index=t, reverse=True))
        return (
            FlowField(np.stack(fwd), "forward"),
            FlowField(np.stack(bwd), "backward"),
        )


class ClassicalEstimator(FlowEstimator):
    """Pyramidal Lucas-Kanade estimator; the default for metrics."""

    name = "classical"
    is_exact = False

    def __init__(self, levels: int = 2, iters: int = 3):
        self.levels = levels
        self.iters = iters

    def estimate(self, a, b, index=None, reverse=False):
        return estimate_flow_classical(a, b, levels=self.levels, iters=self.iters)


class ExactEstimator(FlowEstimator):
    """Analytic flow for synthetic translating scenes.

    Only valid for frames rendered from `scene`; `estimate` checks that the
    inputs match the rendered frames before answering.
    """

    name = "exact"
    is_exact = True

    def __init__(self, scene: SyntheticSceneSpec):
        self.scene = scene
        clip, fwd, bwd = synth_sequence(scene)
        self._clip = clip
        self._fwd = fwd
        self._bwd = bwd

    def _check_frame(self, frame: np.ndarray, t: int) -> None:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 3 or frame.shape[2] != 3:
            raise DataError("exact estimator expects (H, W, 3) frames")
        if not 0 <= t < len(self._clip):
            raise DataError(f"frame index {t} outside the scene's {len(self._clip)} frames")
        # PNG round-trips quantize to 8 bits; match within that tolerance.
        err = float(np.abs(self._clip.frames[t] - frame).max())
        if err > 1.0 / 255.0 + 1.0e-6:
            raise DataError("frame does not belong to the declared synthetic scene")

    def _frame_index(self, frame: np.ndarray) -> int:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 3 or frame.shape[2] != 3:
            raise DataError("exact estimator expects (H, W, 3) frames")
        err = np.abs(self._clip.frames - frame[None]).reshape(len(self._clip), -1).max(axis=1)
        t = int(np.argmin(err))
        if err[t] > 1.0 / 255.0 + 1.0e-6:
            raise DataError("frame does not belong to the declared synthetic scene")
        return t

    def estimate(self, a, b, index=None, reverse=False):
        if index is not None:
            ta = index + 1 if reverse else index
            tb = index if reverse else index + 1
            self._check_frame(a, ta)
            self._check_frame(b, tb)
        else:
            ta, tb = self._frame_index(a), self._frame_index(b)
            if abs(ta - tb) != 1:
                raise DataError(
                    f"exact estimator needs consecutive frames, got {ta} and {tb}"
                )
        if tb == ta + 1:
            return self._fwd.flow[ta].astype(np.float64)
        return self._bwd.flow[tb].astype(np.float64)


class ExternalFlowEstimator(FlowEstimator):
    """Reads precomputed flows from a directory of .flo files.

    Layout: forward_%08d.flo for pair (t, t+1) and backward_%08d.flo for
    pair (t+1, t), both keyed by t.
    """

    is_exact = False

    def __init__(self, directory: str):
        if not os.path.isdir(directory):
            raise DataError(f"flow directory not found: {directory}")
        self.directory = directory
        self.name = f"external:{directory}"

    def estimate(self, a, b, index=None, reverse=False):
        if index is None:
            raise DataError("external flows need the pair index")
        stem = "backward" if reverse else "forward"
        path = os.path.join(self.directory, f"{stem}_{index:08d}.flo")
        if not os.path.exists(path):
            raise DataError(f"missing flow file: {path}")
        flow = read_flo(path).astype(np.float64)
        if flow.shape[:2] != np.asarray(a).shape[:2]:
            raise DataError(f"flow {flow.shape[:2]} does not match frames {np.asarray(a).shape[:2]}")
        return flow


_EXTERNAL_RE = re.compile(r"^external:(.+)$")


def make_estimator(spec: str, scene: SyntheticSceneSpec | None = None) -> FlowEstimator:
    """Build an estimator from its command-line name.

    Accepts "classical", "exact" (needs `scene`), or "external:<dir>".
    """
    if spec == "classical":
        return ClassicalEstimator()
    if spec == "exact":
        if scene is None:
            raise DataError("exact estimator needs a synthetic scene description")
        return ExactEstimator(scene)
    m = _EXTERNAL_RE.match(spec)
    if m:
        return ExternalFlowEstimator(m.group(1))
    raise DataError(f"unknown flow estimator: {spec!r}")
