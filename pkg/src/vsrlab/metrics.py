"""Reference quality metrics and temporal-consistency measures.

Everything here is plain numpy/float64. The two warping errors share one
code path so that the reference variant degenerates exactly to the plain
variant when generated and ground-truth clips coincide.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .adversarial import perceptual_distance_frames
from .errors import DataError
from .flowops import FlowEstimator, backward_warp, occlusion_mask
from .videodata import FlowField, OcclusionMask, VideoClip

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def bt601_y(frames: np.ndarray) -> np.ndarray:
    """Luma of [0, 1] RGB frames on the [0, 1] scale (values in [16, 235]/255)."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != 3:
        raise DataError("expected RGB frames with a trailing channel axis")
    r, g, b = frames[..., 0], frames[..., 1], frames[..., 2]
    return (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0


def _prepare(a: VideoClip | np.ndarray, b: VideoClip | np.ndarray, color_space: str):
    fa = a.frames if isinstance(a, VideoClip) else np.asarray(a, dtype=np.float64)
    fb = b.frames if isinstance(b, VideoClip) else np.asarray(b, dtype=np.float64)
    if fa.shape != fb.shape:
        raise DataError(f"clip shapes differ: {fa.shape} vs {fb.shape}")
    if color_space == "y":
        fa, fb = bt601_y(fa)[..., None], bt601_y(fb)[..., None]
    elif color_space != "rgb":
        raise DataError(f"unknown color space: {color_space!r}")
    return fa, fb


def psnr(a, b, peak: float = 1.0, color_space: str = "rgb") -> float:
    """Mean per-frame PSNR in dB; +inf when the clips are identical."""
    fa, fb = _prepare(a, b, color_space)
    vals = []
    for t in range(fa.shape[0]):
        mse = float(np.mean((fa[t] - fb[t]) ** 2))
        vals.append(math.inf if mse == 0.0 else 10.0 * math.log10(peak * peak / mse))
    return float(np.mean(vals))


def _ssim_window_kernel() -> np.ndarray:
    half = (SSIM_WINDOW - 1) // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(xs**2) / (2.0 * SSIM_SIGMA**2))
    return k / k.sum()


def _window_mean(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    # Padding mode is irrelevant: the 5-px border is cropped afterwards, so
    # only full-support (valid) windows remain.
    out = correlate1d(img, k, axis=0, mode="nearest")
    out = correlate1d(out, k, axis=1, mode="nearest")
    half = (SSIM_WINDOW - 1) // 2
    return out[half:-half, half:-half]


def ssim(a, b, peak: float = 1.0, color_space: str = "rgb") -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows."""
    fa, fb = _prepare(a, b, color_space)
    if fa.shape[1] < SSIM_WINDOW or fa.shape[2] < SSIM_WINDOW:
        raise DataError(f"frames must be at least {SSIM_WINDOW}px for ssim")
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    k = _ssim_window_kernel()
    vals = []
    for t in range(fa.shape[0]):
        for ch in range(fa.shape[3]):
            x, y = fa[t, :, :, ch], fb[t, :, :, ch]
            mx, my = _window_mean(x, k), _window_mean(y, k)
            mxx = _window_mean(x * x, k) - mx * mx
            myy = _window_mean(y * y, k) - my * my
            mxy = _window_mean(x * y, k) - mx * my
            s = ((2 * mx * my + c1) * (2 * mxy + c2)) / (
                (mx * mx + my * my + c1) * (mxx + myy + c2)
            )
            vals.append(float(np.mean(s)))
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# Temporal consistency
# ---------------------------------------------------------------------------

def _clip_frames(clip) -> np.ndarray:
    return clip.frames if isinstance(clip, VideoClip) else np.asarray(clip, dtype=np.float64)


def _in_view_mask(flow: np.ndarray) -> np.ndarray:
    """1 where the flow's sampling target lands inside the frame.

    Pixels whose correspondence leaves the frame would otherwise compare
    against border-clamped samples, polluting the residual with content that
    was never observed.
    """
    h, w = flow.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    tx = xs + flow[:, :, 0]
    ty = ys + flow[:, :, 1]
    inside = (tx >= 0.0) & (tx <= w - 1.0) & (ty >= 0.0) & (ty <= h - 1.0)
    return inside.astype(np.uint8)


def _flows_and_masks(source: np.ndarray, estimator: FlowEstimator):
    """Forward/backward flows over consecutive pairs of `source`, plus the
    masks (forward-backward consistency intersected with in-view)."""
    fwd, bwd = [], []
    for t in range(source.shape[0] - 1):
        fwd.append(estimator.estimate(source[t], source[t + 1], index=t))
        bwd.append(estimator.estimate(source[t + 1], source[t], index=t, reverse=True))
    f_fwd = FlowField(np.stack(fwd), "forward")
    f_bwd = FlowField(np.stack(bwd), "backward")
    consistency = occlusion_mask(f_fwd, f_bwd).mask
    in_view = np.stack([_in_view_mask(f) for f in f_fwd.flow])
    return f_fwd, OcclusionMask(consistency & in_view)


def _masked_warp_error(frames: np.ndarray, flow_fwd: FlowField, masks) -> float:
    """Mean over frame pairs of the masked squared warp residual.

    Pair t compares frame t against frame t+1 warped back by the forward
    flow; occluded pixels are excluded, fully occluded pairs are skipped.
    """
    per_pair = []
    for t in range(frames.shape[0] - 1):
        m = masks.mask[t].astype(np.float64)
        denom = m.sum()
        if denom == 0.0:
            warnings.warn(f"frame pair {t} fully occluded; skipped", RuntimeWarning)
            continue
        warped = backward_warp(frames[t + 1], flow_fwd.flow[t])
        sq = np.sum((frames[t] - warped) ** 2, axis=-1)
        per_pair.append(float((sq * m).sum() / denom))
    if not per_pair:
        raise DataError("every frame pair is fully occluded")
    return float(np.mean(per_pair))


def warping_error(gen, estimator: FlowEstimator) -> float:
    """Flow-warp residual of a clip against itself one step ahead (E_warp)."""
    frames = _clip_frames(gen)
    if frames.shape[0] < 2:
        raise DataError("warping error needs at least two frames")
    flow_fwd, masks = _flows_and_masks(frames, estimator)
    return _masked_warp_error(frames, flow_fwd, masks)


def ref_warping_error(gt, gen, estimator: FlowEstimator) -> float:
    """Warp residual of the ground-truth clip under flows estimated on `gen`.

    Large values flag generated motion that disagrees with the true motion
    even when `gen` itself is perfectly self-consistent.
    """
    gt_frames = _clip_frames(gt)
    gen_frames = _clip_frames(gen)
    if gt_frames.shape != gen_frames.shape:
        raise DataError(f"clip shapes differ: {gt_frames.shape} vs {gen_frames.shape}")
    if gt_frames.shape[0] < 2:
        raise DataError("warping error needs at least two frames")
    flow_fwd, masks = _flows_and_masks(gen_frames, estimator)
    return _masked_warp_error(gt_frames, flow_fwd, masks)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

REPORT_FIELDS = (
    "clip_id", "psnr", "ssim", "perceptual", "e_warp", "e_ref_warp",
    "flow_estimator", "color_space", "n_frames",
)


@dataclass
class MetricReport:
    clip_id: str
    psnr: float
    ssim: float
    perceptual: float
    e_warp: float
    e_ref_warp: float
    flow_estimator: str
    color_space: str
    n_frames: int

    def to_json(self) -> str:
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, float) and math.isinf(val):
                d[key] = "inf"
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        d = json.loads(text)
        missing = set(REPORT_FIELDS) - set(d)
        if missing:
            raise DataError(f"report missing fields: {sorted(missing)}")
        for key, val in d.items():
            if val == "inf":
                d[key] = math.inf
        return cls(**{k: d[k] for k in REPORT_FIELDS})


def evaluate(gen, gt, estimator: FlowEstimator, color_space: str = "rgb",
             clip_id: str = "clip") -> MetricReport:
    """All metrics of a generated clip against its ground truth."""
    gen_frames = _clip_frames(gen)
    gt_frames = _clip_frames(gt)
    return MetricReport(
        clip_id=clip_id,
        psnr=psnr(gen_frames, gt_frames, color_space=color_space),
        ssim=ssim(gen_frames, gt_frames, color_space=color_space),
        perceptual=perceptual_distance_frames(gen_frames, gt_frames),
        e_warp=warping_error(gen_frames, estimator),
        e_ref_warp=ref_warping_error(gt_frames, gen_frames, estimator),
        flow_estimator=estimator.name,
        color_space=color_space,
        n_frames=int(gen_frames.shape[0]),
    )


def write_report(report: MetricReport, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(report.to_json() + "\n")


def load_report(path: str) -> MetricReport:
    with open(path) as fh:
        return MetricReport.from_json(fh.read())


def reports_to_csv(reports: list, path: str) -> None:
    """One row per clip, `inf` spelled out so spreadsheets stay lossless."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        for rep in reports:
            row = []
            for key in REPORT_FIELDS:
                val = getattr(rep, key)
                if isinstance(val, float) and math.isinf(val):
                    val = "inf"
                row.append(val)
            writer.writerow(row)
