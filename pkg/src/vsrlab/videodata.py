"""Video/flow I/O, BI/BD degradations, and the synthetic-scene oracle.

Clips are (T, H, W, 3) float arrays in [0, 1]. Flow fields follow the
convention flow[t, y, x] = (dx, dy): the content at pixel (x, y) of frame t
sits at (x + dx, y + dy) in frame t + 1 for forward flow.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import DataError

FLO_MAGIC = 202021.25

FRAME_PATTERN = re.compile(r"^(\d{8})\.png$")

PATTERNS = ("translating-texture", "checkerboard", "gradient-blob")


@dataclass
class VideoClip:
    """A (T, H, W, 3) frame stack with values in [0, 1]."""

    frames: np.ndarray
    frame_rate: Optional[float] = None

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.ndim != 4 or f.shape[3] != 3:
            raise DataError(f"clip must be (T, H, W, 3), got shape {f.shape}")
        if f.shape[0] < 1 or f.shape[1] < 1 or f.shape[2] < 1:
            raise DataError(f"clip dimensions must be positive, got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise DataError("clip contains non-finite values")
        if f.min() < 0.0 or f.max() > 1.0:
            raise DataError(
                f"clip values outside [0, 1]: min={f.min():.6g} max={f.max():.6g}"
            )
        if self.frame_rate is not None and not self.frame_rate > 0:
            raise DataError(f"frame_rate must be positive, got {self.frame_rate}")
        self.frames = f

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.frames.shape

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass
class FlowField:
    """Per-pair displacement maps, shape (T - 1, H, W, 2) with (dx, dy) order."""

    flow: np.ndarray
    direction: str = "forward"

    def __post_init__(self):
        f = np.asarray(self.flow)
        if f.ndim != 4 or f.shape[3] != 2:
            raise DataError(f"flow must be (T-1, H, W, 2), got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise DataError("flow contains non-finite values")
        if self.direction not in ("forward", "backward"):
            raise DataError(f"direction must be forward|backward, got {self.direction!r}")
        self.flow = f

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.flow.shape


@dataclass
class OcclusionMask:
    """Binary non-occlusion masks, shape (T - 1, H, W); 1 = non-occluded."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.ndim != 3:
            raise DataError(f"mask must be (T-1, H, W), got shape {m.shape}")
        values = np.unique(m)
        if not np.all(np.isin(values, (0, 1))):
            raise DataError("mask must be binary")
        self.mask = m.astype(np.uint8)


@dataclass
class SyntheticSceneSpec:
    """Recipe for a deterministic translating scene with exact ground-truth flow."""

    pattern: str
    velocity: Tuple[float, float]
    T: int
    H: int
    W: int
    seed: int = 0

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise DataError(f"unknown pattern {self.pattern!r}, expected one of {PATTERNS}")
        if self.T < 1 or self.H < 1 or self.W < 1:
            raise DataError("T, H, W must be positive")
        vx, vy = self.velocity
        bound = self.W / 8.0
        if abs(vx) > bound or abs(vy) > bound:
            raise DataError(
                f"velocity {self.velocity} exceeds bound W/8 = {bound:.3g}"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "pattern": self.pattern,
                "velocity": list(self.velocity),
                "T": self.T,
                "H": self.H,
                "W": self.W,
                "seed": self.seed,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSceneSpec":
        d = json.loads(text)
        return cls(
            pattern=d["pattern"],
            velocity=tuple(d["velocity"]),
            T=int(d["T"]),
            H=int(d["H"]),
            W=int(d["W"]),
            seed=int(d["seed"]),
        )


# ---------------------------------------------------------------------------
# Frame directory I/O
# ---------------------------------------------------------------------------

def load_frames(dir_path) -> VideoClip:
    """Load a clip from a directory of zero-padded-index PNGs (%08d.png)."""
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise DataError(f"not a directory: {dir_path}")
    entries = []
    for p in dir_path.iterdir():
        m = FRAME_PATTERN.match(p.name)
        if m:
            entries.append((int(m.group(1)), p))
    if not entries:
        raise DataError(f"no frames found in {dir_path}")
    entries.sort(key=lambda e: e[0])
    frames = []
    shape = None
    for _, p in entries:
        arr = np.asarray(Image.open(p).convert("RGB"), dtype=np.float32) / 255.0
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DataError(
                f"frame dimension mismatch: {p} has {arr.shape[:2]}, "
                f"expected {shape[:2]}"
            )
        frames.append(arr)
    return VideoClip(frames=np.stack(frames, axis=0))


def write_frames(clip: VideoClip, dir_path, start_index: int = 0) -> None:
    """Write clip frames as 8-bit PNGs named by zero-padded index."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    data = np.clip(np.rint(clip.frames * 255.0), 0, 255).astype(np.uint8)
    for t in range(len(clip)):
        Image.fromarray(data[t]).save(dir_path / f"{start_index + t:08d}.png")


def load_manifest(path) -> list:
    """Read a plain-text manifest: one clip directory per line, relative to it."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    dirs = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        d = (path.parent / line).resolve()
        if not d.is_dir():
            raise DataError(f"manifest entry is not a directory: {line}")
        dirs.append(d)
    return dirs


# ---------------------------------------------------------------------------
# Middlebury .flo interchange
# ---------------------------------------------------------------------------

def read_flo(path) -> np.ndarray:
    """Read a single H x W x 2 float32 flow from a Middlebury .flo file."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12:
        raise DataError(f"short read: {path} has {len(raw)} bytes, header needs 12")
    magic = np.frombuffer(raw, dtype="<f4", count=1)[0]
    if magic != np.float32(FLO_MAGIC):
        raise DataError(f"not a .flo file: {path} (magic {magic!r})")
    w = int(np.frombuffer(raw, dtype="<i4", count=1, offset=4)[0])
    h = int(np.frombuffer(raw, dtype="<i4", count=1, offset=8)[0])
    if w < 1 or h < 1:
        raise DataError(f"not a .flo file: {path} (bad dims {w}x{h})")
    need = 12 + 8 * w * h
    if len(raw) < need:
        raise DataError(f"short read: {path} has {len(raw)} bytes, need {need}")
    data = np.frombuffer(raw, dtype="<f4", count=2 * w * h, offset=12)
    return data.reshape(h, w, 2).copy()


def write_flo(flow, path) -> None:
    """Write one flow pair (H x W x 2, or a single-pair FlowField) as .flo."""
    if isinstance(flow, FlowField):
        if flow.flow.shape[0] != 1:
            raise DataError(
                f".flo holds a single pair, got FlowField with {flow.flow.shape[0]}"
            )
        flow = flow.flow[0]
    flow = np.asarray(flow, dtype="<f4")
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise DataError(f"flow pair must be (H, W, 2), got {flow.shape}")
    h, w = flow.shape[:2]
    path = Path(path)
    with open(path, "wb") as f:
        f.write(np.array([FLO_MAGIC], dtype="<f4").tobytes())
        f.write(np.array([w, h], dtype="<i4").tobytes())
        f.write(np.ascontiguousarray(flow).tobytes())


# ---------------------------------------------------------------------------
# Degradations
# ---------------------------------------------------------------------------

def _keys_cubic(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Keys bicubic kernel; a = -0.5 is the Catmull-Rom variant."""
    t = np.abs(t)
    out = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    out[near] = (a + 2.0) * t[near] ** 3 - (a + 3.0) * t[near] ** 2 + 1.0
    out[far] = a * (t[far] ** 3 - 5.0 * t[far] ** 2 + 8.0 * t[far] - 4.0)
    return out


def bicubic_weights(scale: int, out_index: int, n_in: int):
    """4-tap Keys weights and clamped source indices for one output sample.

    Output pixel centers map to input coordinate (i + 0.5) * scale - 0.5.
    """
    x = (out_index + 0.5) * scale - 0.5
    base = int(np.floor(x))
    idx = np.arange(base - 1, base + 3)
    w = _keys_cubic(x - idx.astype(np.float64))
    return w, np.clip(idx, 0, n_in - 1)


def _bicubic_down_axis(arr: np.ndarray, scale: int, axis: int) -> np.ndarray:
    n_in = arr.shape[axis]
    n_out = n_in // scale
    x = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(x).astype(np.int64)
    offsets = np.arange(-1, 3)
    idx = base[:, None] + offsets[None, :]                      # (n_out, 4)
    w = _keys_cubic(x[:, None] - idx.astype(np.float64))        # (n_out, 4)
    idx = np.clip(idx, 0, n_in - 1)                             # edge clamp
    moved = np.moveaxis(arr, axis, 0)
    gathered = moved[idx]                                       # (n_out, 4, ...)
    out = np.einsum("of,of...->o...", w, gathered)
    return np.moveaxis(out, 0, axis)


def degrade_bi(clip: VideoClip, scale: int) -> VideoClip:
    """Bicubic (BI) downsampling with the Catmull-Rom kernel, edge-clamped."""
    if scale not in (2, 4, 8):
        raise DataError(f"scale must be one of 2, 4, 8, got {scale}")
    _, h, w, _ = clip.shape
    if h % scale or w % scale:
        raise DataError(f"frame dims {h}x{w} not divisible by scale {scale}")
    out = _bicubic_down_axis(clip.frames.astype(np.float64), scale, axis=1)
    out = _bicubic_down_axis(out, scale, axis=2)
    return VideoClip(frames=np.clip(out, 0.0, 1.0).astype(clip.frames.dtype))


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps truncated at radius ceil(4 * sigma)."""
    if not sigma > 0:
        raise DataError(f"sigma must be positive, got {sigma}")
    radius = int(np.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def degrade_bd(clip: VideoClip, sigma: float = 1.6, scale: int = 4) -> VideoClip:
    """Blur-downsample (BD): separable Gaussian blur, then strided subsampling."""
    if scale not in (2, 4, 8):
        raise DataError(f"scale must be one of 2, 4, 8, got {scale}")
    _, h, w, _ = clip.shape
    if h % scale or w % scale:
        raise DataError(f"frame dims {h}x{w} not divisible by scale {scale}")
    k = gaussian_kernel_1d(sigma)
    # scipy's 'mirror' mode is edge-excluding reflect padding
    blurred = correlate1d(clip.frames.astype(np.float64), k, axis=1, mode="mirror")
    blurred = correlate1d(blurred, k, axis=2, mode="mirror")
    sub = blurred[:, ::scale, ::scale, :]
    return VideoClip(frames=np.clip(sub, 0.0, 1.0).astype(clip.frames.dtype))


# ---------------------------------------------------------------------------
# Synthetic scenes with exact flow
# ---------------------------------------------------------------------------

def _make_canvas(spec: SyntheticSceneSpec, ch: int, cw: int) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    if spec.pattern == "translating-texture":
        noise = rng.random((ch, cw, 3))
        k = gaussian_kernel_1d(1.5)
        tex = correlate1d(noise, k, axis=0, mode="wrap")
        tex = correlate1d(tex, k, axis=1, mode="wrap")
        lo, hi = tex.min(), tex.max()
        canvas = 0.05 + 0.9 * (tex - lo) / max(hi - lo, 1e-12)
    elif spec.pattern == "checkerboard":
        block = 4
        yy, xx = np.mgrid[0:ch, 0:cw]
        cells = ((yy // block) + (xx // block)) % 2
        colors = rng.uniform(0.1, 0.9, size=(2, 3))
        canvas = colors[cells]
    else:  # gradient-blob
        yy, xx = np.mgrid[0:ch, 0:cw].astype(np.float64)
        grad = 0.15 + 0.5 * (xx / max(cw - 1, 1))
        cy = rng.uniform(0.3, 0.7) * ch
        cx = rng.uniform(0.3, 0.7) * cw
        width = 0.15 * min(ch, cw)
        blob = 0.35 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
        base = grad + blob
        tint = rng.uniform(0.85, 1.0, size=3)
        canvas = base[:, :, None] * tint[None, None, :]
    return np.clip(canvas, 0.0, 1.0)


def _sample_shifted(canvas: np.ndarray, oy: float, ox: float, h: int, w: int) -> np.ndarray:
    """Bilinear-sample an h x w window whose origin sits at (oy, ox)."""
    iy, fy = int(np.floor(oy)), oy - np.floor(oy)
    ix, fx = int(np.floor(ox)), ox - np.floor(ox)
    if fy == 0.0 and fx == 0.0:
        return canvas[iy : iy + h, ix : ix + w].copy()
    block = canvas[iy : iy + h + 1, ix : ix + w + 1]
    top = (1 - fx) * block[:h, :w] + fx * block[:h, 1 : w + 1]
    bot = (1 - fx) * block[1 : h + 1, :w] + fx * block[1 : h + 1, 1 : w + 1]
    return (1 - fy) * top + fy * bot


def synth_sequence(spec: SyntheticSceneSpec):
    """Deterministic translating clip plus its exact forward/backward flows.

    Frame t samples a fixed canvas at an origin displaced by -t * velocity, so
    scene content moves by exactly +velocity px/frame in image coordinates.
    """
    vx, vy = spec.velocity
    span_x = abs(vx) * (spec.T - 1)
    span_y = abs(vy) * (spec.T - 1)
    pad = 2
    cw = spec.W + int(np.ceil(span_x)) + 2 * pad
    ch = spec.H + int(np.ceil(span_y)) + 2 * pad
    canvas = _make_canvas(spec, ch, cw)

    # Origin drifts opposite to velocity; start so the path stays in-canvas.
    ox0 = pad + (span_x if vx > 0 else 0.0)
    oy0 = pad + (span_y if vy > 0 else 0.0)
    frames = np.empty((spec.T, spec.H, spec.W, 3), dtype=np.float64)
    for t in range(spec.T):
        frames[t] = _sample_shifted(canvas, oy0 - t * vy, ox0 - t * vx, spec.H, spec.W)
    clip = VideoClip(frames=np.clip(frames, 0.0, 1.0).astype(np.float32))

    if spec.T > 1:
        fwd = np.empty((spec.T - 1, spec.H, spec.W, 2), dtype=np.float32)
        fwd[..., 0] = vx
        fwd[..., 1] = vy
        bwd = -fwd
    else:
        fwd = np.zeros((0, spec.H, spec.W, 2), dtype=np.float32)
        bwd = np.zeros((0, spec.H, spec.W, 2), dtype=np.float32)
    return clip, FlowField(fwd, "forward"), FlowField(bwd, "backward")


def write_synthetic_clip(spec: SyntheticSceneSpec, dir_path) -> VideoClip:
    """Render a synthetic clip to PNG frames plus a scene sidecar for the
    exact-flow estimator."""
    clip, _, _ = synth_sequence(spec)
    write_frames(clip, dir_path)
    (Path(dir_path) / "scene.json").write_text(spec.to_json())
    return clip
