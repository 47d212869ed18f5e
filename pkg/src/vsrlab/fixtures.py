"""Golden-fixture registry backed by deliberately naive oracles.

Every documented example with a computable expectation gets exactly one
entry in ``fixtures.json``. Expected values are produced here by brute
force (O(n^4) loops, struct packing, closed forms), independently of the
library's vectorized code paths; where a library result can be cross-checked
cheaply at generation time, a disagreement is a hard failure. Experiment
entries (training runs, ablations) pin the parameters and the directional
expectation the test suite must reproduce.

Regeneration is idempotent: the file is written with sorted keys and the
shortest round-trip float representation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import struct
import sys
from pathlib import Path

import numpy as np
from scipy.ndimage import correlate1d, fourier_shift

from .videodata import SyntheticSceneSpec, VideoClip, gaussian_kernel_1d, synth_sequence

FIXTURE_FILE_NAME = "fixtures.json"

FIXTURE_KEYS = (
    "adversarial/charbonnier_grad_fd",
    "adversarial/charbonnier_unit_diff",
    "adversarial/gan_loss_ln2",
    "adversarial/perceptual_noise_monotone",
    "adversarial/r1_grad_fd",
    "adversarial/r1_linear_disc",
    "adversarial/resume_bitwise",
    "adversarial/total_loss_linearity",
    "adversarial/toy_convergence",
    "antialias/checkerboard_interior_null",
    "antialias/hf_checkerboard_identity",
    "antialias/impulse_outer_product",
    "antialias/kernel_nyquist_sum",
    "antialias/shift_stability_suite",
    "docs/impulse_5x5_outer",
    "docs/softplus_zero",
    "flowops/classical_suite_aepe",
    "flowops/classical_translation_median",
    "flowops/occlusion_consistent_pass",
    "flowops/occlusion_inconsistent_fail",
    "flowops/warp_half_pixel",
    "flowops/warp_integer_row",
    "generator/chunk_direct_call",
    "generator/hf_skip_checkerboard",
    "generator/param_count_k2",
    "generator/zero_init_break_one_step",
    "harness/evaluate_blur_rwe_cli",
    "metrics/black_gen_rwe_energy",
    "metrics/blur_vs_gt_directional",
    "metrics/ewarp_exact_flow_bound",
    "metrics/psnr_uniform_001",
    "metrics/psnr_uniform_01",
    "metrics/ssim_luminance_exact",
    "propagation/extract_features_golden",
    "propagation/palindrome_symmetry",
    "propagation/two_step_reference",
    "propagation/v1v2_rwe_ordering",
    "videodata/bicubic_half_phase",
    "videodata/flo_byte_layout",
    "videodata/gaussian_impulse_center",
    "videodata/synth_warp_roundtrip",
)


class OracleMismatch(RuntimeError):
    """A brute-force oracle and the library disagreed during generation."""


def _sig(value: float, digits: int = 9) -> float:
    """Round to significant digits; keeps regenerated files byte-stable even
    if a numeric backend changes in the last few ulps."""
    return float(f"{float(value):.{digits}g}")


def _py(obj):
    """Recursive conversion to plain JSON-serializable Python types."""
    if isinstance(obj, dict):
        return {str(k): _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise OracleMismatch(what)


# ---------------------------------------------------------------------------
# Brute-force oracles (naive on purpose; no shared code with the library)
# ---------------------------------------------------------------------------

def oracle_keys_cubic(t: float, a: float = -0.5) -> float:
    """Keys cubic kernel evaluated with the raw piecewise polynomial."""
    t = abs(t)
    if t <= 1.0:
        return (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    if t < 2.0:
        return a * (t**3 - 5.0 * t**2 + 8.0 * t - 4.0)
    return 0.0


def oracle_gaussian_taps(sigma: float) -> list:
    radius = math.ceil(4.0 * sigma)
    raw = [math.exp(-0.5 * (i / sigma) ** 2) for i in range(-radius, radius + 1)]
    z = sum(raw)
    return [v / z for v in raw]


def oracle_flo_bytes(flow: np.ndarray) -> bytes:
    """Middlebury layout: f32 magic, i32 width, i32 height, (u, v) pairs
    interleaved in row-major order, all little-endian."""
    h, w = flow.shape[:2]
    out = struct.pack("<f", 202021.25) + struct.pack("<i", w) + struct.pack("<i", h)
    for y in range(h):
        for x in range(w):
            out += struct.pack("<f", float(flow[y, x, 0]))
            out += struct.pack("<f", float(flow[y, x, 1]))
    return out


def oracle_bilinear_warp(image: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Per-pixel clamped bilinear sampling at p + flow(p); (H, W) input."""
    h, w = image.shape
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            sx = min(max(x + float(flow[y, x, 0]), 0.0), w - 1.0)
            sy = min(max(y + float(flow[y, x, 1]), 0.0), h - 1.0)
            x0, y0 = int(math.floor(sx)), int(math.floor(sy))
            x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
            fx, fy = sx - x0, sy - y0
            top = image[y0, x0] * (1 - fx) + image[y0, x1] * fx
            bot = image[y1, x0] * (1 - fx) + image[y1, x1] * fx
            out[y, x] = top * (1 - fy) + bot * fy
    return out


_BINOMIAL = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0]


def _oracle_reflect_src(i: int, n: int) -> int:
    if n == 1:
        return 0
    period = 2 * n - 2
    m = i % period
    return period - m if m >= n else m


def oracle_lowpass2d(img: np.ndarray) -> np.ndarray:
    """Direct (non-separable) 5x5 binomial filtering with edge-excluding
    reflect padding, computed tap by tap."""
    h, w = img.shape
    pad = 2
    padded = np.empty((h + 2 * pad, w + 2 * pad), dtype=np.float64)
    for i in range(-pad, h + pad):
        for j in range(-pad, w + pad):
            padded[i + pad, j + pad] = img[_oracle_reflect_src(i, h), _oracle_reflect_src(j, w)]
    out = np.empty((h, w), dtype=np.float64)
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for u in range(5):
                for v in range(5):
                    acc += _BINOMIAL[u] * _BINOMIAL[v] * padded[i + u, j + v]
            out[i, j] = acc
    return out


def oracle_shift_scores(signals) -> list:
    """Independent recomputation of the shift-stability metric.

    For each signal: downsample it and its 1-px horizontal shift through
    both paths (binomial blur + subsample vs plain subsample), compare the
    shifted output against the exact half-pixel Fourier shift of the
    unshifted output, L2 over the 4-px-margin interior.
    """
    margin = 4
    rows = []
    for name, img in signals:
        shifted = np.roll(img, 1, axis=1)
        dists = []
        for blur in (True, False):
            def down(arr):
                return (oracle_lowpass2d(arr) if blur else arr)[::2, ::2]
            out = down(img)
            out_s = down(shifted)
            ref = np.real(np.fft.ifft2(fourier_shift(np.fft.fft2(out), (0.0, 0.5))))
            diff = (out_s - ref)[margin:-margin, margin:-margin]
            dists.append(math.sqrt(float(np.sum(diff * diff))))
        rows.append([name, dists[0], dists[1]])
    return rows


def oracle_checkerboard(size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    return np.where((yy + xx) % 2 == 0, 1.0, -1.0)


def _oracle_conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, pad: int) -> np.ndarray:
    """Naive zero-padded convolution, (C, H, W) x (O, C, kh, kw) -> (O, H', W')."""
    c, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.zeros((c, h + 2 * pad, wd + 2 * pad), dtype=np.float64)
    xp[:, pad:pad + h, pad:pad + wd] = x
    ho, wo = h + 2 * pad - kh + 1, wd + 2 * pad - kw + 1
    out = np.empty((o, ho, wo), dtype=np.float64)
    for k in range(o):
        for i in range(ho):
            for j in range(wo):
                out[k, i, j] = float(np.sum(w[k] * xp[:, i:i + kh, j:j + kw])) + float(b[k])
    return out


def _oracle_leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, x, 0.1 * x)


def _oracle_res_block(x: np.ndarray, sd: dict, prefix: str) -> np.ndarray:
    y = _oracle_conv2d(x, sd[f"{prefix}.conv1.weight"], sd[f"{prefix}.conv1.bias"], 1)
    y = _oracle_conv2d(_oracle_leaky(y), sd[f"{prefix}.conv2.weight"], sd[f"{prefix}.conv2.bias"], 1)
    return x + y


def _oracle_warp_chw(x: np.ndarray, flow: np.ndarray) -> np.ndarray:
    return np.stack([oracle_bilinear_warp(x[c], flow) for c in range(x.shape[0])])


def oracle_two_step_propagation(sd: dict, frames: np.ndarray,
                                flow_fwd: np.ndarray, flow_bwd: np.ndarray,
                                extract_blocks: int, prop_blocks: int) -> np.ndarray:
    """Straight-line reference of the bidirectional recurrence for T frames.

    Args:
        sd: state dict as float64 numpy arrays.
        frames: (T, 3, H, W); flow_fwd/flow_bwd: (T-1, H, W, 2).
    """
    def extract(frame):
        x = _oracle_conv2d(frame, sd["extractor.head.weight"], sd["extractor.head.bias"], 1)
        for i in range(extract_blocks):
            x = _oracle_res_block(x, sd, f"extractor.body.{i}")
        return x

    def branch(side, feat, hidden):
        z = np.concatenate([feat, hidden], axis=0)
        x = _oracle_conv2d(z, sd[f"{side}.fuse.weight"], sd[f"{side}.fuse.bias"], 1)
        for i in range(prop_blocks):
            x = _oracle_res_block(x, sd, f"{side}.body.{i}")
        return x

    t_len = frames.shape[0]
    feats = [extract(frames[t]) for t in range(t_len)]
    zero = np.zeros_like(feats[0])

    h_fwd = []
    hidden = zero
    for t in range(t_len):
        if t > 0:
            hidden = _oracle_warp_chw(hidden, flow_bwd[t - 1])
        hidden = branch("branch_fwd", feats[t], hidden)
        h_fwd.append(hidden)

    h_bwd = [None] * t_len
    hidden = zero
    for t in range(t_len - 1, -1, -1):
        if t < t_len - 1:
            hidden = _oracle_warp_chw(hidden, flow_fwd[t])
        hidden = branch("branch_bwd", feats[t], hidden)
        h_bwd[t] = hidden

    out = []
    for t in range(t_len):
        both = np.concatenate([h_fwd[t], h_bwd[t]], axis=0)
        out.append(_oracle_conv2d(both, sd["fusion.weight"], sd["fusion.bias"], 0))
    return np.stack(out)


def oracle_masked_warp_energy(frames: np.ndarray, velocity) -> float:
    """Masked warp residual of a uniformly translating clip, by direct
    indexing: warp pair residuals vanish wherever the integer-velocity
    source stays in view, and out-of-view pixels are excluded."""
    vx, vy = int(velocity[0]), int(velocity[1])
    t_len, h, w, _ = frames.shape
    per_pair = []
    for t in range(t_len - 1):
        acc, count = 0.0, 0
        for y in range(h):
            for x in range(w):
                sx, sy = x + vx, y + vy
                if not (0 <= sx <= w - 1 and 0 <= sy <= h - 1):
                    continue
                d = frames[t, y, x].astype(np.float64) - frames[t + 1, sy, sx].astype(np.float64)
                acc += float(np.dot(d, d))
                count += 1
        per_pair.append(acc / count)
    return sum(per_pair) / len(per_pair)


def oracle_frame_diff_energy(frames: np.ndarray) -> float:
    """Mean over pairs of the per-pixel squared frame difference (all pixels
    kept: the zero-flow mask passes both the consistency and in-view checks)."""
    t_len, h, w, _ = frames.shape
    per_pair = []
    for t in range(t_len - 1):
        acc = 0.0
        for y in range(h):
            for x in range(w):
                d = frames[t, y, x].astype(np.float64) - frames[t + 1, y, x].astype(np.float64)
                acc += float(np.dot(d, d))
        per_pair.append(acc / (h * w))
    return sum(per_pair) / len(per_pair)


# ---------------------------------------------------------------------------
# Shared experiment scenes
# ---------------------------------------------------------------------------

def blur_experiment_clips(size: int = 48, t_len: int = 6, blur_sigma: float = 2.0):
    """A layered scene whose motion is carried entirely by fine detail.

    A period-3 sinusoidal texture translates at (2, 0) px/frame over a
    static smooth vertical gradient. Blurring erases the texture (the only
    moving content), so flow estimated on the blurred copy collapses to
    zero while the sharp copy remains perfectly trackable.

    Returns:
        (gt_clip, blurred_clip) as VideoClips.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    tint = np.array([1.0, 0.97, 0.94])
    frames = np.empty((t_len, size, size, 3), dtype=np.float64)
    for t in range(t_len):
        tex = 0.2 * np.sin(2.0 * np.pi * (xx - 2.0 * t) / 3.0)
        base = 0.45 + 0.25 * yy / (size - 1) + tex
        frames[t] = base[:, :, None] * tint[None, None, :]
    gt = VideoClip(frames=np.clip(frames, 0.0, 1.0))
    k = gaussian_kernel_1d(blur_sigma)
    blurred = correlate1d(gt.frames, k, axis=1, mode="mirror")
    blurred = correlate1d(blurred, k, axis=2, mode="mirror")
    return gt, VideoClip(frames=np.clip(blurred, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Entry builders, grouped by module
# ---------------------------------------------------------------------------

def _videodata_entries() -> dict:
    from .videodata import bicubic_weights, degrade_bd, write_flo

    entries = {}

    # .flo byte layout against an independent struct-packed reference.
    flow = np.array(
        [[[1.0, -0.5], [0.25, 2.0]],
         [[-1.5, 3.0], [0.0, -0.25]]], dtype=np.float64)
    expected = oracle_flo_bytes(flow)
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "pair.flo"
        write_flo(flow, p)
        got = p.read_bytes()
    _require(got == expected, ".flo writer bytes disagree with the struct oracle")
    entries["videodata/flo_byte_layout"] = {
        "note": "2x2 flow serialized by hand with struct.pack: f32 magic "
                "202021.25, i32 w, i32 h, row-major interleaved (u, v), "
                "little-endian.",
        "params": {"flow": _py(flow)},
        "value": {"hex": expected.hex(), "n_bytes": len(expected)},
    }

    # Interior 4-tap weights of the half-phase bicubic downsampler.
    weights = [oracle_keys_cubic(t) for t in (1.5, 0.5, 0.5, 1.5)]
    w_lib, idx_lib = bicubic_weights(2, 2, 8)
    _require(np.allclose(w_lib, weights, atol=1e-15), "bicubic half-phase weights disagree")
    _require(list(idx_lib) == [3, 4, 5, 6], "bicubic tap indices disagree")
    entries["videodata/bicubic_half_phase"] = {
        "note": "Keys cubic (a=-0.5) at offsets (1.5, 0.5, 0.5, 1.5): the "
                "interior taps of every phase-0.5 downsample.",
        "params": {"a": -0.5, "offsets": [1.5, 0.5, 0.5, 1.5]},
        "value": weights,
    }

    # Truncated-Gaussian impulse response at the center.
    sigma = 1.6
    taps = oracle_gaussian_taps(sigma)
    radius = (len(taps) - 1) // 2
    _require(radius == 7, f"radius for sigma=1.6 should be 7, got {radius}")
    lib_taps = gaussian_kernel_1d(sigma)
    _require(np.allclose(lib_taps, taps, atol=1e-15), "gaussian taps disagree")
    # Push an impulse through the blur-downsample path: center (8, 8) of a
    # 16x16 frame is untouched by padding (8 - 7 >= 1) and survives the
    # stride-2 subsample at (4, 4).
    imp = np.zeros((1, 16, 16, 3))
    imp[0, 8, 8, :] = 1.0
    out = degrade_bd(VideoClip(frames=imp), sigma=sigma, scale=2)
    center2d = taps[radius] ** 2
    _require(abs(float(out.frames[0, 4, 4, 0]) - center2d) < 1e-15,
             "impulse center through degrade_bd disagrees with tap oracle")
    entries["videodata/gaussian_impulse_center"] = {
        "note": "Normalized center tap exp(0)/Z of the sigma=1.6 Gaussian "
                "truncated at radius ceil(4 sigma)=7; the 2D separable blur "
                "of an impulse peaks at its square.",
        "params": {"sigma": sigma, "radius": radius},
        "value": {"tap0": taps[radius], "center2d": center2d},
    }

    # Warping frame t+1 by the exact forward flow reproduces frame t.
    scene = {"pattern": "translating-texture", "velocity": [2, 1],
             "T": 3, "H": 32, "W": 48, "seed": 5}
    clip, fwd, _ = synth_sequence(SyntheticSceneSpec(
        pattern=scene["pattern"], velocity=tuple(scene["velocity"]),
        T=scene["T"], H=scene["H"], W=scene["W"], seed=scene["seed"]))
    vx, vy = scene["velocity"]
    worst = 0.0
    for t in range(scene["T"] - 1):
        for y in range(scene["H"] - vy):
            for x in range(scene["W"] - vx):
                d = abs(float(clip.frames[t, y, x, 0]) - float(clip.frames[t + 1, y + vy, x + vx, 0]))
                worst = max(worst, d)
    _require(worst < 1e-6, f"integer-velocity roundtrip error {worst} too large")
    entries["videodata/synth_warp_roundtrip"] = {
        "note": "Brute-force pixel indexing: frame t equals frame t+1 shifted "
                "by the integer velocity wherever the source stays in view.",
        "params": {"scene": scene, "tol": 1e-6},
        "value": {"max_interior_error": worst},
    }
    return entries


def _antialias_entries() -> dict:
    import torch

    from .antialias import (
        FeatureMap,
        hf_decompose,
        lowpass2d,
        lowpass_kernel_1d,
        shift_stability_signals,
        shift_stability_scores,
    )

    entries = {}

    ints = [1, -4, 6, -4, 1]
    alt_sum = sum(ints) / 16.0
    _require(alt_sum == 0.0, "alternating binomial sum must vanish")
    _require(float(np.dot(lowpass_kernel_1d(), [1, -1, 1, -1, 1])) == 0.0,
             "library kernel Nyquist response is not exactly zero")
    entries["antialias/kernel_nyquist_sum"] = {
        "note": "Frequency response of [1,4,6,4,1]/16 at Nyquist: "
                "(1-4+6-4+1)/16 computed in exact integer arithmetic.",
        "params": {"signed_taps": ints, "divisor": 16},
        "value": alt_sum,
    }

    size = 12
    board = oracle_checkerboard(size)
    lp_oracle = oracle_lowpass2d(board)
    interior = lp_oracle[2:-2, 2:-2]
    _require(float(np.abs(interior).max()) == 0.0, "oracle checkerboard interior not null")
    fm = FeatureMap(torch.from_numpy(board[None, None]).double())
    lp_lib = lowpass2d(fm).data[0, 0].numpy()
    _require(float(np.abs(lp_lib[2:-2, 2:-2]).max()) == 0.0,
             "library lowpass2d checkerboard interior not null")
    entries["antialias/checkerboard_interior_null"] = {
        "note": "A +-1 checkerboard alternates in both axes, so every "
                "interior 5x5 window sums to the Nyquist response 0; "
                "computed by direct 25-tap convolution.",
        "params": {"size": size, "border": 2},
        "value": {"max_abs_interior": 0.0},
    }

    k = [1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16]
    outer = [[k[i] * k[j] for j in range(5)] for i in range(5)]
    impulse = np.zeros((9, 9))
    impulse[4, 4] = 1.0
    resp = oracle_lowpass2d(impulse)[2:7, 2:7]
    _require(np.array_equal(resp, np.array(outer)), "impulse response is not the outer product")
    lib_resp = lowpass2d(FeatureMap(torch.from_numpy(impulse[None, None]).double())).data[0, 0].numpy()
    _require(float(np.abs(lib_resp[2:7, 2:7] - np.array(outer)).max()) < 1e-15,
             "library impulse response disagrees with outer product")
    entries["antialias/impulse_outer_product"] = {
        "note": "Center 5x5 of the impulse response of the separable "
                "binomial filter equals kernel (x) kernel; all taps are "
                "exact binary fractions.",
        "params": {"map_size": 9, "center": 4},
        "value": outer,
    }

    signals = shift_stability_signals()
    rows = oracle_shift_scores(signals)
    lib_rows = shift_stability_scores(signals)
    for (name_o, bp_o, st_o), (name_l, bp_l, st_l) in zip(rows, lib_rows):
        _require(name_o == name_l, "signal order mismatch")
        _require(abs(bp_o - bp_l) < 1e-9 and abs(st_o - st_l) < 1e-9,
                 f"shift-stability scores disagree on {name_o}")
        _require(bp_o < st_o, f"BlurPool does not win strictly on {name_o}")
    entries["antialias/shift_stability_suite"] = {
        "note": "L2 distance between the downsampled 1-px-shifted signal and "
                "the half-pixel Fourier shift of the downsampled original, "
                "4-px interior margin, for all 32 suite signals; blur path "
                "recomputed by direct 25-tap convolution. BlurPool must win "
                "on every signal.",
        "params": {"margin": 4, "size": 32, "n_signals": len(rows)},
        "value": [[n, _sig(bp, 12), _sig(st, 12)] for n, bp, st in rows],
    }

    split = hf_decompose(FeatureMap(torch.from_numpy(board[None, None]).double()))
    lf_in = split.lf.data[0, 0].numpy()[2:-2, 2:-2]
    hf_diff = (split.hf.data - torch.from_numpy(board[None, None]).double())[0, 0].numpy()[2:-2, 2:-2]
    _require(float(np.abs(lf_in).max()) == 0.0, "hf_decompose lf interior not null")
    _require(float(np.abs(hf_diff).max()) == 0.0, "hf residual does not equal input in interior")
    entries["antialias/hf_checkerboard_identity"] = {
        "note": "Checkerboard interior: the low-pass vanishes (Nyquist null), "
                "so the high-frequency residual f - lowpass(f) is the input.",
        "params": {"size": size, "border": 2},
        "value": {"max_abs_lf_interior": 0.0, "max_abs_hf_minus_input_interior": 0.0},
    }
    return entries


def _flowops_entries() -> dict:
    from .flowops import (
        OCCLUSION_ABS,
        OCCLUSION_REL,
        backward_warp,
        estimate_flow_classical,
        occlusion_mask,
    )
    from .videodata import FlowField

    entries = {}

    img = np.array([[1.0, 2.0, 3.0, 4.0]])
    flow = np.zeros((1, 4, 2))
    flow[..., 0] = 1.0
    expected = [[2.0, 3.0, 4.0, 4.0]]
    got = oracle_bilinear_warp(img, flow)
    _require(got.tolist() == expected, "integer-shift warp oracle broke")
    _require(backward_warp(img, flow).tolist() == expected,
             "library warp disagrees on the integer row")
    entries["flowops/warp_integer_row"] = {
        "note": "Constant flow (1, 0) on [[1,2,3,4]]: each pixel reads its "
                "right neighbor, the last column clamps to the edge.",
        "params": {"image": [[1.0, 2.0, 3.0, 4.0]], "flow": [1.0, 0.0]},
        "value": expected,
    }

    img2 = np.array([[0.0, 1.0]])
    flow2 = np.zeros((1, 2, 2))
    flow2[..., 0] = 0.5
    expected2 = [[0.5, 1.0]]
    _require(oracle_bilinear_warp(img2, flow2).tolist() == expected2,
             "half-pixel warp oracle broke")
    _require(backward_warp(img2, flow2).tolist() == expected2,
             "library warp disagrees on the half-pixel sample")
    entries["flowops/warp_half_pixel"] = {
        "note": "Constant flow (0.5, 0) on [[0, 1]]: the interior sample "
                "bilinearly mixes to 0.5, the boundary clamps to 1.",
        "params": {"image": [[0.0, 1.0]], "flow": [0.5, 0.0]},
        "value": expected2,
    }

    h = w = 8
    f = np.zeros((1, h, w, 2))
    f[..., 0] = 2.0
    g = -f
    lhs_pass = 0.0
    rhs = OCCLUSION_REL * (4.0 + 4.0) + OCCLUSION_ABS
    m = occlusion_mask(FlowField(f, "forward"), FlowField(g, "backward"))
    _require(int(m.mask.min()) == 1, "consistent constant flows must pass everywhere")
    entries["flowops/occlusion_consistent_pass"] = {
        "note": "f=(2,0), g=(-2,0): the warped backward flow is the same "
                "constant, so |f+g|^2 = 0 <= 0.01(4+4)+0.5.",
        "params": {"size": [h, w], "flow_fwd": [2.0, 0.0], "flow_bwd": [-2.0, 0.0]},
        "value": {"lhs": lhs_pass, "rhs": rhs, "mask_fraction": 1.0},
    }

    lhs_fail = 16.0
    m2 = occlusion_mask(FlowField(f, "forward"), FlowField(f.copy(), "backward"))
    _require(int(m2.mask.max()) == 0, "inconsistent constant flows must fail everywhere")
    entries["flowops/occlusion_inconsistent_fail"] = {
        "note": "f = g = (2,0): |f+g|^2 = 16 exceeds 0.01(4+4)+0.5 = 0.58, "
                "every pixel is marked occluded.",
        "params": {"size": [h, w], "flow_fwd": [2.0, 0.0], "flow_bwd": [2.0, 0.0]},
        "value": {"lhs": lhs_fail, "rhs": rhs, "mask_fraction": 0.0},
    }

    scene = {"pattern": "translating-texture", "velocity": [2, 0],
             "T": 2, "H": 64, "W": 64, "seed": 3}
    clip, _, _ = synth_sequence(SyntheticSceneSpec(
        pattern=scene["pattern"], velocity=tuple(scene["velocity"]),
        T=scene["T"], H=scene["H"], W=scene["W"], seed=scene["seed"]))
    est = estimate_flow_classical(clip.frames[0], clip.frames[1], levels=2, iters=3)
    margin = 8
    med = [float(np.median(est[margin:-margin, margin:-margin, c])) for c in (0, 1)]
    _require(abs(med[0] - 2.0) <= 0.25 and abs(med[1] - 0.0) <= 0.25,
             f"classical median flow {med} misses (2, 0) by more than 0.25 px")
    entries["flowops/classical_translation_median"] = {
        "note": "Pyramidal Lucas-Kanade on a texture translating at exactly "
                "(2, 0) px/frame; the truth comes from the synthetic-scene "
                "construction, the interior median must land within 0.25 px.",
        "params": {"scene": scene, "levels": 2, "iters": 3, "margin": margin,
                   "tol_px": 0.25, "true_flow": [2.0, 0.0]},
        "value": {"measured_median": [_sig(med[0]), _sig(med[1])]},
    }

    suite = [
        {"pattern": "translating-texture", "velocity": [1, 0], "seed": 20},
        {"pattern": "translating-texture", "velocity": [2, 0], "seed": 21},
        {"pattern": "translating-texture", "velocity": [0, 3], "seed": 22},
        {"pattern": "translating-texture", "velocity": [-2, 1], "seed": 23},
        {"pattern": "translating-texture", "velocity": [2, -2], "seed": 24},
        {"pattern": "translating-texture", "velocity": [0, -4], "seed": 25},
        {"pattern": "gradient-blob", "velocity": [3, 0], "seed": 26},
        {"pattern": "gradient-blob", "velocity": [-2, 0], "seed": 27},
    ]
    per_scene = []
    for sc in suite:
        clip, _, _ = synth_sequence(SyntheticSceneSpec(
            pattern=sc["pattern"], velocity=tuple(sc["velocity"]),
            T=2, H=64, W=64, seed=sc["seed"]))
        est = estimate_flow_classical(clip.frames[0], clip.frames[1], levels=3, iters=3)
        inner = est[margin:-margin, margin:-margin]
        epe = np.sqrt((inner[..., 0] - sc["velocity"][0]) ** 2
                      + (inner[..., 1] - sc["velocity"][1]) ** 2)
        per_scene.append(float(epe.mean()))
    aepe = float(np.mean(per_scene))
    _require(aepe < 0.5, f"suite AEPE {aepe} is not below 0.5 px")
    entries["flowops/classical_suite_aepe"] = {
        "note": "Average endpoint error over the pinned translation suite "
                "(|v| <= 4 px/frame, 64x64, T=2), interior margin 8; true "
                "flows are the exact scene velocities.",
        "params": {"suite": suite, "T": 2, "H": 64, "W": 64, "levels": 3,
                   "iters": 3, "margin": margin, "bound_px": 0.5},
        "value": {"per_scene_epe": [_sig(v) for v in per_scene],
                  "measured_aepe": _sig(aepe)},
    }
    return entries


def _propagation_entries() -> dict:
    import torch

    from .propagation import FlowGuidedPropagation, PropagationConfig

    entries = {}

    torch.manual_seed(11)
    module = FlowGuidedPropagation(PropagationConfig(
        feat_channels=4, extract_blocks=2, prop_blocks=2)).double()
    rng = np.random.default_rng(12)
    frames = torch.from_numpy(rng.random((3, 3, 8, 8))).double()
    with torch.no_grad():
        out = module.extract_features(frames).numpy()
    rounded = np.round(out, 10) + 0.0
    digest = hashlib.sha256(rounded.tobytes()).hexdigest()
    entries["propagation/extract_features_golden"] = {
        "note": "Regression pin: sha256 of the feature extractor's output "
                "(double precision, rounded to 10 decimals) for the seeded "
                "build and input below.",
        "params": {"torch_seed": 11, "input_seed": 12, "frames_shape": [3, 3, 8, 8],
                   "feat_channels": 4, "extract_blocks": 2, "prop_blocks": 2,
                   "round_decimals": 10},
        "value": {"sha256": digest, "output_shape": list(out.shape),
                  "output_sum": _sig(float(out.sum()), 12)},
    }

    torch.manual_seed(21)
    tiny = FlowGuidedPropagation(PropagationConfig(
        feat_channels=2, extract_blocks=1, prop_blocks=1)).double()
    rng = np.random.default_rng(22)
    frames_np = rng.random((2, 3, 4, 4))
    flow_fwd = np.full((1, 4, 4, 2), 0.0)
    flow_fwd[..., 0] = 0.5
    flow_fwd[..., 1] = -0.25
    flow_bwd = -flow_fwd
    sd = {k: v.detach().numpy().astype(np.float64) for k, v in tiny.state_dict().items()}
    ref = oracle_two_step_propagation(sd, frames_np, flow_fwd, flow_bwd,
                                      extract_blocks=1, prop_blocks=1)
    with torch.no_grad():
        got = tiny(
            torch.from_numpy(frames_np).double(),
            torch.from_numpy(flow_fwd).double(),
            torch.from_numpy(flow_bwd).double(),
        ).feats.numpy()
    diff = float(np.abs(got - ref).max())
    _require(diff < 1e-6, f"two-step recurrence disagrees with the oracle by {diff}")
    entries["propagation/two_step_reference"] = {
        "note": "T=2 bidirectional recurrence on 4x4 frames, replayed by a "
                "straight-line numpy implementation (naive convolutions, "
                "per-pixel warps) on the module's own weights.",
        "params": {"torch_seed": 21, "input_seed": 22, "flow_fwd": [0.5, -0.25],
                   "feat_channels": 2, "extract_blocks": 1, "prop_blocks": 1,
                   "tol": 1e-6},
        "value": {"expected": _py(np.round(ref, 12)),
                  "measured_max_diff": _sig(diff, 3)},
    }

    torch.manual_seed(31)
    sym = FlowGuidedPropagation(PropagationConfig(
        feat_channels=3, extract_blocks=1, prop_blocks=1,
        share_direction_weights=True)).double()
    rng = np.random.default_rng(32)
    frame = rng.random((1, 3, 8, 8))
    t_len = 4
    static = torch.from_numpy(np.repeat(frame, t_len, axis=0)).double()
    zeros = torch.zeros((t_len - 1, 8, 8, 2), dtype=torch.float64)
    with torch.no_grad():
        feats = sym(static, zeros, zeros).feats.numpy()
    asym = float(max(np.abs(feats[t] - feats[t_len - 1 - t]).max() for t in range(t_len)))
    _require(asym < 1e-6, f"palindrome asymmetry {asym} with shared direction weights")
    entries["propagation/palindrome_symmetry"] = {
        "note": "Static clip, zero flows, shared direction weights and "
                "mirrored fusion halves: hidden states at t and T-1-t see "
                "identical recurrences, so outputs must match.",
        "params": {"torch_seed": 31, "input_seed": 32, "t_len": t_len,
                   "size": 8, "feat_channels": 3, "tol": 1e-6},
        "value": {"measured_max_asymmetry": _sig(asym, 3)},
    }

    entries["propagation/v1v2_rwe_ordering"] = {
        "note": "Experiment pin for the ablation ordering: adding "
                "propagation (V2) must lower the reference warping error "
                "against the temporal-only variant (V1), median over seeds.",
        "params": {
            "variants": ["V1-temporal", "V2-propagation"],
            "seeds": [0, 1, 2],
            "iters": 400,
            "aggregate": "median",
            "train_set": {"n_clips": 4, "t_len": 6, "lr_size": 8, "scale": 4, "seed": 0},
            "eval_set": {"n_clips": 2, "t_len": 6, "lr_size": 8, "scale": 4, "seed": 100},
        },
        "value": {"expect": "median e_ref_warp(V2) < median e_ref_warp(V1)"},
    }
    return entries


def _generator_entries() -> dict:
    import torch

    from .antialias import FeatureMap
    from .generator import ModelConfig, build_generator, hf_shuttle_skip, parameter_count

    entries = {}

    toy_kwargs = {"k": 2, "base_channels": 8, "feat_channels": 8,
                  "extract_blocks": 2, "prop_blocks": 2}
    model = build_generator(ModelConfig(**toy_kwargs), seed=0)
    count = parameter_count(model)
    entries["generator/param_count_k2"] = {
        "note": "Regression pin: total trainable parameters of the toy k=2 "
                "configuration, counted once and frozen.",
        "params": {"model": toy_kwargs},
        "value": count,
    }

    entries["generator/zero_init_break_one_step"] = {
        "note": "Experiment pin: the per-frame/video equivalence of the "
                "zero-initialized temporal layers must break (diff > 0) "
                "after one optimizer step with a nonzero temporal gradient.",
        "params": {"model": toy_kwargs, "seed": 0, "t_len": 3, "size": 16,
                   "lr": 1e-2},
        "value": {"expect": "max |video - per-frame| > 0 after one step"},
    }

    size = 12
    board = oracle_checkerboard(size)
    enc = torch.from_numpy(np.stack([board] * 2)[None]).double()   # (1, 2, 12, 12)
    dec = torch.zeros((1, 3, size, size), dtype=torch.float64)
    fused = hf_shuttle_skip(FeatureMap(enc), FeatureMap(dec))
    skip_part = fused.data[:, dec.shape[1]:]
    diff = float((skip_part - enc)[..., 2:-2, 2:-2].abs().max())
    _require(diff == 0.0, "checkerboard skip is not the identity in the interior")
    entries["generator/hf_skip_checkerboard"] = {
        "note": "High-frequency shuttle on a +-1 checkerboard feature: the "
                "low-pass vanishes in the interior, so the shuttled skip "
                "equals the encoder feature there.",
        "params": {"size": size, "enc_channels": 2, "dec_channels": 3, "border": 2},
        "value": {"max_abs_interior_diff": 0.0},
    }

    entries["generator/chunk_direct_call"] = {
        "note": "Contract pin: with T=8 and chunk=4, output frames 0-3 of "
                "chunked inference equal a direct call on the first chunk's "
                "features, bitwise.",
        "params": {"t_len": 8, "chunk": 4,
                   "model": {"k": 2, "base_channels": 8, "feat_channels": 8,
                             "extract_blocks": 1, "prop_blocks": 1}},
        "value": {"expect": "bitwise equality per chunk"},
    }
    return entries


def _adversarial_entries() -> dict:
    import torch
    import torch.nn as nn

    from .adversarial import perceptual_distance_frames, r1_penalty

    entries = {}

    eps = 1e-3
    val = math.sqrt(1.0 + eps * eps)
    entries["adversarial/charbonnier_unit_diff"] = {
        "note": "sqrt(diff^2 + eps^2) at diff=1, eps=1e-3, straight from "
                "the formula.",
        "params": {"diff": 1.0, "eps": eps},
        "value": val,
    }

    rng = np.random.default_rng(46)
    xs = rng.uniform(0.01, 2.0, size=100) * rng.choice([-1.0, 1.0], size=100)
    h_fd = 1e-6
    worst = 0.0
    for x in xs:
        analytic = x / math.sqrt(x * x + eps * eps)
        fd = (math.sqrt((x + h_fd) ** 2 + eps * eps)
              - math.sqrt((x - h_fd) ** 2 + eps * eps)) / (2 * h_fd)
        worst = max(worst, abs(fd - analytic) / abs(analytic))
    _require(worst < 1e-4, f"charbonnier FD oracle rel err {worst}")
    entries["adversarial/charbonnier_grad_fd"] = {
        "note": "Analytic d/dx sqrt(x^2+eps^2) = x/sqrt(x^2+eps^2) against "
                "central differences at 100 seeded points with |x| >= 0.01.",
        "params": {"seed": 46, "n_points": 100, "eps": eps, "h": h_fd,
                   "bound": 1e-4},
        "value": {"measured_max_rel_err": _sig(worst, 3)},
    }

    entries["adversarial/gan_loss_ln2"] = {
        "note": "Generator loss at d_fake = 0: softplus(0) = ln 2.",
        "params": {"d_fake": 0.0},
        "value": math.log(2.0),
    }

    w = np.random.default_rng(41).standard_normal(6) * 0.3
    norm_sq = float(np.dot(w, w))
    lin = nn.Linear(6, 1, bias=False).double()
    with torch.no_grad():
        lin.weight[:] = torch.from_numpy(w[None])
    x = torch.from_numpy(np.random.default_rng(42).standard_normal((3, 6))).double()
    pen = float(r1_penalty(lambda v: lin(v).squeeze(-1), x).detach())
    _require(abs(pen - norm_sq) < 1e-12, f"linear R1 {pen} != |w|^2 {norm_sq}")
    entries["adversarial/r1_linear_disc"] = {
        "note": "D(x) = <w, x> has gradient w everywhere, so the penalty "
                "(mean squared gradient norm) is exactly |w|^2.",
        "params": {"weight_seed": 41, "input_seed": 42, "dim": 6},
        "value": norm_sq,
    }

    torch.manual_seed(43)
    mlp = nn.Sequential(nn.Linear(6, 8), nn.Tanh(), nn.Linear(8, 1)).double()
    x0 = torch.from_numpy(np.random.default_rng(44).standard_normal((2, 6))).double()
    pen = float(r1_penalty(lambda v: mlp(v).squeeze(-1), x0).detach())
    h_fd = 1e-5
    fd_total = 0.0
    with torch.no_grad():
        for b in range(x0.shape[0]):
            acc = 0.0
            for i in range(x0.shape[1]):
                xp, xm = x0.clone(), x0.clone()
                xp[b, i] += h_fd
                xm[b, i] -= h_fd
                g = (float(mlp(xp[b:b + 1])) - float(mlp(xm[b:b + 1]))) / (2 * h_fd)
                acc += g * g
            fd_total += acc
    fd_pen = fd_total / x0.shape[0]
    rel = abs(fd_pen - pen) / abs(pen)
    _require(rel < 1e-3, f"R1 FD rel err {rel}")
    entries["adversarial/r1_grad_fd"] = {
        "note": "R1 value of a tiny MLP against a finite-difference "
                "reconstruction of the input gradient.",
        "params": {"torch_seed": 43, "input_seed": 44, "h": h_fd, "bound": 1e-3},
        "value": {"measured_rel_err": _sig(rel, 3), "measured_penalty": _sig(pen)},
    }

    rng = np.random.default_rng(47)
    base = rng.random((2, 12, 12, 3))
    noise = np.random.default_rng(48).standard_normal(base.shape)
    sigmas = [0.01, 0.05, 0.1, 0.15, 0.2]
    dists = [perceptual_distance_frames(base, base + s * noise) for s in sigmas]
    _require(all(b > a for a, b in zip(dists, dists[1:])),
             f"perceptual distances not strictly increasing: {dists}")
    entries["adversarial/perceptual_noise_monotone"] = {
        "note": "Perceptual distance against the same image plus growing "
                "additive noise must increase strictly with the amplitude.",
        "params": {"image_seed": 47, "noise_seed": 48, "sigmas": sigmas,
                   "shape": [2, 12, 12, 3]},
        "value": {"measured": [_sig(d) for d in dists]},
    }

    entries["adversarial/total_loss_linearity"] = {
        "note": "Experiment pin: the gradient of the weighted total loss "
                "w.r.t. generator parameters equals the weighted sum of "
                "per-term gradients (autodiff linearity), max rel diff "
                "below 1e-6.",
        "params": {"seed": 51, "bound": 1e-6},
        "value": {"expect": "grad(total) == sum of weighted per-term grads"},
    }

    entries["adversarial/toy_convergence"] = {
        "note": "Experiment pin: adversarial training on the 8->32 px "
                "synthetic set must at least halve the Charbonnier term "
                "between the early and late iteration windows, median over "
                "seeds.",
        "params": {
            "iters": 2000,
            "early_window": [100, 200],
            "late_window": [1900, 2000],
            "ratio_bound": 0.5,
            "seeds": [0, 1, 2],
            "dataset": {"n_clips": 4, "t_len": 6, "lr_size": 8, "scale": 4, "seed": 0},
        },
        "value": {"expect": "mean(char[1900:2000]) <= 0.5 * mean(char[100:200])"},
    }

    entries["adversarial/resume_bitwise"] = {
        "note": "Experiment pin: training 5 iterations straight equals "
                "training 3, checkpointing, and resuming for 2 more, with "
                "bitwise-identical loss rows and final weights.",
        "params": {"iters": 5, "checkpoint_every": 3, "seed": 0},
        "value": {"expect": "bitwise identical loss curve and weights"},
    }
    return entries


def _metrics_entries() -> dict:
    from .flowops import ClassicalEstimator, ExactEstimator
    from .metrics import ref_warping_error, warping_error

    entries = {}

    entries["metrics/psnr_uniform_01"] = {
        "note": "Uniform |diff| = 0.1 on the [0, 1] range: "
                "10 log10(1 / 0.01) = 20 dB.",
        "params": {"diff": 0.1, "peak": 1.0},
        "value": 20.0,
    }
    entries["metrics/psnr_uniform_001"] = {
        "note": "Uniform |diff| = 0.01: 10 log10(1 / 0.0001) = 40 dB.",
        "params": {"diff": 0.01, "peak": 1.0},
        "value": 40.0,
    }

    c1 = (0.01 * 1.0) ** 2
    lum = (2 * 0.25 * 0.75 + c1) / (0.25**2 + 0.75**2 + c1)
    entries["metrics/ssim_luminance_exact"] = {
        "note": "Constant 0.25 vs constant 0.75: zero variances reduce SSIM "
                "to the luminance term (2 m_x m_y + C1)/(m_x^2 + m_y^2 + C1); "
                "the contrast-structure factor is C2/C2 = 1.",
        "params": {"mean_a": 0.25, "mean_b": 0.75, "c1": c1},
        "value": lum,
    }

    scene = {"pattern": "translating-texture", "velocity": [2, 1],
             "T": 4, "H": 48, "W": 48, "seed": 11}
    spec = SyntheticSceneSpec(pattern=scene["pattern"], velocity=tuple(scene["velocity"]),
                              T=scene["T"], H=scene["H"], W=scene["W"], seed=scene["seed"])
    clip, _, _ = synth_sequence(spec)
    oracle_val = oracle_masked_warp_energy(clip.frames, scene["velocity"])
    _require(oracle_val < 1e-4, f"exact-flow warp residual {oracle_val} above bound")
    lib_val = warping_error(clip, ExactEstimator(spec))
    _require(abs(lib_val - oracle_val) < 1e-12,
             f"warping_error {lib_val} disagrees with direct-indexing oracle {oracle_val}")
    entries["metrics/ewarp_exact_flow_bound"] = {
        "note": "Integer-velocity translation scored with its exact flow: "
                "every in-view pixel of frame t+1 reproduces frame t from "
                "the same canvas sample, so the masked residual vanishes.",
        "params": {"scene": scene, "bound": 1e-4},
        "value": {"oracle": oracle_val},
    }

    scene_b = {"pattern": "translating-texture", "velocity": [2, 1],
               "T": 5, "H": 32, "W": 32, "seed": 13}
    spec_b = SyntheticSceneSpec(pattern=scene_b["pattern"], velocity=tuple(scene_b["velocity"]),
                                T=scene_b["T"], H=scene_b["H"], W=scene_b["W"],
                                seed=scene_b["seed"])
    gt, _, _ = synth_sequence(spec_b)
    energy = oracle_frame_diff_energy(gt.frames)
    _require(energy > 0.0, "moving clip has zero frame-difference energy")
    black = VideoClip(frames=np.zeros_like(gt.frames))
    lib_energy = ref_warping_error(gt, black, ClassicalEstimator(levels=2))
    _require(abs(lib_energy - energy) < 1e-9,
             f"black-gen RWE {lib_energy} disagrees with frame-diff oracle {energy}")
    entries["metrics/black_gen_rwe_energy"] = {
        "note": "All-black generated frames have exactly zero estimated "
                "flow, so the reference warping error equals the masked "
                "frame-difference energy of the ground truth, summed by "
                "brute force.",
        "params": {"scene": scene_b, "estimator_levels": 2},
        "value": {"oracle": _sig(energy, 12)},
    }

    blur_params = {"size": 48, "t_len": 6, "blur_sigma": 2.0, "estimator_levels": 1}
    gt_clip, blur_clip = blur_experiment_clips(
        size=blur_params["size"], t_len=blur_params["t_len"],
        blur_sigma=blur_params["blur_sigma"])
    est = ClassicalEstimator(levels=blur_params["estimator_levels"])
    ew_gt = warping_error(gt_clip, est)
    ew_blur = warping_error(blur_clip, est)
    rwe_gt = ref_warping_error(gt_clip, gt_clip, est)
    rwe_blur = ref_warping_error(gt_clip, blur_clip, est)
    _require(ew_blur < ew_gt,
             f"blurred copy does not lower e_warp: {ew_blur} vs {ew_gt}")
    _require(rwe_blur > rwe_gt,
             f"blurred copy does not raise e_ref_warp: {rwe_blur} vs {rwe_gt}")
    entries["metrics/blur_vs_gt_directional"] = {
        "note": "Layered scene whose motion lives in fine detail: blurring "
                "erases it, so the blurred copy self-warps almost perfectly "
                "(lower e_warp) while its near-zero flows misalign the "
                "sharp ground truth (higher e_ref_warp).",
        "params": blur_params,
        "value": {"measured_e_warp_gt": _sig(ew_gt),
                  "measured_e_warp_blur": _sig(ew_blur),
                  "measured_rwe_gt": _sig(rwe_gt),
                  "measured_rwe_blur": _sig(rwe_blur)},
    }
    return entries


def _harness_entries() -> dict:
    return {
        "harness/evaluate_blur_rwe_cli": {
            "note": "Experiment pin: running the evaluate command on the "
                    "blurred copy of the layered scene must report a higher "
                    "e_ref_warp than evaluating the ground truth against "
                    "itself.",
            "params": {"size": 48, "t_len": 6, "blur_sigma": 2.0,
                       "flow": "classical"},
            "value": {"expect": "report.e_ref_warp(blurred) > report.e_ref_warp(gt)"},
        }
    }


def _docs_entries() -> dict:
    entries = {}
    entries["docs/softplus_zero"] = {
        "note": "softplus(0) = ln(1 + e^0) = ln 2.",
        "params": {"x": 0.0},
        "value": 0.6931471805599453,
    }
    _require(math.log(2.0) == 0.6931471805599453, "ln 2 literal drifted")

    k_int = [1, 4, 6, 4, 1]
    outer = [[(k_int[i] * k_int[j]) / 256.0 for j in range(5)] for i in range(5)]
    entries["docs/impulse_5x5_outer"] = {
        "note": "The separable filter's impulse response table: "
                "([1,4,6,4,1]/16) (x) ([1,4,6,4,1]/16), integer products "
                "over 256.",
        "params": {"taps": k_int, "divisor": 16},
        "value": outer,
    }
    return entries


# ---------------------------------------------------------------------------
# Registry assembly
# ---------------------------------------------------------------------------

def build_registry() -> dict:
    """Run every oracle and assemble the full fixture registry."""
    entries = {}
    for builder in (
        _videodata_entries,
        _antialias_entries,
        _flowops_entries,
        _propagation_entries,
        _generator_entries,
        _adversarial_entries,
        _metrics_entries,
        _harness_entries,
        _docs_entries,
    ):
        part = builder()
        overlap = set(part) & set(entries)
        _require(not overlap, f"duplicate fixture keys: {sorted(overlap)}")
        entries.update(part)
    missing = set(FIXTURE_KEYS) - set(entries)
    extra = set(entries) - set(FIXTURE_KEYS)
    _require(not missing, f"registry is missing entries: {sorted(missing)}")
    _require(not extra, f"registry has unlisted entries: {sorted(extra)}")
    return entries


def registry_text(entries: dict) -> str:
    return json.dumps(_py(entries), indent=2, sort_keys=True) + "\n"


def generate_fixtures(out_dir) -> Path:
    """Write fixtures.json under `out_dir` and return the directory path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / FIXTURE_FILE_NAME).write_text(registry_text(build_registry()))
    return out_dir


def load_fixtures(path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / FIXTURE_FILE_NAME
    return json.loads(path.read_text())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Regenerate the golden fixture registry.")
    parser.add_argument("out_dir", help="directory that receives fixtures.json")
    args = parser.parse_args(argv)
    out = generate_fixtures(args.out_dir)
    print(f"wrote {out / FIXTURE_FILE_NAME}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
