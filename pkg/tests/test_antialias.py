"""Low-pass kernel, frequency split, BlurPool, and shift stability."""

import numpy as np
import pytest
import torch

from vsrlab.antialias import (
    BlurPool2d,
    FeatureMap,
    StridedDown2d,
    blurpool_downsample,
    hf_decompose,
    lowpass2d,
    lowpass_kernel_1d,
    reflect_indices,
    shift_stability_scores,
    shift_stability_signals,
)
from vsrlab.errors import DataError


def _fmap(arr: np.ndarray, level: int = 0) -> FeatureMap:
    return FeatureMap(torch.from_numpy(arr).double(), level=level)


def _checkerboard(size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    return ((yy + xx) % 2 * 2.0 - 1.0).astype(np.float64)


def test_kernel_taps_and_nyquist_null(fx):
    entry = fx("antialias/kernel_nyquist_sum")
    k = lowpass_kernel_1d()
    assert np.allclose(k * entry["params"]["divisor"], [1, 4, 6, 4, 1])
    assert abs(k.sum() - 1.0) < 1e-15
    # Frequency response at the fold is the alternating-sign tap sum.
    signed = np.array(entry["params"]["signed_taps"]) / entry["params"]["divisor"]
    assert abs(signed.sum() - entry["value"]) < 1e-15


def test_impulse_outer_product_fixture(fx):
    entry = fx("antialias/impulse_outer_product")
    n = entry["params"]["map_size"]
    c = entry["params"]["center"]
    img = np.zeros((1, 1, n, n))
    img[0, 0, c, c] = 1.0
    out = lowpass2d(_fmap(img)).data[0, 0].numpy()
    assert np.allclose(out[c - 2 : c + 3, c - 2 : c + 3], entry["value"], atol=1e-15)
    k = lowpass_kernel_1d()
    assert np.allclose(entry["value"], np.outer(k, k), atol=1e-15)


def test_checkerboard_interior_null_fixture(fx):
    entry = fx("antialias/checkerboard_interior_null")
    n = entry["params"]["size"]
    b = entry["params"]["border"]
    board = _checkerboard(n)[None, None]
    out = lowpass2d(_fmap(board)).data[0, 0].numpy()
    inner = out[b:-b, b:-b]
    assert np.max(np.abs(inner)) <= entry["value"]["max_abs_interior"] + 1e-15


def test_hf_checkerboard_identity_fixture(fx):
    entry = fx("antialias/hf_checkerboard_identity")
    n = entry["params"]["size"]
    b = entry["params"]["border"]
    board = _checkerboard(n)[None, None]
    split = hf_decompose(_fmap(board))
    lf = split.lf.data[0, 0].numpy()
    hf = split.hf.data[0, 0].numpy()
    assert np.max(np.abs(lf[b:-b, b:-b])) <= entry["value"]["max_abs_lf_interior"] + 1e-15
    assert np.max(np.abs((hf - board[0, 0])[b:-b, b:-b])) <= (
        entry["value"]["max_abs_hf_minus_input_interior"] + 1e-15
    )


def test_hf_decompose_reconstructs_exactly():
    rng = np.random.default_rng(0)
    for trial in range(20):
        arr = rng.standard_normal((2, 3, 10, 12))
        split = hf_decompose(_fmap(arr))
        recon = (split.lf.data + split.hf.data).numpy()
        assert np.max(np.abs(recon - arr)) < 1e-12


def test_reflect_indices_small_sizes():
    # pad 2 on length 6: edge-excluding reflection [2, 1 | 0..5 | 4, 3]
    assert reflect_indices(6, 2).tolist() == [2, 1, 0, 1, 2, 3, 4, 5, 4, 3]
    # n == 2 wraps with period 2n - 2 = 2
    assert reflect_indices(2, 2).tolist() == [0, 1, 0, 1, 0, 1]
    # degenerate single-sample axis
    assert reflect_indices(1, 2).tolist() == [0, 0, 0, 0, 0]


def test_feature_map_validation():
    with pytest.raises(DataError):
        FeatureMap(torch.zeros(3, 4, 4), level=0)  # missing dim
    with pytest.raises(DataError):
        FeatureMap(torch.zeros(1, 3, 4, 4), level=5)
    bad = torch.zeros(1, 1, 4, 4)
    bad[0, 0, 0, 0] = float("nan")
    with pytest.raises(DataError):
        FeatureMap(bad, level=0)


def test_lowpass_requires_five_pixels():
    with pytest.raises(DataError):
        lowpass2d(_fmap(np.zeros((1, 1, 4, 8))))


def test_blurpool_halves_and_matches_manual():
    rng = np.random.default_rng(1)
    arr = rng.standard_normal((1, 1, 12, 16))
    out = blurpool_downsample(_fmap(arr))
    assert out.data.shape == (1, 1, 6, 8)
    assert out.level == 1
    # Identity-conv path equals blur followed by stride-2 picks.
    from vsrlab.antialias import lowpass2d_tensor

    manual = lowpass2d_tensor(torch.from_numpy(arr).double())[..., ::2, ::2]
    assert torch.allclose(out.data, manual)


def test_blurpool_rejects_odd_or_tiny():
    with pytest.raises(DataError):
        blurpool_downsample(_fmap(np.zeros((1, 1, 7, 8))))
    with pytest.raises(DataError):
        blurpool_downsample(_fmap(np.zeros((1, 1, 4, 4))))


def test_blurpool_module_shapes():
    x = torch.randn(2, 3, 16, 16)
    assert BlurPool2d(3, 5)(x).shape == (2, 5, 8, 8)
    assert StridedDown2d(3, 5)(x).shape == (2, 5, 8, 8)


def test_shift_stability_suite_fixture(fx):
    entry = fx("antialias/shift_stability_suite")
    signals = shift_stability_signals(size=entry["params"]["size"])
    assert len(signals) == entry["params"]["n_signals"]
    scores = shift_stability_scores(signals)
    assert len(scores) == len(entry["value"])
    for (name, bp, st), (ref_name, ref_bp, ref_st) in zip(scores, entry["value"]):
        assert name == ref_name
        assert abs(bp - ref_bp) < 1e-7
        assert abs(st - ref_st) < 1e-7
        assert bp < st, f"BlurPool must win strictly on {name}"
