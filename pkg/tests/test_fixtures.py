"""The fixture registry itself: coverage of keys, regeneration, oracles."""

import numpy as np

import torch

from conftest import FIXTURE_PATH
from vsrlab.antialias import lowpass2d_tensor
from vsrlab.fixtures import (
    FIXTURE_KEYS,
    _sig,
    build_registry,
    generate_fixtures,
    load_fixtures,
    oracle_bilinear_warp,
    oracle_checkerboard,
    oracle_keys_cubic,
    oracle_lowpass2d,
)
from vsrlab.flowops import backward_warp


def test_committed_registry_matches_declared_keys():
    data = load_fixtures(FIXTURE_PATH)
    assert set(data) == set(FIXTURE_KEYS)
    assert len(FIXTURE_KEYS) == 41
    for key, entry in data.items():
        assert "note" in entry and "value" in entry, key


def test_regeneration_is_byte_stable(tmp_path):
    # Oracles are re-run from scratch; the emitted file must match the
    # committed registry exactly, or a library change went unnoticed.
    out = generate_fixtures(tmp_path)
    regenerated = (out / "fixtures.json").read_bytes()
    assert regenerated == FIXTURE_PATH.read_bytes()


def test_registry_builder_agrees_with_committed_values():
    assert build_registry().keys() == load_fixtures(FIXTURE_PATH).keys()


def test_oracle_bilinear_warp_matches_library():
    rng = np.random.default_rng(33)
    img = rng.random((6, 7))
    flow = rng.uniform(-1.5, 1.5, size=(6, 7, 2))
    ours = backward_warp(img, flow)
    theirs = oracle_bilinear_warp(img, flow)
    assert np.max(np.abs(ours - theirs)) < 1e-12


def test_oracle_lowpass_matches_library():
    rng = np.random.default_rng(34)
    img = rng.random((8, 8))
    ours = lowpass2d_tensor(torch.from_numpy(img)).numpy()
    assert np.max(np.abs(ours - oracle_lowpass2d(img))) < 1e-12


def test_oracle_cubic_kernel_partition():
    # The four taps around any sub-pixel position sum to one.
    for frac in (0.0, 0.25, 0.5, 0.9):
        taps = [oracle_keys_cubic(frac + 1.0), oracle_keys_cubic(frac),
                oracle_keys_cubic(1.0 - frac), oracle_keys_cubic(2.0 - frac)]
        assert abs(sum(taps) - 1.0) < 1e-12


def test_oracle_checkerboard_alternates():
    board = oracle_checkerboard(4)
    assert board[0, 0] == 1.0 and board[0, 1] == -1.0
    assert np.all(board + board[::-1, :] == board + board[:, ::-1])
    assert abs(float(board.sum())) == 0.0


def test_sig_rounding():
    assert _sig(0.123456789123, 9) == 0.123456789
    assert _sig(123456.7891, 4) == 123500.0
    assert _sig(0.0) == 0.0


def test_load_fixtures_accepts_directory():
    assert load_fixtures(FIXTURE_PATH.parent) == load_fixtures(FIXTURE_PATH)
