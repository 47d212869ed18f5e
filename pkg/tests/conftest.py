"""Shared test plumbing: the golden-fixture store and small clip builders."""

import json
from pathlib import Path

import numpy as np
import pytest
import torch

from vsrlab.videodata import SyntheticSceneSpec, VideoClip, synth_sequence

FIXTURE_PATH = Path(__file__).parent / "fixtures" / "fixtures.json"


class FixtureStore:
    """Read access to fixtures.json that records which entries were used.

    The coverage test at the end of the session asserts that every committed
    fixture entry was consumed by at least one test, so fixtures cannot
    silently go stale.
    """

    def __init__(self, data: dict):
        self._data = data
        self.used = set()
        self.deselected = False

    def __call__(self, key: str) -> dict:
        self.used.add(key)
        return self._data[key]

    def keys(self) -> set:
        return set(self._data)


_STORE = None


def get_store() -> FixtureStore:
    global _STORE
    if _STORE is None:
        _STORE = FixtureStore(json.loads(FIXTURE_PATH.read_text()))
    return _STORE


@pytest.fixture(scope="session")
def fx() -> FixtureStore:
    return get_store()


def pytest_deselected(items):
    if items:
        get_store().deselected = True


def scene_from_params(p: dict) -> SyntheticSceneSpec:
    return SyntheticSceneSpec(
        pattern=p["pattern"],
        velocity=tuple(p["velocity"]),
        T=p["T"],
        H=p["H"],
        W=p["W"],
        seed=p["seed"],
    )


def clip_from_scene_params(p: dict):
    """Returns (clip, flow_fwd, flow_bwd) for a pinned synthetic scene."""
    return synth_sequence(scene_from_params(p))


def random_clip(t_len: int, h: int, w: int, seed: int) -> VideoClip:
    rng = np.random.default_rng(seed)
    return VideoClip(rng.random((t_len, h, w, 3)))


@pytest.fixture(autouse=True)
def _single_thread_torch():
    # Keeps tiny-tensor tests deterministic and avoids thread oversubscription.
    torch.set_num_threads(1)
    yield
