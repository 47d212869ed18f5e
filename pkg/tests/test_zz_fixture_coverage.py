"""Runs last by name: every committed fixture entry must have been consumed.

An entry nobody reads is a stale pin that can drift away from the library
without any test noticing; this check turns that into a failure. It only
makes sense when the whole suite ran, so partial runs skip it.
"""

from pathlib import Path

import pytest

from conftest import get_store


def test_every_fixture_entry_was_consumed(request):
    store = get_store()
    collected = {Path(str(item.fspath)).name for item in request.session.items}
    all_files = {p.name for p in Path(__file__).parent.glob("test_*.py")}
    if store.deselected or not all_files <= collected:
        pytest.skip("fixture coverage is only meaningful for full-suite runs")
    unused = store.keys() - store.used
    assert not unused, f"fixture entries no test consumed: {sorted(unused)}"
    unknown = store.used - store.keys()
    assert not unknown, f"tests consumed unknown fixture keys: {sorted(unknown)}"
