"""Shared fixtures: scenario runs are expensive, so they are executed once
per session and cached for every test that inspects them."""

from __future__ import annotations

import pytest

from fa_lab import experiments

_CACHE: dict = {}


@pytest.fixture(scope="session")
def out_root(tmp_path_factory):
    return tmp_path_factory.mktemp("runs")


@pytest.fixture(scope="session")
def run_cached(out_root):
    """run_cached(name, seeds=None, jobs=1) -> (rows, summary, out_dir).

    Each distinct (name, seeds) pair runs once; artifacts land in their own
    subdirectory so re-runs with different seeds never clobber each other.
    """

    def _run(name, seeds=None, jobs=1):
        key = (name, seeds)
        if key not in _CACHE:
            spec = experiments.scenario(name)
            sub = out_root / f"{name}-{len(_CACHE):02d}"
            rows, summary = experiments.run_scenario(
                spec, out_dir=sub, seed_override=seeds, jobs=jobs)
            _CACHE[key] = (rows, summary, sub / name)
        return _CACHE[key]

    return _run
