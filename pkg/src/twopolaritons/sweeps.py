"""Process-parallel parameter sweeps shared by the CLI and the tests.

Workers recompute everything from plain parameter tuples, so scheduling
never influences results; assembly preserves submission order, which
makes sweep output deterministic for any job count.
"""

from __future__ import annotations

import multiprocessing
import os
import warnings
from dataclasses import dataclass

from .bands import band_structure
from .bound_states import find_bound_states
from .errors import ChannelCountError, MatchingError, ParameterError
from .model import ModelParams
from .scattering import solve_scattering

__all__ = [
    "BoundSweepPoint",
    "ScatterSweepPoint",
    "bound_sweep",
    "scatter_sweep",
]


@dataclass(frozen=True)
class BoundSweepPoint:
    """Bound-state inventory of one detuning value."""

    params: ModelParams
    gaps: tuple      # open gaps, ascending index
    states: tuple    # tuple of BoundState tuples, aligned with gaps

    @property
    def delta(self) -> float:
        return self.params.delta


@dataclass(frozen=True)
class ScatterSweepPoint:
    """One scattering solve, or the reason it was skipped."""

    params: ModelParams
    branch: str
    q: float
    solution: object
    note: str

    @property
    def delta(self) -> float:
        return self.params.delta


def _bound_point(args) -> BoundSweepPoint:
    params, overrides = args
    gaps, states = [], []
    # Tail-cap notices from edge-hugging states would repeat thousands of
    # times across a sweep; the kappa value they report is in the output
    # rows anyway.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        for gap in sorted(band_structure(params).gaps, key=lambda g: g.index):
            try:
                found = find_bound_states(params, gap, **overrides)
            except ParameterError:
                continue        # open but narrower than the edge inset
            gaps.append(gap)
            states.append(tuple(found))
    return BoundSweepPoint(params=params, gaps=tuple(gaps),
                           states=tuple(states))


def _scatter_point(args) -> ScatterSweepPoint:
    params, branch, q = args
    try:
        sol = solve_scattering(branch, q, params)
        return ScatterSweepPoint(params=params, branch=branch, q=q,
                                 solution=sol, note="")
    except (ChannelCountError, MatchingError, ParameterError) as exc:
        return ScatterSweepPoint(params=params, branch=branch, q=q,
                                 solution=None, note=str(exc))


def _run(fn, items, jobs):
    items = list(items)
    if jobs is None:
        jobs = os.cpu_count() or 1
    jobs = max(1, int(jobs))
    if jobs == 1 or len(items) < 2:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (jobs * 4))
    with multiprocessing.Pool(processes=jobs) as pool:
        return pool.map(fn, items, chunksize=chunk)


def bound_sweep(xi, deltas, K: float = 0.0, g: float = 1.0,
                jobs=None, **overrides) -> list:
    """Bound states over a detuning grid; one point per delta, in order."""
    items = [(ModelParams(xi=xi, delta=float(d), K=K, g=g), overrides)
             for d in deltas]
    return _run(_bound_point, items, jobs)


def scatter_sweep(branch: str, qs, deltas, xi, K: float = 0.0,
                  g: float = 1.0, jobs=None) -> list:
    """Scattering solves on a (delta, q) grid, delta-major order."""
    items = [(ModelParams(xi=xi, delta=float(d), K=K, g=g), branch, float(q))
             for d in deltas for q in qs]
    return _run(_scatter_point, items, jobs)
