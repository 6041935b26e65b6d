"""Coarse, deterministic state keys for the three decision domains."""
from __future__ import annotations

import math

import numpy as np

from .qlearning import StateKey


def _bin(frac: float, bins: int) -> int:
    return min(bins - 1, max(0, int(frac * bins)))


def featurize_ordering(g) -> StateKey:
    """(progress/8, live-edge density/8, degree CV/4, min degree 0..7)."""
    if g.live_count == 0:
        return StateKey("ordering", (7, 0, 0, 0), terminal=True)
    progress = _bin((g.k - 1) / g.n, 8)
    live = g.live_nodes()
    degs = np.array([g.degrees[v] for v in live], dtype=float)
    nlive = len(live)
    pairs = nlive * (nlive - 1) / 2
    density = _bin(degs.sum() / 2 / pairs, 8) if pairs else 0
    mean = degs.mean()
    cv = degs.std() / mean if mean > 0 else 0.0
    cv_bin = 0 if cv < 0.25 else 1 if cv < 0.5 else 2 if cv < 1.0 else 3
    min_deg = min(7, int(degs.min()))
    return StateKey("ordering", (progress, density, cv_bin, min_deg))


def growth_bin(ratio: float) -> int:
    if ratio <= 1.0:
        return 0
    return min(7, int(math.floor(math.log2(ratio))))


def featurize_pivoting(m, t) -> StateKey:
    """(progress/8, active-column dominance/3, log2 growth 0..7)."""
    g = growth_bin(t.max_seen / t.max_initial) if t.max_initial > 0 else 0
    if m.k >= m.n:
        return StateKey("pivoting", (7, 0, g), terminal=True)
    j = m.active
    diag = abs(m.a[j, j])
    off = np.abs(m.a[j + 1:, j])
    if diag >= off.sum():
        dom = 0
    elif off.max() > diag:
        dom = 2
    else:
        dom = 1
    return StateKey("pivoting", (_bin((m.k - 1) / m.n, 8), dom, g))


def featurize_scheduling(sim) -> StateKey:
    """(ready count 0..7, idle workers 0..3, progress/8, memory pressure/4)."""
    total = sim.task_count
    if sim.dispatched_count >= total:
        return StateKey("scheduling", (0, min(3, sim.worker_count), 7, 0), terminal=True)
    ready = min(7, sim.ready_count)
    idle = min(3, sim.idle_count)
    progress = _bin(sim.dispatched_count / total, 8) if total else 7
    pressure = _bin(sim.live_memory / sim.peak_memory, 4) if sim.peak_memory > 0 else 0
    return StateKey("scheduling", (ready, idle, progress, pressure))
