"""Graph-elimination orderings driven by minimum-degree style metrics.

Each step picks the live node minimizing one of several selection
metrics; ``adaptive_order`` lets a learned policy switch metrics per step.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

from .errors import AlreadyEliminated, NodeOutOfRange, PolicyDomainMismatch, SizeMismatch, TooLarge
from .sparse import Permutation, SparsePattern, symmetrize


class OrderingAction(str, Enum):
    MD = "MD"
    AMD = "AMD"
    MMDF = "MMDF"
    MIND = "MIND"
    MMF = "MMF"


ORDERING_ACTIONS = tuple(a.value for a in OrderingAction)
ROOT = -1


class EliminationGraph:
    """Elimination graph ``G(V^k, E^k)`` with cached degrees.

    Eliminated nodes keep their ids; their adjacency is cleared and the
    ``eliminated`` flag set.  ``approx_degree`` holds the upper-bound degree
    used by the AMD metric.
    """

    def __init__(self, n: int, adjacency: list[set[int]]):
        self.n = n
        self.adj = [set(a) for a in adjacency]
        self.eliminated = [False] * n
        self.degrees = [len(a) for a in self.adj]
        self.approx_degree = list(self.degrees)
        self.k = 1

    @classmethod
    def from_pattern(cls, p: SparsePattern) -> "EliminationGraph":
        return cls(p.n, symmetrize(p).neighbors())

    def copy(self) -> "EliminationGraph":
        g = EliminationGraph.__new__(EliminationGraph)
        g.n = self.n
        g.adj = [set(a) for a in self.adj]
        g.eliminated = list(self.eliminated)
        g.degrees = list(self.degrees)
        g.approx_degree = list(self.approx_degree)
        g.k = self.k
        return g

    @property
    def live_count(self) -> int:
        return self.n - (self.k - 1)

    def live_nodes(self) -> list[int]:
        return [v for v in range(self.n) if not self.eliminated[v]]

    def edge_count(self) -> int:
        return sum(self.degrees[v] for v in self.live_nodes()) // 2

    def neighbors(self, v: int) -> list[int]:
        return sorted(self.adj[v])

    def _check_live(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise NodeOutOfRange(f"node {v} outside 0..{self.n - 1}")
        if self.eliminated[v]:
            raise AlreadyEliminated(f"node {v} already eliminated")

    def deficiency(self, v: int) -> int:
        """Number of fill edges eliminating ``v`` would create."""
        self._check_live(v)
        nbrs = sorted(self.adj[v])
        missing = 0
        for i, u in enumerate(nbrs):
            au = self.adj[u]
            for w in nbrs[i + 1:]:
                if w not in au:
                    missing += 1
        return missing

    def eliminate(self, v: int) -> int:
        """Eliminate ``v``: its live neighbors become a clique. Returns fill added."""
        self._check_live(v)
        clique = sorted(self.adj[v])
        fill = 0
        for i, u in enumerate(clique):
            au = self.adj[u]
            au.discard(v)
            for w in clique[i + 1:]:
                if w not in au:
                    au.add(w)
                    self.adj[w].add(u)
                    fill += 1
        self.adj[v] = set()
        self.eliminated[v] = True
        self.degrees[v] = 0
        self.approx_degree[v] = 0
        self.k += 1
        bound = self.live_count - 1
        for u in clique:
            self.degrees[u] = len(self.adj[u])
            # pessimistic update: every other clique member counted as new
            self.approx_degree[u] = self.approx_degree[u] - 1 + len(clique) - 1
        for u in range(self.n):
            if self.approx_degree[u] > bound:
                self.approx_degree[u] = bound
        return fill


def eliminate_node(g: EliminationGraph, v: int) -> int:
    return g.eliminate(v)


def metric_score(g: EliminationGraph, v: int, a: OrderingAction | str) -> float:
    a = OrderingAction(a)
    g._check_live(v)
    if a is OrderingAction.MD:
        return g.degrees[v]
    if a is OrderingAction.AMD:
        return g.approx_degree[v]
    if a is OrderingAction.MMDF:
        return g.deficiency(v)
    if a is OrderingAction.MMF:
        return g.deficiency(v) / max(g.degrees[v], 1)
    # MIND: total degree change of the neighbors, evaluated hypothetically
    nbrs = g.adj[v]
    total = 0
    for u in nbrs:
        gained = sum(1 for w in nbrs if w != u and w not in g.adj[u])
        total += gained - 1
    return total


def select_node(g: EliminationGraph, a: OrderingAction | str) -> tuple[int, float]:
    """Live node with minimum score under ``a``; ties go to the lowest id."""
    best, best_score = -1, math.inf
    for v in range(g.n):
        if g.eliminated[v]:
            continue
        s = metric_score(g, v, a)
        if s < best_score:
            best, best_score = v, s
    return best, best_score


@dataclass(frozen=True)
class OrderingStep:
    step: int
    node: int
    action: str
    score: float | None
    fill: int


@dataclass
class OrderingResult:
    perm: Permutation
    total_fill: int
    step_log: list[OrderingStep] = field(default_factory=list)

    @property
    def order(self) -> tuple[int, ...]:
        return self.perm.order

    @property
    def reward(self) -> int:
        return -self.total_fill

    def to_dict(self) -> dict:
        return {
            "perm": list(self.perm.order),
            "total_fill": self.total_fill,
            "steps": [
                {"step": s.step, "node": s.node, "action": s.action,
                 "score": s.score, "fill": s.fill}
                for s in self.step_log
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class OrderingRun:
    """Stepwise ordering engine shared by greedy, adaptive and training runs."""

    actions = ORDERING_ACTIONS

    def __init__(self, p: SparsePattern):
        self.graph = EliminationGraph.from_pattern(p)
        self.order: list[int] = []
        self.log: list[OrderingStep] = []
        self.total_fill = 0

    @property
    def done(self) -> bool:
        return len(self.order) == self.graph.n

    def step(self, a: OrderingAction | str) -> int:
        a = OrderingAction(a)
        node, score = select_node(self.graph, a)
        fill = self.graph.eliminate(node)
        self.order.append(node)
        self.total_fill += fill
        self.log.append(OrderingStep(len(self.order), node, a.value, score, fill))
        return fill

    def result(self) -> OrderingResult:
        return OrderingResult(Permutation.from_order(self.order), self.total_fill, list(self.log))


def greedy_order(p: SparsePattern, a: OrderingAction | str) -> OrderingResult:
    run = OrderingRun(p)
    while not run.done:
        run.step(a)
    return run.result()


def _check_policy(pol) -> None:
    if pol.domain != "ordering":
        raise PolicyDomainMismatch(f"policy domain {pol.domain!r} is not 'ordering'")
    bad = [a for a in pol.actions if a not in ORDERING_ACTIONS]
    if bad:
        raise PolicyDomainMismatch(f"unknown ordering actions {bad}")


def adaptive_order(p: SparsePattern, pol) -> OrderingResult:
    """Per step: featurize, ask the policy for a metric, eliminate its argmin."""
    from .features import featurize_ordering

    _check_policy(pol)
    run = OrderingRun(p)
    while not run.done:
        run.step(pol(featurize_ordering(run.graph)))
    return run.result()


class OrderingEpisode:
    """Training environment: reward per step is minus the fill added."""

    domain = "ordering"

    def __init__(self, p: SparsePattern, actions=ORDERING_ACTIONS):
        self.pattern = p
        self.actions = tuple(actions)
        self.run: OrderingRun | None = None

    def episode(self):
        return self

    def reset(self):
        from .features import featurize_ordering

        self.run = OrderingRun(self.pattern)
        return featurize_ordering(self.run.graph)

    def step(self, action_id: int):
        from .features import featurize_ordering

        fill = self.run.step(self.actions[action_id])
        return featurize_ordering(self.run.graph), -float(fill), self.run.done


def symbolic_fill_count(p: SparsePattern, perm: Permutation) -> int:
    if perm.n != p.n:
        raise SizeMismatch(f"permutation size {perm.n} != pattern size {p.n}")
    g = EliminationGraph.from_pattern(p)
    return sum(g.eliminate(v) for v in perm.order)


def filled_columns(p: SparsePattern, perm: Permutation) -> list[list[int]]:
    """Below-diagonal structure of each column of the filled factor, in permuted labels."""
    if perm.n != p.n:
        raise SizeMismatch(f"permutation size {perm.n} != pattern size {p.n}")
    g = EliminationGraph.from_pattern(p)
    cols = []
    for v in perm.order:
        cols.append(sorted(perm.forward[u] for u in g.adj[v]))
        g.eliminate(v)
    return cols


def etree(p: SparsePattern, perm: Permutation) -> list[int]:
    """Elimination tree parents in permuted labels; roots get ``ROOT``."""
    return [c[0] if c else ROOT for c in filled_columns(p, perm)]


MAX_ENUMERATE = 8


def enumerate_elimination_orders(n: int, consumer: Callable[[tuple[int, ...]], None] | None = None) -> int:
    """Count the ``n!`` elimination sequences, optionally streaming each one."""
    if n > MAX_ENUMERATE:
        raise TooLarge(f"n={n} exceeds enumeration limit {MAX_ENUMERATE}")
    if consumer is None:
        return math.factorial(n)
    count = 0
    for order in itertools.permutations(range(n)):
        consumer(order)
        count += 1
    return count


def iter_elimination_orders(n: int) -> Iterator[tuple[int, ...]]:
    if n > MAX_ENUMERATE:
        raise TooLarge(f"n={n} exceeds enumeration limit {MAX_ENUMERATE}")
    return itertools.permutations(range(n))


def min_fill_bruteforce(p: SparsePattern) -> int:
    """Exhaustive minimum fill over all elimination orders (n <= 8)."""
    best = math.inf

    def visit(order):
        nonlocal best
        best = min(best, symbolic_fill_count(p, Permutation.from_order(order)))

    enumerate_elimination_orders(p.n, visit)
    return 0 if best is math.inf else int(best)
