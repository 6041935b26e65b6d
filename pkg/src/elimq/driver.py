"""End-to-end solve loop (ordering -> pivoted factorization -> scheduling -> solve)
and the synthetic corpus used for training."""
from __future__ import annotations

import csv
import io
import json
import re
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatch, SizeMismatch, UnknownFamily
from .ordering import (
    ORDERING_ACTIONS,
    OrderingAction,
    OrderingEpisode,
    OrderingResult,
    OrderingStep,
    adaptive_order,
    greedy_order,
)
from .pivoting import (
    PIVOT_ACTIONS,
    FactorResult,
    PivotAction,
    PivotingEpisode,
    factorize,
    relative_residual,
    solve,
)
from .scheduling import (
    SCHEDULER_ACTIONS,
    MachineModel,
    RewardWeights,
    Schedule,
    SchedulerAction,
    SchedulingEpisode,
    TaskDag,
    dag_from_etree,
    reward,
    simulate,
)
from .sparse import (
    Permutation,
    SparseMatrix,
    SparsePattern,
    permute_matrix,
    symmetrize,
)

FAMILIES = ("path", "star", "grid2d", "tridiagonal", "arrow", "random")
MAX_FAMILY_N = 2048


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int
    p: float | None = None
    rows: int | None = None
    cols: int | None = None

    @property
    def name(self) -> str:
        if self.family == "grid2d":
            return f"grid2d-{self.rows}x{self.cols}"
        if self.family == "random":
            return f"random-{self.n}-{self.p:g}"
        return f"{self.family}-{self.n}"

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """Parse ``path:5``, ``grid2d:3x4``, ``random:10:0.3`` and friends."""
        parts = text.strip().split(":")
        fam = parts[0].lower()
        if fam not in FAMILIES:
            raise UnknownFamily(f"unknown family {parts[0]!r}; expected one of {FAMILIES}")
        try:
            if fam == "grid2d":
                dims = re.split(r"[x,]", parts[1]) if len(parts) == 2 else parts[1:3]
                r, c = int(dims[0]), int(dims[1] if len(dims) > 1 else dims[0])
                return cls.grid(r, c)
            if fam == "random":
                return cls(fam, int(parts[1]), float(parts[2]))
            if len(parts) != 2:
                raise ValueError(text)
            return cls(fam, int(parts[1]))
        except (IndexError, ValueError) as exc:
            raise UnknownFamily(f"malformed family spec {text!r}") from exc

    @classmethod
    def grid(cls, rows: int, cols: int) -> "FamilySpec":
        return cls("grid2d", rows * cols, rows=rows, cols=cols)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownFamily(f"unknown family {self.family!r}")
        if not 1 <= self.n <= MAX_FAMILY_N:
            raise ValueError(f"family size {self.n} outside 1..{MAX_FAMILY_N}")
        if self.family == "random" and not (self.p is not None and 0.0 <= self.p <= 1.0):
            raise ValueError("random family needs 0 <= p <= 1")


def family_edges(spec: FamilySpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    n = spec.n
    if spec.family in ("path", "tridiagonal"):
        return [(i, i + 1) for i in range(n - 1)]
    if spec.family in ("star", "arrow"):
        # hub is node 0
        return [(0, i) for i in range(1, n)]
    if spec.family == "grid2d":
        r, c = spec.rows, spec.cols
        edges = []
        for i in range(r):
            for j in range(c):
                v = i * c + j
                if j + 1 < c:
                    edges.append((v, v + 1))
                if i + 1 < r:
                    edges.append((v, v + c))
        return edges
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < spec.p]


def make_matrix(spec: FamilySpec, rng: np.random.Generator, dominant: bool = True) -> SparseMatrix:
    edges = family_edges(spec, rng)
    n = spec.n
    a = np.zeros((n, n))
    if spec.family == "tridiagonal":
        for i, j in edges:
            a[i, j] = a[j, i] = -1.0
        np.fill_diagonal(a, 2.0)
        return SparseMatrix.from_dense(a)
    for i, j in edges:
        a[i, j] = rng.uniform(-1.0, 1.0)
        a[j, i] = rng.uniform(-1.0, 1.0)
    if dominant:
        diag = np.abs(a).sum(axis=1) + rng.uniform(1.0, 2.0, size=n)
        diag *= np.where(rng.random(n) < 0.5, -1.0, 1.0)
    else:
        diag = rng.uniform(-1.0, 1.0, size=n)
    a[np.diag_indices(n)] = diag
    entries = sorted({(i, i) for i in range(n)} | {(i, j) for i, j in edges} | {(j, i) for i, j in edges})
    return SparseMatrix.from_entries(n, ((i, j, a[i, j]) for i, j in entries))


def generate_named_corpus(specs, seed: int, dominant: bool = True) -> list[tuple[str, SparseMatrix]]:
    out = []
    for idx, spec in enumerate(specs):
        if isinstance(spec, str):
            spec = FamilySpec.parse(spec)
        rng = np.random.default_rng([seed, idx])
        out.append((f"{idx:03d}-{spec.name}", make_matrix(spec, rng, dominant)))
    return out


def generate_corpus(specs, seed: int, dominant: bool = True) -> list[SparseMatrix]:
    """Deterministic synthetic corpus for the given family descriptors."""
    return [m for _, m in generate_named_corpus(specs, seed, dominant)]


def mixed_corpus_specs(count: int, seed: int, max_n: int = 40, p: float = 0.2) -> list[FamilySpec]:
    """A seeded mix of paths, stars, arrows, 2D grids and random graphs."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(count):
        fam = ("path", "star", "arrow", "grid2d", "random")[i % 5]
        if fam == "grid2d":
            r = int(rng.integers(2, 7))
            c = int(rng.integers(2, max_n // r + 1))
            specs.append(FamilySpec.grid(r, min(c, max_n // r)))
        else:
            n = int(rng.integers(5, max_n + 1))
            specs.append(FamilySpec(fam, n, p if fam == "random" else None))
    return specs


# -- episode sources ----------------------------------------------------------

def _pattern_of(item) -> SparsePattern:
    if isinstance(item, SparseMatrix):
        return item.pattern
    if isinstance(item, SparsePattern):
        return item
    raise DomainMismatch(f"cannot derive a pattern from {type(item).__name__}")


def scheduling_dag(item, ordering: str = OrderingAction.MD) -> TaskDag:
    if isinstance(item, TaskDag):
        return item
    p = _pattern_of(item)
    return dag_from_etree(p, greedy_order(p, ordering).perm)


def episode_source(item, domain: str, actions=None, machine: MachineModel | None = None,
                   weights: RewardWeights | None = None):
    if domain == "ordering":
        return OrderingEpisode(_pattern_of(item), actions or ORDERING_ACTIONS)
    if domain == "pivoting":
        if not isinstance(item, SparseMatrix):
            raise DomainMismatch("pivoting episodes need a SparseMatrix")
        return PivotingEpisode(item, actions or PIVOT_ACTIONS)
    if domain == "scheduling":
        return SchedulingEpisode(scheduling_dag(item), machine or MachineModel.identical(2),
                                 weights, actions or SCHEDULER_ACTIONS)
    raise DomainMismatch(f"unknown domain {domain!r}")


# -- solve loop ---------------------------------------------------------------

@dataclass
class SolverRun:
    input_id: str
    ordering: OrderingResult
    factor: FactorResult
    dag: TaskDag
    schedule: Schedule
    solve_schedule: Schedule
    rewards: dict
    residual: float
    x: np.ndarray
    weights: RewardWeights
    machine: MachineModel
    nnz: int = 0
    timing: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.factor.n

    def summary_row(self) -> dict:
        return {
            "id": self.input_id, "n": self.n, "nnz": self.nnz,
            "fill": self.ordering.total_fill, "rho": self.factor.rho,
            "makespan": self.schedule.metrics.makespan, "residual": self.residual,
            "R_md": self.rewards["R_md"], "R_pivoting": self.rewards["R_pivoting"],
            "R_scheduling": self.rewards["R_scheduling"],
        }

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "input_id": self.input_id,
            "n": self.n,
            "nnz": self.nnz,
            "ordering": self.ordering.to_dict(),
            "factor": self.factor.to_dict(),
            "dag": self.dag.to_dict(),
            "machine": self.machine.to_dict(),
            "weights": [self.weights.alpha, self.weights.beta, self.weights.gamma, self.weights.delta],
            "schedule": self.schedule.to_dict(),
            "solve_schedule": self.solve_schedule.to_dict(),
            "rewards": self.rewards,
            "residual": self.residual,
            "x": [float(v) for v in self.x],
        }
        if include_timing:
            d["timing"] = self.timing
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=1) + "\n"


SUMMARY_FIELDS = ("id", "n", "nnz", "fill", "rho", "makespan", "residual",
                  "R_md", "R_pivoting", "R_scheduling")


def summary_csv(runs) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in runs:
        w.writerow(r.summary_row())
    return buf.getvalue()


def _forced_ordering(p: SparsePattern, perm: Permutation) -> OrderingResult:
    from .ordering import EliminationGraph

    g = EliminationGraph.from_pattern(p)
    log, total = [], 0
    for k, v in enumerate(perm.order, 1):
        fill = g.eliminate(v)
        total += fill
        log.append(OrderingStep(k, v, "FORCED", None, fill))
    return OrderingResult(perm, total, log)


def run_solver(m: SparseMatrix, ordering=OrderingAction.MD, pivoting=PivotAction.PP,
               scheduling=SchedulerAction.TIME, weights: RewardWeights | None = None,
               b=None, machine: MachineModel | None = None, perm: Permutation | None = None,
               input_id: str = "") -> SolverRun:
    """Run every phase with per-domain policies or fixed actions.

    ``perm`` bypasses the ordering phase with a forced elimination order.
    ``b`` defaults to ``A @ ones``.
    """
    weights = weights or RewardWeights()
    machine = machine or MachineModel.identical(2)
    a = m.toarray()
    n = m.n
    b = a @ np.ones(n) if b is None else np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise SizeMismatch(f"rhs has shape {b.shape}, expected ({n},)")
    timing = {}

    t0 = time.perf_counter()
    if perm is not None:
        ordres = _forced_ordering(m.pattern, perm)
    elif isinstance(ordering, (str, OrderingAction)):
        ordres = greedy_order(m.pattern, ordering)
    else:
        ordres = adaptive_order(m.pattern, ordering)
    perm = ordres.perm
    timing["ordering"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fact = factorize(permute_matrix(m, perm), pivoting)
    timing["factorize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dag = dag_from_etree(m.pattern, perm)
    sched = simulate(dag, machine, scheduling, weights=weights)
    solve_sched = simulate(dag.reversed(), machine, scheduling, weights=weights)
    timing["schedule"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    y = solve(fact, b[list(perm.order)])
    x = y[list(perm.forward)]
    res = relative_residual(a, x, b)
    timing["solve"] = time.perf_counter() - t0

    rewards = {
        "R_md": -ordres.total_fill,
        "R_pivoting": -fact.rho,
        "R_scheduling": reward(sched.metrics, weights),
    }
    return SolverRun(input_id, ordres, fact, dag, sched, solve_sched, rewards, res, x,
                     weights, machine, m.nnz, timing)


def edge_count(m: SparseMatrix) -> int:
    return symmetrize(m.pattern).nnz // 2
