"""Dense LU with per-step pivot strategy choice and growth-factor tracking."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    NumericBreakdown,
    PolicyDomainMismatch,
    Singular,
    SingularUpper,
    SizeMismatch,
    ZeroActiveSubmatrix,
    ZeroDiagonal,
    ZeroMatrix,
    ZeroPivotColumn,
)
from .sparse import DENSE_CAP, DenseWorkingMatrix, Permutation, SparseMatrix, to_dense

EPS = float(np.finfo(float).eps)
BREAKDOWN_PENALTY = 100.0
FULL_TRACE_MAX_N = 16


class PivotAction(str, Enum):
    PP = "PP"
    RP = "RP"
    CP = "CP"
    SKIP = "SKIP"


PIVOT_ACTIONS = tuple(a.value for a in PivotAction)


@dataclass
class GrowthTrace:
    max_initial: float
    max_seen: float

    @property
    def rho(self) -> float:
        return growth_factor(self)


def growth_factor(t: GrowthTrace) -> float:
    if t.max_initial <= 0:
        raise ZeroMatrix("growth factor undefined for the zero matrix")
    return t.max_seen / t.max_initial


@dataclass
class ElimTrace:
    """Elimination set ``A_1 .. A_n``: full snapshots for small n, else summaries."""

    full: bool
    snapshots: list[np.ndarray] = field(default_factory=list)
    summaries: list[dict] = field(default_factory=list)

    def record(self, m: DenseWorkingMatrix, t: GrowthTrace) -> None:
        if self.full:
            self.snapshots.append(m.a.copy())
        self.summaries.append({"k": m.k, "max_seen": t.max_seen})

    def __len__(self) -> int:
        return len(self.summaries)


@dataclass(frozen=True)
class PivotStep:
    k: int
    action: str
    row: int
    col: int
    value: float
    fallback: bool = False


@dataclass
class FactorResult:
    lu: DenseWorkingMatrix
    row_perm: Permutation
    col_perm: Permutation
    growth: GrowthTrace
    step_log: list[PivotStep]
    trace: ElimTrace
    rewards: list[float]
    original: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.n

    @property
    def rho(self) -> float:
        return growth_factor(self.growth)

    @property
    def L(self) -> np.ndarray:
        return np.tril(self.lu.a, -1) + np.eye(self.n)

    @property
    def U(self) -> np.ndarray:
        return np.triu(self.lu.a)

    @property
    def tol(self) -> float:
        return breakdown_tol(self.n, self.growth.max_initial)

    def to_dict(self) -> dict:
        n = self.n
        b = self.original @ np.ones(n)
        try:
            x = solve(self, b)
            res = relative_residual(self.original, x, b)
        except SingularUpper:
            res = None
        return {
            "n": n,
            "row_perm": list(self.row_perm.order),
            "col_perm": list(self.col_perm.order),
            "rho": self.rho,
            "max_initial": self.growth.max_initial,
            "max_seen": self.growth.max_seen,
            "eps": EPS,
            "breakdown_tol": self.tol,
            "steps": [
                {"k": s.k, "action": s.action, "row": s.row, "col": s.col,
                 "value": s.value, "fallback": s.fallback}
                for s in self.step_log
            ],
            "residual": res,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def breakdown_tol(n: int, max_initial: float) -> float:
    return n * EPS * max_initial


def _zero(x: float, tol: float) -> bool:
    return x == 0.0 or abs(x) < tol


def select_pivot(m: DenseWorkingMatrix, a: PivotAction | str, tol: float = 0.0) -> tuple[int, int]:
    """Zero-based pivot position for the active step of ``m``."""
    a = PivotAction(a)
    k = m.active
    if k >= m.n:
        raise ValueError("no elimination step left")
    A = np.abs(m.a)
    if a is PivotAction.SKIP:
        if _zero(A[k, k], tol):
            raise ZeroDiagonal(f"|a[{k},{k}]| below breakdown tolerance")
        return k, k
    if a is PivotAction.CP:
        block = A[k:, k:]
        flat = int(np.argmax(block))
        i, j = divmod(flat, block.shape[1])
        if _zero(block[i, j], tol):
            raise ZeroActiveSubmatrix(f"active submatrix at step {m.k} is zero")
        return k + i, k + j
    i = k + int(np.argmax(A[k:, k]))
    if _zero(A[i, k], tol):
        raise ZeroPivotColumn(f"active column {k} is zero")
    if a is PivotAction.PP:
        return i, k
    # rook: alternate row and column sweeps while the magnitude strictly grows
    j = k
    while True:
        jj = k + int(np.argmax(A[i, k:]))
        if A[i, jj] <= A[i, j]:
            break
        j = jj
        ii = k + int(np.argmax(A[k:, j]))
        if A[ii, j] <= A[i, j]:
            break
        i = ii
    return i, j


def ge_step(m: DenseWorkingMatrix, pivot: tuple[int, int], trace: GrowthTrace | None = None,
            rows: list[int] | None = None, cols: list[int] | None = None,
            tol: float | None = None) -> None:
    """Interchange, store multipliers, update the trailing block; advances ``m.k``."""
    k = m.active
    r, c = pivot
    a = m.a
    if r != k:
        a[[k, r], :] = a[[r, k], :]
        if rows is not None:
            rows[k], rows[r] = rows[r], rows[k]
    if c != k:
        a[:, [k, c]] = a[:, [c, k]]
        if cols is not None:
            cols[k], cols[c] = cols[c], cols[k]
    if tol is None:
        scale = trace.max_initial if trace is not None else float(np.abs(a).max(initial=0.0))
        tol = breakdown_tol(m.n, scale)
    piv = a[k, k]
    if _zero(piv, tol):
        raise NumericBreakdown(f"pivot {piv!r} below tolerance {tol:g} at step {m.k}")
    a[k + 1:, k] /= piv
    a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    if trace is not None and k + 1 < m.n:
        trace.max_seen = max(trace.max_seen, float(np.abs(a[k + 1:, k + 1:]).max()))
    m.k += 1


def _as_dense(m, cap: int) -> DenseWorkingMatrix:
    if isinstance(m, SparseMatrix):
        return to_dense(m, cap)
    if isinstance(m, DenseWorkingMatrix):
        return m.copy()
    return DenseWorkingMatrix(np.asarray(m, dtype=float), 1)


class PivotRun:
    """Stepwise factorization engine shared by fixed, policy and training runs."""

    actions = PIVOT_ACTIONS

    def __init__(self, m, fallback: bool = True, full_trace: bool | None = None, cap: int = DENSE_CAP):
        self.w = _as_dense(m, cap)
        self.w.k = 1
        n = self.w.n
        self.original = self.w.a.copy()
        max_initial = float(np.abs(self.w.a).max(initial=0.0))
        if max_initial == 0.0:
            raise Singular("matrix is identically zero")
        self.growth = GrowthTrace(max_initial, max_initial)
        self.tol = breakdown_tol(n, max_initial)
        self.fallback = fallback
        self.rows = list(range(n))
        self.cols = list(range(n))
        self.log: list[PivotStep] = []
        self.rewards: list[float] = []
        full = n <= FULL_TRACE_MAX_N if full_trace is None else full_trace
        self.trace = ElimTrace(full)
        self.trace.record(self.w, self.growth)

    @property
    def done(self) -> bool:
        return self.w.k >= self.w.n

    def step(self, action: PivotAction | str) -> float:
        action = PivotAction(action)
        penalty = 0.0
        used_fallback = False
        try:
            pos = select_pivot(self.w, action, self.tol)
        except ZeroDiagonal:
            if not self.fallback:
                raise
            penalty = BREAKDOWN_PENALTY
            used_fallback = True
            pos = self._select_or_singular(PivotAction.PP)
        except (ZeroPivotColumn, ZeroActiveSubmatrix) as exc:
            raise Singular(str(exc)) from exc
        before = self.growth.max_seen if self.log else 0.0
        k = self.w.k
        r, c = pos
        value = float(self.w.a[r, c])
        ge_step(self.w, pos, self.growth, self.rows, self.cols, self.tol)
        self.log.append(PivotStep(k, action.value, r, c, value, used_fallback))
        self.trace.record(self.w, self.growth)
        # increments telescope to -rho over the episode
        reward = -(self.growth.max_seen - before) / self.growth.max_initial - penalty
        self.rewards.append(reward)
        return reward

    def _select_or_singular(self, action: PivotAction) -> tuple[int, int]:
        try:
            return select_pivot(self.w, action, self.tol)
        except (ZeroPivotColumn, ZeroActiveSubmatrix) as exc:
            raise Singular(str(exc)) from exc

    def result(self) -> FactorResult:
        return FactorResult(
            lu=self.w,
            row_perm=Permutation.from_order(self.rows),
            col_perm=Permutation.from_order(self.cols),
            growth=self.growth,
            step_log=list(self.log),
            trace=self.trace,
            rewards=list(self.rewards),
            original=self.original,
        )


def _check_policy(pol) -> None:
    if pol.domain != "pivoting":
        raise PolicyDomainMismatch(f"policy domain {pol.domain!r} is not 'pivoting'")
    bad = [a for a in pol.actions if a not in PIVOT_ACTIONS]
    if bad:
        raise PolicyDomainMismatch(f"unknown pivot actions {bad}")


def factorize(m, strategy=PivotAction.PP, fallback: bool = True,
              full_trace: bool | None = None, cap: int = DENSE_CAP) -> FactorResult:
    """LU of ``m`` under a fixed pivot action or a pivoting policy.

    With ``fallback`` a SKIP step whose diagonal breaks down is redone with
    partial pivoting and charged ``BREAKDOWN_PENALTY``.
    """
    from .features import featurize_pivoting

    policy = None
    if not isinstance(strategy, (str, PivotAction)):
        policy = strategy
        _check_policy(policy)
    run = PivotRun(m, fallback=fallback, full_trace=full_trace, cap=cap)
    while not run.done:
        action = policy(featurize_pivoting(run.w, run.growth)) if policy else strategy
        run.step(action)
    return run.result()


class PivotingEpisode:
    domain = "pivoting"

    def __init__(self, m, actions=PIVOT_ACTIONS):
        self.matrix = m
        self.actions = tuple(actions)
        self.run: PivotRun | None = None

    def episode(self):
        return self

    def reset(self):
        from .features import featurize_pivoting

        self.run = PivotRun(self.matrix, fallback=True, full_trace=False)
        return featurize_pivoting(self.run.w, self.run.growth)

    def step(self, action_id: int):
        from .features import featurize_pivoting

        r = self.run.step(self.actions[action_id])
        return featurize_pivoting(self.run.w, self.run.growth), r, self.run.done


def solve(f: FactorResult, b) -> np.ndarray:
    """Forward/back substitution through the row and column permutations."""
    b = np.asarray(b, dtype=float)
    n = f.n
    if b.shape != (n,):
        raise SizeMismatch(f"rhs has shape {b.shape}, expected ({n},)")
    lu = f.lu.a
    tol = f.tol
    rows = f.row_perm.order
    y = b[list(rows)].copy()
    for i in range(n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        d = lu[i, i]
        if _zero(d, tol):
            raise SingularUpper(f"U[{i},{i}] = {d!r} is numerically zero")
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / d
    x = np.empty(n)
    x[list(f.col_perm.order)] = y
    return x


def reconstruct(f: FactorResult) -> np.ndarray:
    """Undo the permutations on ``L @ U``; equals the input up to rounding."""
    out = np.empty_like(f.original)
    out[np.ix_(f.row_perm.order, f.col_perm.order)] = f.L @ f.U
    return out


def relative_residual(a, x, b) -> float:
    a = np.asarray(a, dtype=float)
    r = a @ x - b
    denom = np.abs(a).sum(axis=1).max() * np.abs(x).max()
    if denom == 0:
        return float(np.abs(r).max())
    return float(np.abs(r).max() / denom)
