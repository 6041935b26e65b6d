"""Task DAGs from elimination trees and a discrete-event list-scheduling simulator.

Edges ``(u, v)`` mean ``u`` must finish before ``v`` may start; for DAGs
built from an elimination tree that is child before parent.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import CyclicDag, PolicyDomainMismatch, TooLarge
from .ordering import ROOT, filled_columns
from .sparse import Permutation, SparsePattern


class SchedulerAction(str, Enum):
    TIME = "TIME"
    MEM = "MEM"
    BALANCE = "BALANCE"
    LOCALITY = "LOCALITY"


SCHEDULER_ACTIONS = tuple(a.value for a in SchedulerAction)


@dataclass(frozen=True)
class Task:
    id: int
    work: float
    memory: float = 1.0
    tag: str = ""


class TaskDag:
    def __init__(self, tasks: Sequence[Task], edges: Sequence[tuple[int, int]] = ()):
        self.tasks = tuple(tasks)
        n = len(self.tasks)
        for i, t in enumerate(self.tasks):
            if t.id != i:
                raise ValueError(f"task ids must be 0..n-1 in order, got {t.id} at {i}")
            if not t.work > 0:
                raise ValueError(f"task {i} has non-positive work")
        self.edges = tuple(sorted({(int(u), int(v)) for u, v in edges}))
        self.preds: list[list[int]] = [[] for _ in range(n)]
        self.succs: list[list[int]] = [[] for _ in range(n)]
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            self.succs[u].append(v)
            self.preds[v].append(u)

    def __len__(self) -> int:
        return len(self.tasks)

    def __eq__(self, other) -> bool:
        return isinstance(other, TaskDag) and (self.tasks, self.edges) == (other.tasks, other.edges)

    @property
    def work(self) -> list[float]:
        return [t.work for t in self.tasks]

    @property
    def memory(self) -> list[float]:
        return [t.memory for t in self.tasks]

    def total_work(self) -> float:
        return float(sum(self.work))

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.preds]
        stack = sorted((i for i, d in enumerate(indeg) if d == 0), reverse=True)
        order = []
        while stack:
            u = stack.pop()
            order.append(u)
            for v in sorted(self.succs[u], reverse=True):
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
        if len(order) != len(self):
            raise CyclicDag("task graph contains a cycle")
        return order

    def bottom_levels(self) -> list[float]:
        """Longest work-weighted path from each task to a sink, own work included."""
        level = [0.0] * len(self)
        for u in reversed(self.topological_order()):
            level[u] = self.tasks[u].work + max((level[v] for v in self.succs[u]), default=0.0)
        return level

    def critical_path(self) -> float:
        return max(self.bottom_levels(), default=0.0)

    def reversed(self) -> "TaskDag":
        return TaskDag(self.tasks, [(v, u) for u, v in self.edges])

    def to_dict(self) -> dict:
        return {
            "tasks": [{"id": t.id, "work": t.work, "memory": t.memory, "tag": t.tag} for t in self.tasks],
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskDag":
        tasks = [Task(int(t["id"]), float(t["work"]), float(t.get("memory", 1.0)), t.get("tag", ""))
                 for t in d["tasks"]]
        return cls(tasks, [tuple(e) for e in d["edges"]])


@dataclass(frozen=True)
class Worker:
    id: int
    speed: float = 1.0


@dataclass(frozen=True)
class MachineModel:
    workers: tuple[Worker, ...]
    comm_cost: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "workers", tuple(self.workers))
        if not self.workers:
            raise ValueError("machine needs at least one worker")
        if any(not w.speed > 0 for w in self.workers):
            raise ValueError("worker speeds must be positive")
        if self.comm_cost < 0:
            raise ValueError("comm_cost must be non-negative")

    @classmethod
    def identical(cls, count: int, speed: float = 1.0, comm_cost: float = 0.0) -> "MachineModel":
        return cls(tuple(Worker(i, speed) for i in range(count)), comm_cost)

    @classmethod
    def from_speeds(cls, speeds: Sequence[float], comm_cost: float = 0.0) -> "MachineModel":
        return cls(tuple(Worker(i, float(s)) for i, s in enumerate(speeds)), comm_cost)

    @property
    def speeds(self) -> list[float]:
        return [w.speed for w in self.workers]

    def to_dict(self) -> dict:
        return {"speeds": self.speeds, "comm_cost": self.comm_cost}


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        ws = (self.alpha, self.beta, self.gamma, self.delta)
        if any(w < 0 for w in ws) or not any(w > 0 for w in ws):
            raise ValueError("weights must be non-negative with at least one positive")

    @classmethod
    def parse(cls, text: str) -> "RewardWeights":
        parts = [float(x) for x in text.split(",")]
        if len(parts) != 4:
            raise ValueError("weights need four comma-separated values a,b,g,d")
        return cls(*parts)


@dataclass(frozen=True)
class ScheduleMetrics:
    makespan: float
    peak_memory: float
    balance: float
    comm_volume: int

    def to_dict(self) -> dict:
        return {"makespan": self.makespan, "peak_memory": self.peak_memory,
                "balance": self.balance, "comm_volume": self.comm_volume}


def reward(metrics: ScheduleMetrics, w: RewardWeights) -> float:
    """Negated weighted cost, so larger is better."""
    return -(w.alpha * metrics.makespan + w.beta * metrics.peak_memory
             + w.gamma * (metrics.balance - 1.0) + w.delta * metrics.comm_volume)


def peak_live_memory(dag: TaskDag, start: Sequence[float], release: Sequence[float],
                     tasks: Sequence[int] | None = None) -> float:
    """Max simultaneous memory; a task holds memory from start until release."""
    ids = range(len(dag)) if tasks is None else tasks
    events = []
    for i in ids:
        events.append((start[i], 1, dag.tasks[i].memory))
        events.append((release[i], 0, -dag.tasks[i].memory))
    events.sort(key=lambda e: (e[0], e[1]))
    live = peak = 0.0
    for _, _, delta in events:
        live += delta
        peak = max(peak, live)
    return peak


def _balance(busy: Sequence[float]) -> float:
    mean = sum(busy) / len(busy)
    return max(busy) / mean if mean > 0 else 1.0


@dataclass
class Schedule:
    assignment: list[int]
    start: list[float]
    finish: list[float]
    metrics: ScheduleMetrics
    actions: list[str] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    worker_count: int = 1
    seed: int = 0

    def timeline(self) -> list[list[dict]]:
        lanes: list[list[dict]] = [[] for _ in range(self.worker_count)]
        for t in sorted(range(len(self.start)), key=lambda i: (self.start[i], i)):
            lanes[self.assignment[t]].append({"task": t, "start": self.start[t], "finish": self.finish[t]})
        return lanes

    def to_dict(self) -> dict:
        return {
            "assignment": self.assignment,
            "start": self.start,
            "finish": self.finish,
            "metrics": self.metrics.to_dict(),
            "actions": self.actions,
            "seed": self.seed,
            "timeline": [{"worker": w, "tasks": lane} for w, lane in enumerate(self.timeline())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Simulation:
    """Discrete-event simulator; one task is dispatched per decision point.

    A decision point is a time at which some worker is idle and some task
    is ready (all dependencies finished).
    """

    actions = SCHEDULER_ACTIONS

    def __init__(self, dag: TaskDag, machine: MachineModel, weights: RewardWeights | None = None):
        dag.topological_order()
        self.dag = dag
        self.machine = machine
        self.weights = weights or RewardWeights()
        n, m = len(dag), len(machine.workers)
        self.bottom = dag.bottom_levels()
        self.t = 0.0
        self.free_at = [0.0] * m
        self.busy = [0.0] * m
        self.assignment = [-1] * n
        self.start = [math.nan] * n
        self.finish = [math.nan] * n
        self.dispatched: list[int] = []
        self.comm = 0
        self.log: list[str] = []
        self.rewards: list[float] = []
        self._objective = 0.0
        self._peak_seen = 0.0
        self._advance()

    # -- state ----------------------------------------------------------
    @property
    def task_count(self) -> int:
        return len(self.dag)

    @property
    def worker_count(self) -> int:
        return len(self.machine.workers)

    @property
    def dispatched_count(self) -> int:
        return len(self.dispatched)

    @property
    def done(self) -> bool:
        return len(self.dispatched) == len(self.dag)

    def ready_tasks(self) -> list[int]:
        out = []
        for i in range(len(self.dag)):
            if self.assignment[i] >= 0:
                continue
            if all(self.assignment[p] >= 0 and self.finish[p] <= self.t for p in self.dag.preds[i]):
                out.append(i)
        return out

    def idle_workers(self) -> list[int]:
        return [w for w, f in enumerate(self.free_at) if f <= self.t]

    @property
    def ready_count(self) -> int:
        return len(self.ready_tasks())

    @property
    def idle_count(self) -> int:
        return len(self.idle_workers())

    def _release_times(self) -> list[float]:
        rel = []
        for i in range(len(self.dag)):
            succ = self.dag.succs[i]
            if self.assignment[i] < 0 or any(self.assignment[s] < 0 for s in succ):
                rel.append(math.inf)
            else:
                rel.append(max((self.finish[s] for s in succ), default=self.finish[i]))
        return rel

    @property
    def live_memory(self) -> float:
        rel = self._release_times()
        return sum(self.dag.tasks[i].memory for i in self.dispatched
                   if self.start[i] <= self.t < rel[i])

    @property
    def peak_memory(self) -> float:
        return self._peak_seen

    def _advance(self) -> None:
        """Move the clock forward until a decision point or completion."""
        while not self.done:
            if self.ready_tasks() and self.idle_workers():
                break
            later = [f for f in (self.finish[i] for i in self.dispatched) if f > self.t]
            self.t = min(later)
        self._peak_seen = max(self._peak_seen, self.live_memory)

    # -- dispatch rules -------------------------------------------------
    def earliest_start(self, task: int, worker: int) -> float:
        t = max(self.t, self.free_at[worker])
        for p in self.dag.preds[task]:
            penalty = self.machine.comm_cost if self.assignment[p] != worker else 0.0
            t = max(t, self.finish[p] + penalty)
        return t

    def earliest_finish(self, task: int, worker: int) -> float:
        return self.earliest_start(task, worker) + self.dag.tasks[task].work / self.machine.workers[worker].speed

    def _freed_by(self, task: int) -> float:
        """Memory released once ``task`` completes (it is the last consumer)."""
        freed = 0.0
        for p in self.dag.preds[task]:
            if all(s == task or self.assignment[s] >= 0 for s in self.dag.succs[p]):
                freed += self.dag.tasks[p].memory
        if not self.dag.succs[task]:
            freed += self.dag.tasks[task].memory
        return freed

    def choose(self, action: SchedulerAction | str) -> tuple[int, int]:
        action = SchedulerAction(action)
        ready = self.ready_tasks()
        idle = self.idle_workers()
        if action is SchedulerAction.MEM:
            task = min(ready, key=lambda i: (self.dag.tasks[i].memory - self._freed_by(i), -self.bottom[i], i))
        else:
            task = min(ready, key=lambda i: (-self.bottom[i], i))
        if action is SchedulerAction.BALANCE:
            key = lambda w: (self.busy[w], self.earliest_finish(task, w), w)
        elif action is SchedulerAction.LOCALITY:
            key = lambda w: (-sum(self.assignment[p] == w for p in self.dag.preds[task]),
                             self.earliest_finish(task, w), w)
        else:
            key = lambda w: (self.earliest_finish(task, w), w)
        return task, min(idle, key=key)

    def _partial_objective(self) -> float:
        w = self.weights
        done = self.dispatched
        makespan = max((self.finish[i] for i in done), default=0.0)
        peak = peak_live_memory(self.dag, self.start, self._release_times(), done) if w.beta else 0.0
        return (w.alpha * makespan + w.beta * peak
                + w.gamma * (_balance(self.busy) - 1.0) + w.delta * self.comm)

    def step(self, action: SchedulerAction | str) -> float:
        """Dispatch one task; reward is the decrease of the partial weighted cost."""
        action = SchedulerAction(action)
        task, worker = self.choose(action)
        s = self.earliest_start(task, worker)
        dur = self.dag.tasks[task].work / self.machine.workers[worker].speed
        self.assignment[task] = worker
        self.start[task] = s
        self.finish[task] = s + dur
        self.free_at[worker] = s + dur
        self.busy[worker] += dur
        self.comm += sum(self.assignment[p] != worker for p in self.dag.preds[task])
        self.dispatched.append(task)
        self.log.append(action.value)
        obj = self._partial_objective()
        r = self._objective - obj
        self._objective = obj
        self.rewards.append(r)
        self._advance()
        return r

    def metrics(self) -> ScheduleMetrics:
        if not self.done:
            raise RuntimeError("simulation still running")
        dag = self.dag
        makespan = max(self.finish, default=0.0)
        peak = peak_live_memory(dag, self.start, self._release_times())
        return ScheduleMetrics(makespan, peak, _balance(self.busy), self.comm)

    def schedule(self, seed: int = 0) -> Schedule:
        return Schedule(list(self.assignment), list(self.start), list(self.finish), self.metrics(),
                        list(self.log), list(self.rewards), self.worker_count, seed)


def _check_policy(pol) -> None:
    if pol.domain != "scheduling":
        raise PolicyDomainMismatch(f"policy domain {pol.domain!r} is not 'scheduling'")
    bad = [a for a in pol.actions if a not in SCHEDULER_ACTIONS]
    if bad:
        raise PolicyDomainMismatch(f"unknown scheduler actions {bad}")


def simulate(d: TaskDag, m: MachineModel, dispatch=SchedulerAction.TIME, seed: int = 0,
             weights: RewardWeights | None = None) -> Schedule:
    """Run the simulator under a fixed dispatch rule or a scheduling policy.

    The simulator has no stochastic component; ``seed`` is only recorded in
    the schedule report.
    """
    from .features import featurize_scheduling

    policy = None
    if not isinstance(dispatch, (str, SchedulerAction)):
        policy = dispatch
        _check_policy(policy)
    sim = Simulation(d, m, weights)
    while not sim.done:
        sim.step(policy(featurize_scheduling(sim)) if policy else dispatch)
    return sim.schedule(seed)


def list_schedule(d: TaskDag, m: MachineModel, heuristic: SchedulerAction | str) -> Schedule:
    return simulate(d, m, SchedulerAction(heuristic))


class SchedulingEpisode:
    domain = "scheduling"

    def __init__(self, dag: TaskDag, machine: MachineModel, weights: RewardWeights | None = None,
                 actions=SCHEDULER_ACTIONS):
        self.dag = dag
        self.machine = machine
        self.weights = weights or RewardWeights()
        self.actions = tuple(actions)
        self.sim: Simulation | None = None

    def episode(self) -> "SchedulingEpisode":
        return self

    def reset(self):
        from .features import featurize_scheduling

        self.sim = Simulation(self.dag, self.machine, self.weights)
        return featurize_scheduling(self.sim)

    def step(self, action_id: int):
        from .features import featurize_scheduling

        r = self.sim.step(self.actions[action_id])
        return featurize_scheduling(self.sim), r, self.sim.done


MAX_BRUTE_TASKS = 10
MAX_BRUTE_WORKERS = 3


def brute_force_optimal(d: TaskDag, m: MachineModel) -> float:
    """Exact minimum makespan by exhaustive branch and bound.

    Enumerates every dispatch order consistent with the dependencies and
    every worker assignment, placing each task as early as its worker and
    inputs allow. Some optimal schedule is always generated this way.
    """
    n, nw = len(d), len(m.workers)
    if n > MAX_BRUTE_TASKS or nw > MAX_BRUTE_WORKERS:
        raise TooLarge(f"brute force limited to {MAX_BRUTE_TASKS} tasks and {MAX_BRUTE_WORKERS} workers")
    d.topological_order()
    if n == 0:
        return 0.0
    speeds = m.speeds
    total_speed = sum(speeds)
    work = d.work
    preds = d.preds
    finish = [0.0] * n
    where = [-1] * n
    free = [0.0] * nw
    used = [False] * nw
    best = math.inf

    def search(count: int, remaining: float, current: float) -> None:
        nonlocal best
        if count == n:
            best = min(best, current)
            return
        bound = max(current, (sum(s * f for s, f in zip(speeds, free)) + remaining) / total_speed)
        if bound >= best:
            return
        for task in range(n):
            if where[task] >= 0 or any(where[p] < 0 for p in preds[task]):
                continue
            tried_empty = set()
            for w in range(nw):
                if not used[w]:
                    # empty identical workers are interchangeable
                    if speeds[w] in tried_empty:
                        continue
                    tried_empty.add(speeds[w])
                s = free[w]
                for p in preds[task]:
                    s = max(s, finish[p] + (m.comm_cost if where[p] != w else 0.0))
                f = s + work[task] / speeds[w]
                old_free, old_used = free[w], used[w]
                where[task], finish[task], free[w], used[w] = w, f, f, True
                search(count + 1, remaining - work[task], max(current, f))
                where[task], finish[task], free[w], used[w] = -1, 0.0, old_free, old_used

    search(0, d.total_work(), 0.0)
    return best


def dag_from_etree(p: SparsePattern, perm: Permutation) -> TaskDag:
    """One task per column of the filled factor, child-before-parent edges."""
    cols = filled_columns(p, perm)
    order = perm.order
    tasks = [Task(i, float((1 + len(c)) ** 2), float(len(c) + 1), f"col{order[i]}")
             for i, c in enumerate(cols)]
    edges = [(i, c[0]) for i, c in enumerate(cols) if c and c[0] != ROOT]
    return TaskDag(tasks, edges)


def random_dag(n: int, edge_prob: float, seed: int, max_work: int = 4, max_memory: int = 4) -> TaskDag:
    """Random DAG with forward edges ``i -> j`` (i < j) and integer weights."""
    rng = np.random.default_rng(seed)
    tasks = [Task(i, float(rng.integers(1, max_work + 1)), float(rng.integers(1, max_memory + 1)))
             for i in range(n)]
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    return TaskDag(tasks, edges)


def check_schedule(d: TaskDag, m: MachineModel, s: Schedule, tol: float = 1e-12) -> None:
    """Raise ``AssertionError`` if dependency or exclusivity constraints break."""
    for u, v in d.edges:
        penalty = m.comm_cost if s.assignment[u] != s.assignment[v] else 0.0
        assert s.start[v] + tol >= s.finish[u] + penalty, f"edge {u}->{v} violated"
    for lane in s.timeline():
        for a, b in zip(lane, lane[1:]):
            assert b["start"] + tol >= a["finish"], f"overlap on worker: {a} {b}"
    for i, t in enumerate(d.tasks):
        dur = t.work / m.workers[s.assignment[i]].speed
        assert abs(s.finish[i] - s.start[i] - dur) <= tol * max(1.0, dur)
