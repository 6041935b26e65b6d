"""Tabular offline Q-learning: tables, greedy policies, training, persistence."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import Corrupt, DomainMismatch, EmptyCorpus, VersionMismatch

log = logging.getLogger(__name__)

QTABLE_VERSION = 1
DOMAINS = ("ordering", "pivoting", "scheduling")
DEFAULT_GAMMA = {"ordering": 1.0, "pivoting": 1.0, "scheduling": 0.99}


@dataclass(frozen=True, order=True)
class StateKey:
    domain: str
    buckets: tuple[int, ...]
    terminal: bool = False

    def to_list(self) -> list[int]:
        return [*self.buckets, int(self.terminal)]

    @classmethod
    def from_list(cls, domain: str, key: Sequence[int]) -> "StateKey":
        if not key:
            raise Corrupt("empty state key")
        return cls(domain, tuple(int(b) for b in key[:-1]), bool(key[-1]))


@dataclass
class QTable:
    domain: str
    actions: tuple[str, ...]
    entries: dict[tuple[StateKey, int], list] = field(default_factory=dict)
    version: int = QTABLE_VERSION

    def __post_init__(self):
        self.actions = tuple(self.actions)
        self._by_state: dict[StateKey, dict[int, list]] = {}
        for (s, a), rec in self.entries.items():
            self._by_state.setdefault(s, {})[a] = rec

    def _check(self, s: StateKey) -> None:
        if s.domain != self.domain:
            raise DomainMismatch(f"state domain {s.domain!r} != table domain {self.domain!r}")

    def q(self, s: StateKey, a: int) -> float:
        self._check(s)
        if s.terminal:
            return 0.0
        rec = self.entries.get((s, a))
        return rec[0] if rec else 0.0

    def visits(self, s: StateKey, a: int) -> int:
        rec = self.entries.get((s, a))
        return rec[1] if rec else 0

    def values(self, s: StateKey) -> np.ndarray:
        self._check(s)
        row = np.zeros(len(self.actions))
        if not s.terminal:
            for a, rec in self._by_state.get(s, {}).items():
                row[a] = rec[0]
        return row

    def max_q(self, s: StateKey) -> float:
        return float(self.values(s).max()) if self.actions else 0.0

    def greedy(self, s: StateKey) -> int:
        # np.argmax returns the first maximum: ties go to the lowest action id
        return int(np.argmax(self.values(s)))

    def seen(self, s: StateKey) -> bool:
        return s in self._by_state

    def states(self) -> list[StateKey]:
        return sorted(self._by_state)

    def set(self, s: StateKey, a: int, q: float, visits: int = 1) -> None:
        self._check(s)
        rec = self.entries.get((s, a))
        if rec is None:
            rec = [q, visits]
            self.entries[(s, a)] = rec
            self._by_state.setdefault(s, {})[a] = rec
        else:
            rec[0], rec[1] = q, visits

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (self.domain, self.actions, self.version, self.entries) == (
            other.domain, other.actions, other.version, other.entries)


@dataclass
class TrainConfig:
    alpha: float = 0.1
    gamma: float | None = None
    epsilon_start: float = 0.3
    epsilon_end: float = 0.0
    epsilon_decay: float | None = None
    episodes: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} must lie in (0, 1]")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma={self.gamma} must lie in [0, 1]")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not (0.0 <= self.epsilon_end <= 1.0 and 0.0 <= self.epsilon_start <= 1.0):
            raise ValueError("epsilon values must lie in [0, 1]")

    def discount(self, domain: str) -> float:
        return self.gamma if self.gamma is not None else DEFAULT_GAMMA.get(domain, 1.0)

    def epsilon(self, episode: int) -> float:
        """Linear decay; by default reaches ``epsilon_end`` on the last episode."""
        if self.epsilon_decay is not None:
            decay = self.epsilon_decay
        elif self.episodes > 1:
            decay = (self.epsilon_start - self.epsilon_end) / (self.episodes - 1)
        else:
            decay = 0.0
        return max(self.epsilon_end, self.epsilon_start - decay * episode)


class Policy:
    """Greedy policy over a Q-table; unseen states fall back to ``default``."""

    mode = "greedy"

    def __init__(self, table: QTable, default: str | None = None):
        self.table = table
        self.default = default if default is not None else table.actions[0]
        if self.default not in table.actions:
            raise ValueError(f"default action {self.default!r} not in {table.actions}")

    @classmethod
    def constant(cls, domain: str, action: str, actions: Iterable[str] | None = None) -> "Policy":
        acts = tuple(actions) if actions is not None else (action,)
        return cls(QTable(domain, acts), default=action)

    @property
    def domain(self) -> str:
        return self.table.domain

    @property
    def actions(self) -> tuple[str, ...]:
        return self.table.actions

    def action_id(self, s: StateKey) -> int:
        if not self.table.seen(s):
            return self.table.actions.index(self.default)
        return self.table.greedy(s)

    def __call__(self, s: StateKey) -> str:
        return self.table.actions[self.action_id(s)]


def q_update(t: QTable, s: StateKey, a: int, r: float, s_next: StateKey,
             terminal: bool, cfg: TrainConfig) -> float:
    """One Watkins update; bootstrap is zero from terminal states."""
    t._check(s)
    gamma = cfg.discount(t.domain)
    boot = 0.0 if terminal else t.max_q(s_next)
    old = t.q(s, a)
    new = old + cfg.alpha * (r + gamma * boot - old)
    t.set(s, a, new, t.visits(s, a) + 1)
    return new


class TabularMDP:
    """Small deterministic MDP episode source, mainly for oracle checks.

    ``transitions[(state, action)] = (reward, next_state)``; ``None`` as the
    next state means terminal.
    """

    def __init__(self, transitions: dict, start: int, n_actions: int, domain: str = "toy"):
        self.transitions = dict(transitions)
        self.start = start
        self.actions = tuple(f"a{i}" for i in range(n_actions))
        self.domain = domain
        self._s = start

    def episode(self) -> "TabularMDP":
        return self

    def key(self, s) -> StateKey:
        if s is None:
            return StateKey(self.domain, (0,), terminal=True)
        return StateKey(self.domain, (s,))

    def reset(self) -> StateKey:
        self._s = self.start
        return self.key(self._s)

    def step(self, a: int):
        r, nxt = self.transitions[(self._s, a)]
        self._s = nxt
        return self.key(nxt), float(r), nxt is None

    def states(self) -> list[int]:
        return sorted({s for s, _ in self.transitions})

    def to_dict(self) -> dict:
        return {
            "domain": self.domain, "start": self.start, "n_actions": len(self.actions),
            "transitions": [[s, a, r, nxt] for (s, a), (r, nxt) in sorted(self.transitions.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TabularMDP":
        trans = {(int(s), int(a)): (float(r), None if nxt is None else int(nxt))
                 for s, a, r, nxt in d["transitions"]}
        return cls(trans, int(d["start"]), int(d["n_actions"]), d.get("domain", "toy"))


def as_episode_source(item, domain: str, **kw):
    """Wrap a corpus item (matrix, pattern, DAG) into an episode source."""
    if hasattr(item, "episode"):
        return item
    from .driver import episode_source

    return episode_source(item, domain, **kw)


def train_offline(corpus: Sequence, domain: str, cfg: TrainConfig,
                  actions: Sequence[str] | None = None, curve: list | None = None,
                  table: QTable | None = None, **source_kw) -> QTable:
    """Roll ``cfg.episodes`` epsilon-greedy episodes over a seeded corpus sample."""
    if not corpus:
        raise EmptyCorpus("training corpus is empty")
    sources = [as_episode_source(c, domain, **source_kw) if actions is None
               else as_episode_source(c, domain, actions=actions, **source_kw)
               for c in corpus]
    acts = tuple(sources[0].episode().actions)
    for src in sources:
        env = src.episode()
        if env.domain != domain:
            raise DomainMismatch(f"episode source domain {env.domain!r} != {domain!r}")
        if tuple(env.actions) != acts:
            raise DomainMismatch("episode sources disagree on the action set")
    if table is None:
        table = QTable(domain, acts)
    elif table.domain != domain or table.actions != acts:
        raise DomainMismatch("warm-start table does not match domain/actions")

    rng = np.random.default_rng(cfg.seed)
    n_act = len(acts)
    for ep in range(cfg.episodes):
        eps = cfg.epsilon(ep)
        env = sources[int(rng.integers(len(sources)))].episode()
        s = env.reset()
        ret = 0.0
        done = s.terminal
        while not done:
            if rng.random() < eps:
                a = int(rng.integers(n_act))
            else:
                a = table.greedy(s)
            s_next, r, done = env.step(a)
            q_update(table, s, a, r, s_next, done, cfg)
            ret += r
            s = s_next
        if curve is not None:
            curve.append((ep, ret, eps))
        if ep % max(1, cfg.episodes // 10) == 0:
            log.debug("episode %d return %.6g epsilon %.3f", ep, ret, eps)
    return table


def save_qtable(t: QTable) -> str:
    entries = sorted(t.entries.items(), key=lambda kv: (kv[0][0].to_list(), kv[0][1]))
    doc = {
        "version": t.version,
        "domain": t.domain,
        "actions": list(t.actions),
        "entries": [
            {"key": s.to_list(), "action": t.actions[a], "q": rec[0], "visits": rec[1]}
            for (s, a), rec in entries
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def load_qtable(text: str) -> QTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise Corrupt(f"q-table is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise Corrupt("q-table document lacks a version")
    if doc["version"] != QTABLE_VERSION:
        raise VersionMismatch(f"q-table version {doc['version']} != {QTABLE_VERSION}")
    try:
        domain = doc["domain"]
        actions = tuple(doc["actions"])
        t = QTable(domain, actions)
        for e in doc["entries"]:
            q, visits = float(e["q"]), int(e["visits"])
            if not math.isfinite(q) or visits < 1:
                raise Corrupt(f"bad entry {e}")
            t.set(StateKey.from_list(domain, e["key"]), actions.index(e["action"]), q, visits)
    except (KeyError, TypeError, ValueError) as exc:
        raise Corrupt(f"malformed q-table: {exc}") from exc
    return t


def read_policy(path, default: str | None = None) -> Policy:
    with open(path) as fh:
        return Policy(load_qtable(fh.read()), default)
