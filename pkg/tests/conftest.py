import itertools

import numpy as np
import pytest

from elimq.sparse import SparseMatrix, SparsePattern


def pattern(n, edges, diagonal=True):
    """Symmetric pattern from undirected edges, optionally with a full diagonal."""
    entries = set()
    for i, j in edges:
        entries.add((i, j))
        entries.add((j, i))
    if diagonal:
        entries.update((i, i) for i in range(n))
    return SparsePattern.from_entries(n, entries)


def path_edges(n):
    return [(i, i + 1) for i in range(n - 1)]


def arrow_edges(n, hub=0):
    return [(hub, i) for i in range(n) if i != hub]


def grid_edges(r, c):
    out = []
    for i in range(r):
        for j in range(c):
            v = i * c + j
            if j + 1 < c:
                out.append((v, v + 1))
            if i + 1 < r:
                out.append((v, v + c))
    return out


def random_edges(n, p, rng):
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


def wilkinson(n):
    a = np.eye(n) - np.tril(np.ones((n, n)), -1)
    a[:, -1] = 1.0
    return a


def dense(a):
    return SparseMatrix.from_dense(np.asarray(a, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def value_iteration(mdp, gamma, tol=1e-13):
    """Oracle: optimal Q for a deterministic TabularMDP by successive sweeps."""
    states = mdp.states()
    n_act = len(mdp.actions)
    q = {sa: 0.0 for sa in mdp.transitions}
    while True:
        v = {s: max(q[(s, a)] for a in range(n_act) if (s, a) in q) for s in states}
        new = {(s, a): r + (0.0 if nxt is None else gamma * v[nxt])
               for (s, a), (r, nxt) in mdp.transitions.items()}
        delta = max(abs(new[k] - q[k]) for k in q)
        q = new
        if delta < tol:
            return q


def toy_mdps():
    """Three small deterministic MDPs with every action defined in every state."""
    from elimq.qlearning import TabularMDP

    two_state = TabularMDP({(0, 0): (0, 1), (0, 1): (1, None), (1, 0): (10, None), (1, 1): (2, None)},
                           start=0, n_actions=2)
    # a corridor where waiting pays off only if carried to the end
    corridor = TabularMDP({
        (0, 0): (-1, 1), (0, 1): (0, None), (0, 2): (-2, 2),
        (1, 0): (-1, 2), (1, 1): (0.5, None), (1, 2): (-3, 3),
        (2, 0): (-1, 3), (2, 1): (1, None), (2, 2): (0, 0),
        (3, 0): (6, None), (3, 1): (2, None), (3, 2): (-1, 1),
    }, start=0, n_actions=3)
    # a loop that resets to the start
    loop = TabularMDP({
        (0, 0): (1, 1), (0, 1): (0, 2),
        (1, 0): (0, 0), (1, 1): (3, None),
        (2, 0): (5, None), (2, 1): (-1, 0),
    }, start=0, n_actions=2)
    return [(two_state, 0.9), (corridor, 0.95), (loop, 0.8)]


def set_elimination_fill(n, edges, order):
    """Independent oracle: eliminate on a frozenset-of-pairs edge set."""
    e = {frozenset(x) for x in edges if x[0] != x[1]}
    live = set(range(n))
    fill = 0
    for v in order:
        nbrs = sorted(u for u in live if u != v and frozenset((u, v)) in e)
        for a, b in itertools.combinations(nbrs, 2):
            if frozenset((a, b)) not in e:
                e.add(frozenset((a, b)))
                fill += 1
        live.discard(v)
        e = {x for x in e if v not in x}
    return fill
