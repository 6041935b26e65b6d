"""Sparse matrix storage, Matrix Market I/O and pattern algebra.

Indices are zero-based everywhere inside the package; Matrix Market's
one-based coordinates are converted when reading and writing.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .errors import (
    DuplicateEntry,
    IndexOutOfRange,
    MalformedHeader,
    MatrixMarketError,
    NonSquare,
    SizeMismatch,
    TooLargeForDense,
)

DENSE_CAP = 2048

Entry = tuple[int, int]


@dataclass(frozen=True)
class SparsePattern:
    """Nonzero structure of an ``n x n`` matrix as sorted ``(row, col)`` pairs."""

    n: int
    entries: tuple[Entry, ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative size")
        prev = None
        for r, c in self.entries:
            if not (0 <= r < self.n and 0 <= c < self.n):
                raise IndexOutOfRange(f"entry ({r}, {c}) outside n={self.n}")
            if prev is not None:
                if (r, c) == prev:
                    raise DuplicateEntry(f"duplicate entry ({r}, {c})")
                if (r, c) < prev:
                    raise ValueError("entries must be sorted lexicographically")
            prev = (r, c)

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[Entry]) -> "SparsePattern":
        items = [(int(r), int(c)) for r, c in entries]
        uniq = set(items)
        if len(uniq) != len(items):
            raise DuplicateEntry("duplicate coordinates")
        return cls(n, tuple(sorted(uniq)))

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def edge_count(self) -> int:
        """Undirected off-diagonal edge count of the symmetrized pattern."""
        return symmetrize(self).nnz // 2

    def neighbors(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for r, c in self.entries:
            if r != c:
                adj[r].add(c)
                adj[c].add(r)
        return adj


@dataclass(frozen=True)
class SparseMatrix:
    pattern: SparsePattern
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.pattern.nnz:
            raise SizeMismatch("values length must equal pattern nnz")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("matrix values must be finite")

    @property
    def n(self) -> int:
        return self.pattern.n

    @property
    def nnz(self) -> int:
        return self.pattern.nnz

    @classmethod
    def from_dense(cls, a, drop_zeros: bool = True) -> "SparseMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NonSquare(f"matrix shape {a.shape} is not square")
        if drop_zeros:
            rows, cols = np.nonzero(a)
        else:
            rows, cols = np.indices(a.shape).reshape(2, -1)
        entries = tuple((int(r), int(c)) for r, c in zip(rows, cols))
        values = tuple(float(a[r, c]) for r, c in entries)
        return cls(SparsePattern(a.shape[0], entries), values)

    @classmethod
    def from_entries(cls, n: int, triples: Iterable[tuple[int, int, float]]) -> "SparseMatrix":
        data = {}
        for r, c, v in triples:
            key = (int(r), int(c))
            if key in data:
                raise DuplicateEntry(f"duplicate entry {key}")
            data[key] = float(v)
        keys = sorted(data)
        return cls(SparsePattern(n, tuple(keys)), tuple(data[k] for k in keys))

    def toarray(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for (r, c), v in zip(self.pattern.entries, self.values):
            a[r, c] = v
        return a


@dataclass
class DenseWorkingMatrix:
    """Mutable dense working copy ``A_k`` used by numeric elimination.

    ``k`` is the 1-based elimination step. Rows and columns before the
    active index ``k - 1`` are finished: multipliers sit below the
    diagonal, the upper factor on and above it.
    """

    a: np.ndarray
    k: int = 1

    def __post_init__(self):
        self.a = np.array(self.a, dtype=float)
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1]:
            raise NonSquare(f"working matrix shape {self.a.shape} is not square")
        if not 1 <= self.k <= max(self.n, 1):
            raise ValueError(f"step k={self.k} out of range for n={self.n}")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def active(self) -> int:
        """Zero-based index of the current pivot row/column."""
        return self.k - 1

    def copy(self) -> "DenseWorkingMatrix":
        return DenseWorkingMatrix(self.a.copy(), self.k)


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``range(n)``.

    ``forward[i]`` is the new position of old index ``i``; ``inverse[k]`` is
    the old index placed at position ``k``, i.e. the elimination order.
    """

    forward: tuple[int, ...]
    inverse: tuple[int, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        fwd = tuple(int(i) for i in self.forward)
        n = len(fwd)
        if sorted(fwd) != list(range(n)):
            raise ValueError("forward is not a bijection on range(n)")
        inv = [0] * n
        for i, p in enumerate(fwd):
            inv[p] = i
        if self.inverse is not None and tuple(self.inverse) != tuple(inv):
            raise ValueError("inverse does not match forward")
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", tuple(inv))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_order(cls, order: Iterable[int]) -> "Permutation":
        """Build from an elimination order (``order[k]`` = node at step k)."""
        order = [int(i) for i in order]
        fwd = [0] * len(order)
        for k, node in enumerate(order):
            fwd[node] = k
        return cls(tuple(fwd))

    @property
    def n(self) -> int:
        return len(self.forward)

    @property
    def order(self) -> tuple[int, ...]:
        return self.inverse

    def inv(self) -> "Permutation":
        return Permutation(self.inverse)

    def compose(self, other: "Permutation") -> "Permutation":
        """Apply ``self`` first, then ``other``."""
        if other.n != self.n:
            raise SizeMismatch("permutation sizes differ")
        return Permutation(tuple(other.forward[f] for f in self.forward))


def symmetrize(p: SparsePattern) -> SparsePattern:
    """Off-diagonal pattern of ``p + p^T``: the undirected graph edges."""
    edges = set()
    for r, c in p.entries:
        if r != c:
            edges.add((r, c))
            edges.add((c, r))
    return SparsePattern(p.n, tuple(sorted(edges)))


def permute(p: SparsePattern, perm: Permutation) -> SparsePattern:
    if perm.n != p.n:
        raise SizeMismatch(f"permutation size {perm.n} != pattern size {p.n}")
    f = perm.forward
    return SparsePattern(p.n, tuple(sorted((f[r], f[c]) for r, c in p.entries)))


def permute_matrix(m: SparseMatrix, perm: Permutation) -> SparseMatrix:
    """Symmetric permutation ``P A P^T`` of a matrix, values carried along."""
    if perm.n != m.n:
        raise SizeMismatch(f"permutation size {perm.n} != matrix size {m.n}")
    f = perm.forward
    return SparseMatrix.from_entries(
        m.n, ((f[r], f[c], v) for (r, c), v in zip(m.pattern.entries, m.values))
    )


def to_dense(m: SparseMatrix, cap: int = DENSE_CAP) -> DenseWorkingMatrix:
    if m.n > cap:
        raise TooLargeForDense(f"n={m.n} exceeds dense cap {cap}")
    return DenseWorkingMatrix(m.toarray(), 1)


def load_matrix_market(text: str | TextIO) -> SparseMatrix:
    """Parse a coordinate Matrix Market document (real or pattern field)."""
    if isinstance(text, str):
        text = io.StringIO(text)
    lines = iter(text)
    banner = next(lines, "")
    tokens = banner.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MalformedHeader(f"bad banner: {banner.strip()!r}")
    obj, fmt, fld, sym = (t.lower() for t in tokens[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MalformedHeader("only 'matrix coordinate' is supported")
    if fld not in ("real", "integer", "pattern"):
        raise MalformedHeader(f"unsupported field {fld!r}")
    if sym not in ("general", "symmetric"):
        raise MalformedHeader(f"unsupported symmetry {sym!r}")

    size = None
    for line in lines:
        s = line.strip()
        if s and not s.startswith("%"):
            size = s.split()
            break
    if size is None or len(size) != 3:
        raise MalformedHeader("missing or malformed size line")
    try:
        nrows, ncols, nnz = (int(x) for x in size)
    except ValueError as exc:
        raise MalformedHeader(f"bad size line {size}") from exc
    if nrows != ncols:
        raise NonSquare(f"matrix is {nrows}x{ncols}")
    n = nrows

    data: dict[Entry, float] = {}
    count = 0
    for line in lines:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        want = 2 if fld == "pattern" else 3
        if len(parts) != want:
            raise MatrixMarketError(f"bad entry line {s!r}")
        try:
            r, c = int(parts[0]) - 1, int(parts[1]) - 1
            v = 1.0 if fld == "pattern" else float(parts[2])
        except ValueError as exc:
            raise MatrixMarketError(f"bad entry line {s!r}") from exc
        if not (0 <= r < n and 0 <= c < n):
            raise IndexOutOfRange(f"entry ({r + 1}, {c + 1}) outside {n}x{n}")
        count += 1
        targets = [(r, c)] if sym == "general" or r == c else [(r, c), (c, r)]
        for key in targets:
            if key in data:
                raise DuplicateEntry(f"duplicate entry ({key[0] + 1}, {key[1] + 1})")
            data[key] = v
    if count != nnz:
        raise MatrixMarketError(f"size line declares {nnz} entries, found {count}")
    keys = sorted(data)
    return SparseMatrix(SparsePattern(n, tuple(keys)), tuple(data[k] for k in keys))


def dump_matrix_market(m: SparseMatrix, comment: str | None = None) -> str:
    """Serialize as ``coordinate real general``; floats written with ``repr``."""
    out = ["%%MatrixMarket matrix coordinate real general"]
    if comment:
        out.extend(f"% {line}" for line in comment.splitlines())
    out.append(f"{m.n} {m.n} {m.nnz}")
    for (r, c), v in zip(m.pattern.entries, m.values):
        out.append(f"{r + 1} {c + 1} {v!r}")
    return "\n".join(out) + "\n"


def read_matrix_market(path) -> SparseMatrix:
    with open(path) as fh:
        return load_matrix_market(fh)


def write_matrix_market(path, m: SparseMatrix, comment: str | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dump_matrix_market(m, comment))
