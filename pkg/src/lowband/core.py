"""Tripartite instance model: sparse patterns, instances, triangles, clusters.

Node identities follow the tripartite convention: the row index of ``A`` lives
on side ``I``, the shared dimension on side ``J`` and the column of ``B`` on
side ``K``.  A triangle ``(i, j, k)`` is one product term ``A_ij * B_jk`` that
contributes to a requested output ``X_ik``.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, NamedTuple

import networkx as nx
import numpy as np

from .semiring import Semiring, get_semiring


class PatternError(ValueError):
    """Malformed sparse pattern (unsorted, duplicated or out-of-range indices)."""


class PreconditionError(ValueError):
    """An operation was called outside its documented precondition."""


class Side(IntEnum):
    I = 0
    J = 1
    K = 2


class NodeId(NamedTuple):
    side: Side
    index: int

    def gid(self, n: int) -> int:
        """Physical id in ``[0, 3n)`` used by the network simulator."""
        return int(self.side) * n + self.index

    @classmethod
    def from_gid(cls, gid: int, n: int) -> "NodeId":
        return cls(Side(gid // n), gid % n)

    def __repr__(self) -> str:
        return f"{self.side.name}{self.index}"


class Triangle(NamedTuple):
    i: int
    j: int
    k: int

    def nodes(self) -> tuple[NodeId, NodeId, NodeId]:
        return (NodeId(Side.I, self.i), NodeId(Side.J, self.j), NodeId(Side.K, self.k))

    def jk(self) -> tuple[int, int]:
        return (self.j, self.k)


@dataclass(frozen=True)
class SparsePattern:
    """Nonzero structure of an ``n x n`` matrix as sorted column lists per row."""

    n: int
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        self.check()
        object.__setattr__(self, "_rowsets", tuple(frozenset(r) for r in self.rows))

    def check(self) -> None:
        if self.n < 0:
            raise PatternError(f"negative dimension {self.n}")
        if len(self.rows) != self.n:
            raise PatternError(f"expected {self.n} rows, got {len(self.rows)}")
        for r, cols in enumerate(self.rows):
            prev = -1
            for c in cols:
                if not 0 <= c < self.n:
                    raise PatternError(f"row {r}: column {c} out of range")
                if c <= prev:
                    raise PatternError(f"row {r}: columns not strictly increasing")
                prev = c

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[tuple[int, int]]) -> "SparsePattern":
        rows: list[set[int]] = [set() for _ in range(n)]
        for r, c in entries:
            if not (0 <= r < n and 0 <= c < n):
                raise PatternError(f"entry ({r}, {c}) out of range for n={n}")
            rows[r].add(c)
        return cls(n, tuple(tuple(sorted(s)) for s in rows))

    @classmethod
    def empty(cls, n: int) -> "SparsePattern":
        return cls(n, ((),) * n)

    @classmethod
    def identity(cls, n: int) -> "SparsePattern":
        return cls(n, tuple((r,) for r in range(n)))

    def __contains__(self, entry) -> bool:
        r, c = entry
        return 0 <= r < self.n and c in self._rowsets[r]

    def row(self, r: int) -> tuple[int, ...]:
        return self.rows[r]

    def rowset(self, r: int) -> frozenset[int]:
        return self._rowsets[r]

    def entries(self) -> Iterator[tuple[int, int]]:
        for r, cols in enumerate(self.rows):
            for c in cols:
                yield (r, c)

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def column_counts(self) -> list[int]:
        counts = [0] * self.n
        for cols in self.rows:
            for c in cols:
                counts[c] += 1
        return counts

    def max_row(self) -> int:
        return max((len(r) for r in self.rows), default=0)

    def max_col(self) -> int:
        return max(self.column_counts(), default=0)

    def transpose(self) -> "SparsePattern":
        return SparsePattern.from_entries(self.n, ((c, r) for r, c in self.entries()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=bool)
        for r, c in self.entries():
            out[r, c] = True
        return out


def validate_uniform_sparsity(pattern: SparsePattern, d: int) -> bool:
    """True iff every row and every column of ``pattern`` has at most ``d`` nonzeros."""
    pattern.check()
    return pattern.max_row() <= d and pattern.max_col() <= d


@dataclass
class TriInstance:
    """Supported-model input: known patterns plus runtime values.

    ``val_a``/``val_b`` map ``(row, col)`` to semiring elements.  Missing keys
    read as the semiring zero; a pattern entry with zero value is legal, a
    nonzero value outside the pattern is not.
    """

    n: int
    d: int
    semiring: Semiring
    pat_a: SparsePattern
    pat_b: SparsePattern
    pat_x: SparsePattern
    val_a: dict = field(default_factory=dict)
    val_b: dict = field(default_factory=dict)

    def __post_init__(self):
        self.semiring = get_semiring(self.semiring)
        if self.d < 1:
            raise PreconditionError("d must be at least 1")
        for name, pat in (("A", self.pat_a), ("B", self.pat_b), ("X", self.pat_x)):
            if pat.n != self.n:
                raise PreconditionError(f"pattern {name} has dimension {pat.n}, expected {self.n}")
            if not validate_uniform_sparsity(pat, self.d):
                raise PreconditionError(f"pattern {name} is not uniformly {self.d}-sparse")
        zero = self.semiring.zero
        for name, vals, pat in (("A", self.val_a, self.pat_a), ("B", self.val_b, self.pat_b)):
            for key, v in vals.items():
                if v != zero and key not in pat:
                    raise PreconditionError(
                        f"value {name}{key} is nonzero but outside the known pattern"
                    )

    def a(self, i: int, j: int):
        return self.val_a.get((i, j), self.semiring.zero)

    def b(self, j: int, k: int):
        return self.val_b.get((j, k), self.semiring.zero)

    def with_values(self, val_a: dict, val_b: dict) -> "TriInstance":
        return TriInstance(self.n, self.d, self.semiring, self.pat_a, self.pat_b, self.pat_x,
                           dict(val_a), dict(val_b))


class TriangleSet:
    """A mutable set of triangles with an eagerly maintained incidence index."""

    def __init__(self, triangles: Iterable[Triangle] = ()):
        self._tris: set[Triangle] = set()
        self._inc: dict[NodeId, set[Triangle]] = defaultdict(set)
        self.update(triangles)

    def add(self, t: Triangle) -> None:
        if not isinstance(t, Triangle):
            t = Triangle(*t)
        if t in self._tris:
            return
        self._tris.add(t)
        for v in t.nodes():
            self._inc[v].add(t)

    def update(self, triangles: Iterable[Triangle]) -> None:
        for t in triangles:
            self.add(t)

    def discard(self, t: Triangle) -> None:
        if t not in self._tris:
            return
        self._tris.remove(t)
        for v in t.nodes():
            s = self._inc[v]
            s.discard(t)
            if not s:
                del self._inc[v]

    def remove_all(self, triangles: Iterable[Triangle]) -> None:
        for t in list(triangles):
            self.discard(t)

    def __len__(self) -> int:
        return len(self._tris)

    def __iter__(self) -> Iterator[Triangle]:
        return iter(self._tris)

    def __contains__(self, t) -> bool:
        return t in self._tris

    def __eq__(self, other) -> bool:
        if isinstance(other, TriangleSet):
            return self._tris == other._tris
        if isinstance(other, (set, frozenset)):
            return self._tris == other
        return NotImplemented

    def __repr__(self) -> str:
        return f"TriangleSet({len(self)} triangles)"

    def copy(self) -> "TriangleSet":
        out = TriangleSet()
        out._tris = set(self._tris)
        out._inc = defaultdict(set, {v: set(s) for v, s in self._inc.items()})
        return out

    def as_set(self) -> frozenset[Triangle]:
        return frozenset(self._tris)

    def sorted(self) -> list[Triangle]:
        return sorted(self._tris)

    def touching(self, node: NodeId) -> frozenset[Triangle]:
        return frozenset(self._inc.get(node, ()))

    def load(self, node: NodeId) -> int:
        return len(self._inc.get(node, ()))

    def loads(self) -> dict[NodeId, int]:
        return {v: len(s) for v, s in self._inc.items()}

    def max_load(self) -> int:
        return max((len(s) for s in self._inc.values()), default=0)

    def nodes(self) -> set[NodeId]:
        return set(self._inc)

    def check_index(self) -> bool:
        """Recompute the incidence index from scratch and compare."""
        fresh: dict[NodeId, set[Triangle]] = defaultdict(set)
        for t in self._tris:
            for v in t.nodes():
                fresh[v].add(t)
        return dict(fresh) == {v: s for v, s in self._inc.items() if s}


@dataclass(frozen=True)
class Cluster:
    """``d`` nodes from each of ``I``, ``J`` and ``K`` (stored as index sets)."""

    i_nodes: frozenset[int]
    j_nodes: frozenset[int]
    k_nodes: frozenset[int]

    def __post_init__(self):
        for name in ("i_nodes", "j_nodes", "k_nodes"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not (len(self.i_nodes) == len(self.j_nodes) == len(self.k_nodes)):
            raise ValueError("a cluster has the same number of nodes on each side")

    @property
    def d(self) -> int:
        return len(self.i_nodes)

    def side(self, side: Side) -> frozenset[int]:
        return (self.i_nodes, self.j_nodes, self.k_nodes)[side]

    def nodes(self) -> list[NodeId]:
        return ([NodeId(Side.I, x) for x in sorted(self.i_nodes)]
                + [NodeId(Side.J, x) for x in sorted(self.j_nodes)]
                + [NodeId(Side.K, x) for x in sorted(self.k_nodes)])

    def gids(self, n: int) -> list[int]:
        return [v.gid(n) for v in self.nodes()]

    def __contains__(self, node) -> bool:
        side, index = node
        return index in self.side(Side(side))

    def contains_triangle(self, t: Triangle) -> bool:
        return t.i in self.i_nodes and t.j in self.j_nodes and t.k in self.k_nodes

    def intersects(self, other: "Cluster") -> bool:
        return bool(self.i_nodes & other.i_nodes or self.j_nodes & other.j_nodes
                    or self.k_nodes & other.k_nodes)


def enumerate_triangles(inst: TriInstance) -> TriangleSet:
    out = TriangleSet()
    for i in range(inst.n):
        xrow = inst.pat_x.rowset(i)
        if not xrow:
            continue
        for j in inst.pat_a.row(i):
            for k in inst.pat_b.row(j):
                if k in xrow:
                    out.add(Triangle(i, j, k))
    return out


def support_graph(T: TriangleSet, n: int | None = None) -> nx.Graph:
    """The tripartite graph whose edges are node pairs sharing a triangle of ``T``."""
    g = nx.Graph()
    if n is not None:
        g.add_nodes_from(NodeId(s, x) for s in Side for x in range(n))
    for t in T:
        a, b, c = t.nodes()
        g.add_edges_from(((a, b), (b, c), (a, c)))
    return g


def jk_edge_multiplicity(T: Iterable[Triangle]) -> Counter:
    return Counter((t.j, t.k) for t in T)


def triangles_in_cluster(T: TriangleSet, U: Cluster) -> TriangleSet:
    out = TriangleSet()
    for i in U.i_nodes:
        for t in T.touching(NodeId(Side.I, i)):
            if t.j in U.j_nodes and t.k in U.k_nodes:
                out.add(t)
    return out


def restricted_product(inst: TriInstance, triangles: Iterable[Triangle]) -> dict:
    """Sum of ``A_ij * B_jk`` into ``(i, k)`` over exactly the given triangles.

    Every ``(i, k)`` of the output pattern is present, initialised to zero.
    """
    sr = inst.semiring
    out = {(i, k): sr.zero for i, k in inst.pat_x.entries()}
    for t in triangles:
        out[(t.i, t.k)] = sr.add(out[(t.i, t.k)], sr.mul(inst.a(t.i, t.j), inst.b(t.j, t.k)))
    return out


def dense_oracle(inst: TriInstance) -> dict:
    """Dense ``n x n x n`` product restricted to the output pattern.

    Shares no code with the triangle machinery: values are laid out as dense
    numpy arrays and multiplied with the semiring's dense operation.
    """
    n, sr = inst.n, inst.semiring
    if sr.name == "integer":
        A = np.zeros((n, n), dtype=np.int64)
        B = np.zeros((n, n), dtype=np.int64)
        for (i, j), v in inst.val_a.items():
            A[i, j] = v
        for (j, k), v in inst.val_b.items():
            B[j, k] = v
        X = A @ B
        return {(i, k): int(X[i, k]) for i, k in inst.pat_x.entries()}
    if sr.name == "boolean":
        A = np.zeros((n, n), dtype=np.int64)
        B = np.zeros((n, n), dtype=np.int64)
        for (i, j), v in inst.val_a.items():
            A[i, j] = bool(v)
        for (j, k), v in inst.val_b.items():
            B[j, k] = bool(v)
        X = (A @ B) > 0
        return {(i, k): bool(X[i, k]) for i, k in inst.pat_x.entries()}
    if sr.name == "tropical":
        A = np.full((n, n), np.inf)
        B = np.full((n, n), np.inf)
        for (i, j), v in inst.val_a.items():
            A[i, j] = v
        for (j, k), v in inst.val_b.items():
            B[j, k] = v
        X = np.full((n, n), np.inf)
        for j in range(n):
            np.minimum(X, A[:, j, None] + B[None, j, :], out=X)
        return {(i, k): (float("inf") if np.isinf(X[i, k]) else int(X[i, k]))
                for i, k in inst.pat_x.entries()}
    raise ValueError(f"no dense oracle for semiring {sr.name!r}")


def triple_loop_product(inst: TriInstance) -> dict:
    """``X_ik = sum_j A_ij B_jk`` by a plain loop over every ``j``, for each output slot."""
    sr = inst.semiring
    out = {}
    for i, k in inst.pat_x.entries():
        acc = sr.zero
        for j in range(inst.n):
            acc = sr.add(acc, sr.mul(inst.a(i, j), inst.b(j, k)))
        out[(i, k)] = acc
    return out


def triple_loop_triangles(inst: TriInstance) -> set[Triangle]:
    """All triangles by the plain ``n^3`` scan (test oracle for small ``n``)."""
    A, B, X = inst.pat_a.to_dense(), inst.pat_b.to_dense(), inst.pat_x.to_dense()
    n = inst.n
    return {Triangle(i, j, k) for i in range(n) for j in range(n) for k in range(n)
            if A[i, j] and B[j, k] and X[i, k]}
