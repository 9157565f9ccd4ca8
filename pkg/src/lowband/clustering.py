"""Preprocessing: carve the triangle set into clustered layers plus a residual.

Everything here depends only on the known sparsity patterns, so in the
supported model it is free precomputation; no rounds are charged for it.

Bounds used throughout (``d``, ``n`` the instance parameters):

* a single cluster search on ``|T| >= d^(2-eps) n`` triangles returns a
  cluster holding at least ``d^(3-4 eps) / 24`` of them;
* one layer extracted at level ``eps2`` with slack ``delta`` holds at least
  ``d^(2-5 eps2-4 delta) n / 144`` triangles, provided ``d^delta >= 2``;
* a schedule row ``(eps1, eps2, delta)`` yields at most
  ``144 d^(5 eps2 - eps1 + 4 delta)`` layers and leaves at most
  ``d^(2-eps2) n`` triangles.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .core import Cluster, NodeId, PreconditionError, Side, TriangleSet, triangles_in_cluster

log = logging.getLogger(__name__)

# relative slack for internal proof-guarantee assertions on float thresholds
_RTOL = 1e-9


@dataclass(frozen=True)
class ScheduleRow:
    eps1: float
    eps2: float
    delta: float

    def __post_init__(self):
        if not (0 <= self.eps1 < self.eps2):
            raise ValueError(f"schedule row needs 0 <= eps1 < eps2, got {self.eps1}, {self.eps2}")
        if not self.delta > 0:
            raise ValueError(f"schedule row needs delta > 0, got {self.delta}")


TABLE1 = (
    ScheduleRow(0.0, 0.149775, 0.00001),
    ScheduleRow(0.149775, 0.179736, 0.00001),
    ScheduleRow(0.179736, 0.185724, 0.00001),
    ScheduleRow(0.185724, 0.186926, 0.00001),
    ScheduleRow(0.186926, 0.187166, 0.00001),
)

TABLE2 = (
    ScheduleRow(0.0, 0.118537, 0.00001),
    ScheduleRow(0.118537, 0.142249, 0.00001),
    ScheduleRow(0.142249, 0.146986, 0.00001),
    ScheduleRow(0.146986, 0.147937, 0.00001),
    ScheduleRow(0.147937, 0.148127, 0.00001),
)

SIMPLIFIED = (ScheduleRow(0.0, 0.1, 0.05),)

PRESETS = {"table1": TABLE1, "table2": TABLE2, "simplified": SIMPLIFIED}

# residual exponent each preset is meant to reach, as used by the small-component phase
PRESET_SMALL_EPS = {"table1": 0.186, "table2": 0.146, "simplified": 0.1}


def check_schedule(rows: Sequence[ScheduleRow]) -> None:
    if not rows:
        raise ValueError("empty schedule")
    if rows[0].eps1 != 0:
        raise ValueError("the first schedule row must start at eps1 = 0")
    for a, b in zip(rows, rows[1:]):
        if b.eps1 != a.eps2:
            raise ValueError(f"schedule rows do not chain: eps2={a.eps2} then eps1={b.eps1}")


def load_schedule(spec: str | Path) -> tuple[ScheduleRow, ...]:
    """A preset name or a text file with one ``eps1 eps2 delta`` row per line."""
    if isinstance(spec, str) and spec in PRESETS:
        return PRESETS[spec]
    rows = []
    for line in Path(spec).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"schedule line needs three numbers: {line!r}")
        rows.append(ScheduleRow(*(float(p) for p in parts)))
    rows = tuple(rows)
    check_schedule(rows)
    return rows


def is_large(d: int, delta: float) -> bool:
    """Whether ``d`` is large enough, relative to ``delta``, for the layer bounds."""
    return d ** delta >= 2


def cluster_bound(d: int, eps: float) -> float:
    return d ** (3 - 4 * eps) / 24


def layer_yield_bound(d: int, n: int, eps2: float, delta: float) -> float:
    return d ** (2 - 5 * eps2 - 4 * delta) * n / 144


def layer_count_bound(d: int, row: ScheduleRow) -> float:
    return 144 * d ** (5 * row.eps2 - row.eps1 + 4 * row.delta)


# ------------------------------------------------------------ one cluster

def find_heavy_triangles(T: TriangleSet, eps: float, d: int, n: int) -> TriangleSet:
    """Triangles whose J-K edge lies in at least ``d^(1-eps)/2`` triangles of ``T``."""
    threshold = 0.5 * d ** (1 - eps)
    mult = Counter((t.j, t.k) for t in T)
    return TriangleSet(t for t in T if mult[(t.j, t.k)] >= threshold)


@dataclass
class ClusterSearchState:
    heavy: TriangleSet
    pivot: int
    J0: frozenset[int]
    K0: frozenset[int]
    labels: dict[int, tuple[int, int, int, int]]  # i -> (t, y, z, e)
    top: list[int]
    sum_top: int
    sum_rest: int
    min_top: int

    def t(self, i: int) -> int:
        return self.labels.get(i, (0, 0, 0, 0))[0]


def cluster_search(T: TriangleSet, eps: float, d: int, n: int) -> ClusterSearchState:
    """Heavy filtering, pivot choice, corner sets, labels and the top-``d`` I-nodes."""
    if n < d:
        raise PreconditionError(f"cluster search needs n >= d (n={n}, d={d})")
    need = d ** (2 - eps) * n
    if len(T) < need:
        raise PreconditionError(f"cluster search needs |T| >= d^(2-eps) n = {need:.3f}, got {len(T)}")

    heavy = find_heavy_triangles(T, eps, d, n)
    per_i = Counter(t.i for t in heavy)
    # max count, ties to the smallest index
    pivot = min(per_i, key=lambda i: (-per_i[i], i))
    if per_i[pivot] < 0.5 * d ** (2 - eps) * (1 - _RTOL):
        raise AssertionError(f"no pivot with {0.5 * d ** (2 - eps):.3f} heavy triangles; found {per_i[pivot]}")

    x_tris = heavy.touching(NodeId(Side.I, pivot))
    J0 = frozenset(t.j for t in x_tris)
    K0 = frozenset(t.k for t in x_tris)

    t_cnt: Counter = Counter()
    ij_edges = defaultdict(set)
    ik_edges = defaultdict(set)
    for j in J0:
        for t in heavy.touching(NodeId(Side.J, j)):
            ij_edges[t.i].add(j)
            if t.k in K0:
                t_cnt[t.i] += 1
    for k in K0:
        for t in heavy.touching(NodeId(Side.K, k)):
            ik_edges[t.i].add(k)
    labels = {}
    for i in set(ij_edges) | set(ik_edges):
        y, z = len(ij_edges[i]), len(ik_edges[i])
        labels[i] = (t_cnt[i], y, z, y + z)

    order = sorted(range(n), key=lambda i: (-t_cnt[i], i))
    top = order[:d]
    sum_top = sum(t_cnt[i] for i in top)
    sum_rest = sum(t_cnt[i] for i in order[d:])
    min_top = min(t_cnt[i] for i in top)
    if sum_top < cluster_bound(d, eps) * (1 - _RTOL):
        raise AssertionError(f"top-d label sum {sum_top} below the guaranteed {cluster_bound(d, eps):.3f}")
    return ClusterSearchState(heavy, pivot, J0, K0, labels, top, sum_top, sum_rest, min_top)


def _pad(nodes: frozenset[int], d: int, n: int, avoid: set[int]) -> frozenset[int]:
    out = set(nodes)
    for x in range(n):
        if len(out) >= d:
            break
        if x not in out and x not in avoid:
            out.add(x)
    for x in range(n):  # only reached when avoid leaves too few candidates
        if len(out) >= d:
            break
        out.add(x)
    return frozenset(out)


def find_one_cluster(T: TriangleSet, eps: float, d: int, n: int,
                     used: Optional[dict[Side, set[int]]] = None) -> tuple[Cluster, int]:
    """A cluster ``U`` with ``|T[U]| >= d^(3-4 eps)/24``; returns ``(U, |T[U]|)``.

    ``used`` lists nodes already taken by other clusters of the current
    layer; J/K padding avoids them where possible.
    """
    state = cluster_search(T, eps, d, n)
    used = used or {}
    U = Cluster(frozenset(state.top),
                _pad(state.J0, d, n, used.get(Side.J, set())),
                _pad(state.K0, d, n, used.get(Side.K, set())))
    return U, len(triangles_in_cluster(T, U))


# ----------------------------------------------------------- one layer

@dataclass
class ClusteredSet:
    clusters: list[Cluster] = field(default_factory=list)
    per_cluster: list[TriangleSet] = field(default_factory=list)

    def add(self, U: Cluster, tris: TriangleSet) -> None:
        self.clusters.append(U)
        self.per_cluster.append(tris)

    def __len__(self) -> int:
        return sum(len(p) for p in self.per_cluster)

    def triangles(self) -> TriangleSet:
        out = TriangleSet()
        for p in self.per_cluster:
            out.update(p)
        return out

    def is_valid(self) -> bool:
        """Disjoint clusters, and every triangle lies inside its own cluster."""
        seen = {s: set() for s in Side}
        for U in self.clusters:
            for s in Side:
                if seen[s] & U.side(s):
                    return False
                seen[s] |= U.side(s)
        for U, tris in zip(self.clusters, self.per_cluster):
            if any(not U.contains_triangle(t) for t in tris):
                return False
        return True


def _repair(U: Cluster, used: dict[Side, set[int]], T: TriangleSet, n: int) -> Optional[Cluster]:
    """Swap nodes shared with earlier clusters for unused ones.

    A node of an earlier cluster has no triangle left in ``T``, so swapping it
    out loses nothing.  Returns ``None`` when a side has run out of nodes.
    """
    sides = []
    for s in Side:
        mine = set(U.side(s))
        clash = mine & used[s]
        if clash:
            for v in clash:
                if T.load(NodeId(s, v)):
                    raise AssertionError(f"node {s.name}{v} reused while still carrying triangles")
            mine -= clash
            for x in range(n):
                if len(mine) == len(U.side(s)):
                    break
                if x not in mine and x not in used[s]:
                    mine.add(x)
            if len(mine) < len(U.side(s)):
                return None
        sides.append(frozenset(mine))
    return Cluster(*sides)


def extract_clustered_layer(T: TriangleSet, eps2: float, delta: float, d: int, n: int,
                            history: Optional[list[int]] = None) -> tuple[ClusteredSet, TriangleSet]:
    """Split ``T`` into a clustered part and the rest.

    Repeatedly finds a dense cluster at level ``eps2 + delta``, takes the
    triangles inside it and defers every other triangle touching it, until
    fewer than ``d^(2-eps2-delta) n`` triangles remain.
    """
    P = ClusteredSet()
    if len(T) < d ** (2 - eps2) * n:
        return P, T.copy()
    cur = T.copy()
    rest = TriangleSet()
    stop = d ** (2 - eps2 - delta) * n
    used: dict[Side, set[int]] = {s: set() for s in Side}
    while len(cur) >= stop:
        if history is not None:
            history.append(len(cur))
        U, _ = find_one_cluster(cur, eps2 + delta, d, n, used=used)
        U = _repair(U, used, cur, n)
        if U is None:
            log.warning("layer extraction stopped early: a side ran out of unused nodes (n=%d, d=%d)", n, d)
            break
        inside = triangles_in_cluster(cur, U)
        cur.remove_all(inside)
        touching = set()
        for v in U.nodes():
            touching |= cur.touching(v)
        cur.remove_all(touching)
        rest.update(touching)
        P.add(U, inside)
        for s in Side:
            used[s] |= U.side(s)
    if history is not None:
        history.append(len(cur))
    rest.update(cur)
    return P, rest


# ------------------------------------------------------------ many layers

def decompose_layers(T: TriangleSet, row: ScheduleRow, d: int, n: int) -> tuple[list[ClusteredSet], TriangleSet]:
    if len(T) > d ** (2 - row.eps1) * n:
        raise PreconditionError(f"|T| = {len(T)} exceeds d^(2-eps1) n = {d ** (2 - row.eps1) * n:.3f}")
    layers: list[ClusteredSet] = []
    cur = T.copy()
    limit = d ** (2 - row.eps2) * n
    while len(cur) > limit:
        P, cur = extract_clustered_layer(cur, row.eps2, row.delta, d, n)
        if len(P) == 0:
            log.warning("no progress extracting a layer at eps2=%g; stopping", row.eps2)
            break
        layers.append(P)
    return layers, cur


@dataclass
class Decomposition:
    layers: list[ClusteredSet]
    residual: TriangleSet
    schedule: tuple[ScheduleRow, ...]
    layer_rows: list[int] = field(default_factory=list)  # schedule row that produced each layer
    row_residuals: list[int] = field(default_factory=list)  # triangles left after each row

    def partitions(self, T: TriangleSet) -> bool:
        """Layers and residual are pairwise disjoint and cover exactly ``T``."""
        parts = [p.as_set() for L in self.layers for p in L.per_cluster] + [self.residual.as_set()]
        total = sum(len(p) for p in parts)
        union = frozenset().union(*parts)
        return total == len(union) and union == T.as_set()


def schedule_decompose(That: TriangleSet, schedule: Sequence[ScheduleRow], d: int, n: int,
                       respect_small_d: bool = False) -> Decomposition:
    """Run the schedule rows in order, each on the previous row's residual.

    With ``respect_small_d``, a ``d`` that counts as small for any row
    (``d^delta < 2``) produces no layers at all and the whole input becomes
    the residual.
    """
    schedule = tuple(schedule)
    check_schedule(schedule)
    layers: list[ClusteredSet] = []
    rows_used: list[int] = []
    left: list[int] = []
    cur = That.copy()
    if respect_small_d and not all(is_large(d, row.delta) for row in schedule):
        return Decomposition(layers, cur, schedule, rows_used)
    for r, row in enumerate(schedule):
        new, cur = decompose_layers(cur, row, d, n)
        layers.extend(new)
        rows_used.extend([r] * len(new))
        left.append(len(cur))
    return Decomposition(layers, cur, schedule, rows_used, left)
