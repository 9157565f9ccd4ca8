"""Making a small but lopsided triangle set uniformly sparse.

A node touching at least ``d^(2-eps/2)`` triangles is *bad*.  Bad triangles
are coloured so that each bad node sees a bounded number per colour; every
bad node is then split into one virtual copy per colour, each copy hosted
by a distinct helper node.  Brute force on the virtual instance plus a
per-output sum over colour copies gives back the original products.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import NodeId, PreconditionError, Side, Triangle, TriangleSet, TriInstance
from .semiring import Semiring

log = logging.getLogger(__name__)

_RTOL = 1e-9


class ColoringFailed(RuntimeError):
    def __init__(self, attempts: int, worst: int, bound: float):
        super().__init__(f"no colouring within load {bound:.2f} after {attempts} attempts (best max load {worst})")
        self.attempts = attempts
        self.worst = worst
        self.bound = bound


def bad_threshold(d: int, eps: float) -> float:
    return d ** (2 - eps / 2)


def bad_node_bound(n: int, d: int, eps: float) -> int:
    return math.ceil(3 * n / d ** (eps / 2))


def default_color_count(d: int, eps: float) -> int:
    return max(1, math.floor(d ** (eps / 2) / 3))


def virtual_load_bound(d: int, eps: float) -> float:
    return 6 * d ** (2 - eps / 2)


@dataclass
class BadClassification:
    bad_nodes: frozenset[NodeId]
    bad: TriangleSet
    good: TriangleSet
    threshold: float
    n: int
    d: int
    eps: float

    def is_bad(self, v: NodeId) -> bool:
        return v in self.bad_nodes

    def max_bad_load(self) -> int:
        return max((self.bad.load(v) for v in self.bad_nodes), default=0)


def classify_bad(T: TriangleSet, d: int, eps: float, n: int) -> BadClassification:
    cap = d ** (2 - eps) * n
    if len(T) > cap * (1 + _RTOL):
        raise PreconditionError(f"|T| = {len(T)} exceeds d^(2-eps) n = {cap:.3f}; split it first")
    threshold = bad_threshold(d, eps)
    bad_nodes = frozenset(v for v, c in T.loads().items() if c >= threshold)
    bad, good = TriangleSet(), TriangleSet()
    for t in T:
        (bad if any(v in bad_nodes for v in t.nodes()) else good).add(t)
    if len(bad_nodes) > bad_node_bound(n, d, eps):
        raise AssertionError(f"{len(bad_nodes)} bad nodes exceed the bound {bad_node_bound(n, d, eps)}")
    return BadClassification(bad_nodes, bad, good, threshold, n, d, eps)


@dataclass
class TriangleColoring:
    color_count: int
    color_of: dict[Triangle, int]  # colours are 1..color_count
    load_bound: float
    attempts: int = 1
    fallback: bool = False

    def colors(self) -> range:
        return range(1, self.color_count + 1)

    def loads(self, nodes: Iterable[NodeId]) -> Counter:
        """Triangles per ``(node, colour)`` for the given nodes."""
        nodes = set(nodes)
        out: Counter = Counter()
        for t, c in self.color_of.items():
            for v in t.nodes():
                if v in nodes:
                    out[(v, c)] += 1
        return out


def color_bad_triangles(bad: BadClassification, colors: int, load_bound: float,
                        max_attempts: int = 50, seed: int = 0) -> TriangleColoring:
    """Uniform random colouring, redrawn until every bad node's per-colour load fits.

    Attempt ``a`` draws from a generator seeded with ``(seed, a)``, so the
    result depends only on the arguments.
    """
    if colors < 1:
        raise PreconditionError("need at least one colour")
    tris = bad.bad.sorted()
    # row r of `hits` lists the indices of the bad nodes touched by triangle r
    index = {v: x for x, v in enumerate(sorted(bad.bad_nodes))}
    hits = [[index[v] for v in t.nodes() if v in index] for t in tris]
    rows = np.repeat(np.arange(len(tris)), [len(h) for h in hits])
    cols = np.fromiter((x for h in hits for x in h), dtype=np.int64, count=len(rows))
    best = None
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        draw = rng.integers(1, colors + 1, size=len(tris))
        load = np.zeros((len(index), colors + 1), dtype=np.int64)
        np.add.at(load, (cols, draw[rows]), 1)
        worst = int(load.max()) if load.size else 0
        best = worst if best is None else min(best, worst)
        if worst <= load_bound:
            return TriangleColoring(colors, dict(zip(tris, draw.tolist())), load_bound, attempt + 1)
    raise ColoringFailed(max_attempts, best or 0, load_bound)


def color_with_fallback(bad: BadClassification, colors: int, load_bound: float,
                        max_attempts: int = 50, seed: int = 0) -> TriangleColoring:
    """Like :func:`color_bad_triangles`, degrading to a single colour on failure."""
    try:
        return color_bad_triangles(bad, colors, load_bound, max_attempts, seed)
    except ColoringFailed as exc:
        log.warning("%s; falling back to one colour", exc)
        single = color_bad_triangles(bad, 1, bad.max_bad_load(), 1, seed)
        single.fallback = True
        single.attempts = exc.attempts + 1
        return single


def assign_helpers(bad: BadClassification, colors: int,
                   universe: Sequence[NodeId]) -> dict[NodeId, tuple[NodeId, ...]]:
    """Give every bad node ``colors`` helpers; helper ``c-1`` hosts copy ``c``.

    Helpers are handed out in increasing physical id, non-bad nodes first,
    so the sets are disjoint and deterministic.
    """
    if len(bad.bad_nodes) * colors > len(universe):
        raise PreconditionError(
            f"{len(bad.bad_nodes)} bad nodes x {colors} colours exceed {len(universe)} available nodes")
    n = bad.n
    pool = sorted(universe, key=lambda v: (v in bad.bad_nodes, v.gid(n)))
    out = {}
    pos = 0
    for v in sorted(bad.bad_nodes, key=lambda v: v.gid(n)):
        out[v] = tuple(pool[pos:pos + colors])
        pos += colors
    return out


class VNode(NamedTuple):
    node: NodeId
    color: int


class VTriangle(NamedTuple):
    i: VNode
    j: VNode
    k: VNode

    def nodes(self) -> tuple[VNode, VNode, VNode]:
        return (self.i, self.j, self.k)


@dataclass
class VirtualInstance:
    n: int
    d: int
    eps: float
    colors: tuple[int, ...]
    bad_nodes: frozenset[NodeId]
    helpers: dict[NodeId, tuple[NodeId, ...]]
    node_map: dict[VNode, NodeId]
    virt_a: dict[tuple[VNode, VNode], object]
    virt_b: dict[tuple[VNode, VNode], object]
    triangles: list[VTriangle]
    origin: dict[VTriangle, Triangle] = field(default_factory=dict)

    def color_set(self, v: NodeId) -> tuple[int, ...]:
        return self.colors if v in self.bad_nodes else (0,)

    def vnodes(self) -> list[VNode]:
        return list(self.node_map)

    def loads(self) -> Counter:
        out: Counter = Counter()
        for vt in self.triangles:
            for v in vt.nodes():
                out[v] += 1
        return out

    def max_load(self) -> int:
        return max(self.loads().values(), default=0)

    def simulator(self, v: VNode) -> NodeId:
        return self.node_map[v]


def build_virtual_instance(inst: TriInstance, T: TriangleSet, bad: BadClassification,
                           coloring: TriangleColoring,
                           helpers: dict[NodeId, tuple[NodeId, ...]]) -> VirtualInstance:
    n = inst.n
    C = tuple(coloring.colors())

    def cs(v: NodeId):
        return C if v in bad.bad_nodes else (0,)

    node_map: dict[VNode, NodeId] = {}
    for s in Side:
        for x in range(n):
            v = NodeId(s, x)
            if v in bad.bad_nodes:
                for c in C:
                    node_map[VNode(v, c)] = helpers[v][c - 1]
            else:
                node_map[VNode(v, 0)] = v

    virt_a, virt_b = {}, {}
    for (i, j) in inst.pat_a.entries():
        vi, vj = NodeId(Side.I, i), NodeId(Side.J, j)
        for c in cs(vi):
            for e in cs(vj):
                virt_a[(VNode(vi, c), VNode(vj, e))] = inst.a(i, j)
    for (j, k) in inst.pat_b.entries():
        vj, vk = NodeId(Side.J, j), NodeId(Side.K, k)
        for c in cs(vj):
            for e in cs(vk):
                virt_b[(VNode(vj, c), VNode(vk, e))] = inst.b(j, k)

    triangles, origin = [], {}
    for t in T.sorted():
        col = coloring.color_of.get(t, 0) if t in bad.bad else 0
        vt = VTriangle(*(VNode(v, col if v in bad.bad_nodes else 0) for v in t.nodes()))
        triangles.append(vt)
        origin[vt] = t

    vi = VirtualInstance(n, inst.d, bad.eps, C, bad.bad_nodes, helpers, node_map,
                         virt_a, virt_b, triangles, origin)
    _check_virtual(vi, coloring)
    return vi


def _check_virtual(vi: VirtualInstance, coloring: TriangleColoring) -> None:
    size_v = 3 * vi.n
    if len(vi.node_map) > 2 * size_v:
        raise ValueError(f"{len(vi.node_map)} virtual nodes exceed 2|V| = {2 * size_v}")
    seen: set[NodeId] = set()
    for hs in vi.helpers.values():
        if seen & set(hs):
            raise ValueError("helper sets overlap")
        seen |= set(hs)
    bound = max(virtual_load_bound(vi.d, vi.eps), coloring.load_bound) if coloring.fallback \
        else virtual_load_bound(vi.d, vi.eps)
    worst = vi.max_load()
    if worst > bound * (1 + _RTOL):
        raise ValueError(f"a virtual node carries {worst} triangles, above {bound:.2f}")


def recover_output(virt_x: dict[tuple[VNode, VNode], object], vi: VirtualInstance | None,
                   semiring: Semiring) -> dict[tuple[int, int], object]:
    """``X_ik`` as the sum of ``virt_x[i_c, k_f]`` over both colour sets.

    With ``vi`` given, keys naming a copy the instance does not have are rejected.
    """
    out: dict[tuple[int, int], object] = {}
    for (vi_node, vk_node), value in virt_x.items():
        if vi is not None and (vi_node.color not in vi.color_set(vi_node.node)
                               or vk_node.color not in vi.color_set(vk_node.node)):
            raise ValueError(f"no virtual copy {vi_node} or {vk_node}")
        key = (vi_node.node.index, vk_node.node.index)
        out[key] = semiring.add(out.get(key, semiring.zero), value)
    return out
