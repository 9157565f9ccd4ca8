"""Synthetic instances for tests and experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import SparsePattern, TriInstance
from .semiring import Semiring, get_semiring

KINDS = ("randomUniform", "plantedClusters", "plantedBadNode", "boundedDegreeGraph")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int
    d: int
    density: float = 1.0
    seed: int = 0
    semiring: str = "integer"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator {self.kind!r}; expected one of {KINDS}")
        if not (self.n >= self.d >= 1):
            raise ValueError(f"need n >= d >= 1, got n={self.n}, d={self.d}")
        if not (0 <= self.density <= 1):
            raise ValueError(f"density is a fraction of d and must lie in [0, 1], got {self.density}")


def _values(entries: Iterable[tuple[int, int]], sr: Semiring, rng) -> dict:
    return {e: sr.sample(rng) for e in sorted(entries)}


def _instance(n, d, sr, a, b, x, rng) -> TriInstance:
    pa = SparsePattern.from_entries(n, a)
    pb = SparsePattern.from_entries(n, b)
    px = SparsePattern.from_entries(n, x)
    return TriInstance(n, d, sr, pa, pb, px, _values(pa.entries(), sr, rng), _values(pb.entries(), sr, rng))


def _perm_union(n: int, m: int, rng) -> set[tuple[int, int]]:
    """Union of ``m`` random permutation matrices: at most ``m`` per row and column."""
    out = set()
    for _ in range(m):
        p = rng.permutation(n)
        out.update((r, int(p[r])) for r in range(n))
    return out


def random_uniform(n: int, d: int, density: float = 1.0, seed: int = 0,
                   semiring: str | Semiring = "integer") -> TriInstance:
    sr = get_semiring(semiring)
    if not 0 <= density <= 1:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    m = int(round(density * d))
    a, b, x = (_perm_union(n, m, rng) for _ in range(3))
    return _instance(n, d, sr, a, b, x, rng)


def planted_clusters(n: int, d: int, seed: int = 0, semiring: str | Semiring = "integer") -> TriInstance:
    """``n // d`` disjoint full clusters with shuffled labels, ``d^3`` triangles each."""
    sr = get_semiring(semiring)
    if not n >= d >= 1:
        raise ValueError("need n >= d >= 1")
    rng = np.random.default_rng(seed)
    pi, pj, pk = (rng.permutation(n) for _ in range(3))
    a, b, x = set(), set(), set()
    for blk in range(n // d):
        sl = slice(blk * d, (blk + 1) * d)
        I, J, K = (sorted(int(v) for v in p[sl]) for p in (pi, pj, pk))
        a.update((i, j) for i in I for j in J)
        b.update((j, k) for j in J for k in K)
        x.update((i, k) for i in I for k in K)
    return _instance(n, d, sr, a, b, x, rng)


def _add_capped(entries: set, extra: Iterable[tuple[int, int]], n: int, d: int) -> None:
    rows = np.zeros(n, dtype=int)
    cols = np.zeros(n, dtype=int)
    for r, c in entries:
        rows[r] += 1
        cols[c] += 1
    for r, c in extra:
        if (r, c) not in entries and rows[r] < d and cols[c] < d:
            entries.add((r, c))
            rows[r] += 1
            cols[c] += 1


def planted_bad_node(n: int, d: int, seed: int = 0, density: float = 0.5,
                     semiring: str | Semiring = "integer") -> TriInstance:
    """I-node 0 sits in ``d^2`` triangles; sparse random background elsewhere."""
    sr = get_semiring(semiring)
    if not n >= d >= 1:
        raise ValueError("need n >= d >= 1")
    rng = np.random.default_rng(seed)
    J0 = sorted(int(v) for v in rng.choice(n, d, replace=False))
    K0 = sorted(int(v) for v in rng.choice(n, d, replace=False))
    a = {(0, j) for j in J0}
    b = {(j, k) for j in J0 for k in K0}
    x = {(0, k) for k in K0}
    m = int(round(density * d))
    for ent in (a, b, x):
        _add_capped(ent, sorted(_perm_union(n, m, rng)), n, d)
    return _instance(n, d, sr, a, b, x, rng)


def bounded_degree_edges(n: int, d: int, seed: int = 0) -> set[tuple[int, int]]:
    """Undirected edges ``(u, v)``, ``u < v``, with every degree at most ``d``.

    Disjoint cliques of size ``d//2 + 1`` give plenty of triangles; random
    matchings then top degrees up towards ``d``.
    """
    if not n >= d >= 1:
        raise ValueError("need n >= d >= 1")
    rng = np.random.default_rng(seed)
    deg = np.zeros(n, dtype=int)
    edges: set[tuple[int, int]] = set()

    def add(u, v):
        u, v = int(min(u, v)), int(max(u, v))
        if u != v and (u, v) not in edges and deg[u] < d and deg[v] < d:
            edges.add((u, v))
            deg[u] += 1
            deg[v] += 1

    s = d // 2 + 1
    order = rng.permutation(n)
    for start in range(0, n - s + 1, s):
        block = order[start:start + s]
        for x in range(s):
            for y in range(x + 1, s):
                add(block[x], block[y])
    for _ in range(d):
        p = rng.permutation(n)
        for x in range(0, n - 1, 2):
            add(p[x], p[x + 1])
    return edges


def graph_instance(n: int, edges: Iterable[tuple[int, int]], red: Iterable[tuple[int, int]] | None = None,
                   d: int | None = None) -> TriInstance:
    """Integer instance with ``A = B`` the red-edge indicator and output pattern the full graph."""
    sym = {(u, v) for u, v in edges} | {(v, u) for u, v in edges}
    if any(u == v for u, v in sym):
        raise ValueError("self-loops are not allowed")
    red_sym = sym if red is None else ({(u, v) for u, v in red} | {(v, u) for u, v in red})
    if not red_sym <= sym:
        raise ValueError("red edges must be edges of the graph")
    pat = SparsePattern.from_entries(n, sym)
    if d is None:
        d = max(1, pat.max_row())
    vals = {e: (1 if e in red_sym else 0) for e in sym}
    sr = get_semiring("integer")
    return TriInstance(n, d, sr, pat, pat, pat, vals, dict(vals))


def bounded_degree_graph(n: int, d: int, seed: int = 0) -> TriInstance:
    return graph_instance(n, bounded_degree_edges(n, d, seed), d=d)


def generate(spec: GeneratorSpec) -> TriInstance:
    if spec.kind == "randomUniform":
        return random_uniform(spec.n, spec.d, spec.density, spec.seed, spec.semiring)
    if spec.kind == "plantedClusters":
        return planted_clusters(spec.n, spec.d, spec.seed, spec.semiring)
    if spec.kind == "plantedBadNode":
        return planted_bad_node(spec.n, spec.d, spec.seed, spec.density, spec.semiring)
    return bounded_degree_graph(spec.n, spec.d, spec.seed)
