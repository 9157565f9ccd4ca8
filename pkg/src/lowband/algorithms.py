"""Runtime processing of triangle sets and the end-to-end multiplication.

Every phase adds the products of the triangles it handles into an
:class:`OutputAccumulator`, whose value at ``(i, k)`` is at all times the sum
of ``A_ij B_jk`` over the triangles processed so far.  Once every triangle
of the instance has been processed the accumulator holds the product.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

from .clustering import (PRESET_SMALL_EPS, ClusteredSet, Decomposition, ScheduleRow, is_large,
                         load_schedule, schedule_decompose)
from .core import (Cluster, NodeId, PreconditionError, Side, Triangle, TriangleSet, TriInstance,
                   enumerate_triangles, restricted_product)
from .generators import graph_instance
from .simulator import (Message, Protocol, RoundEngine, TreeSchedule, broadcast_protocol,
                        convergecast_protocol, deliver, run_disjoint_batches, schedule_unicast,
                        unicast_protocol)
from .smallcomp import (VNode, assign_helpers, build_virtual_instance, classify_bad, color_with_fallback,
                        default_color_count, virtual_load_bound)

log = logging.getLogger(__name__)

ENGINES = ("naive", "semiring3d")


class PhaseIsolationError(AssertionError):
    pass


# ------------------------------------------------------------ bookkeeping

class OutputAccumulator:
    """Per-output running sums plus the set of triangles already folded in."""

    def __init__(self, inst: TriInstance):
        self.inst = inst
        sr = inst.semiring
        self.X: dict[tuple[int, int], Any] = {(i, k): sr.zero for i, k in inst.pat_x.entries()}
        self.processed = TriangleSet()

    def add(self, i: int, k: int, value) -> None:
        key = (i, k)
        if key not in self.X:
            raise KeyError(f"({i}, {k}) is not an output slot")
        self.X[key] = self.inst.semiring.add(self.X[key], value)

    def mark(self, triangles: Iterable[Triangle]) -> None:
        for t in triangles:
            if t in self.processed:
                raise AssertionError(f"triangle {t} processed twice")
            self.processed.add(t)

    def check(self) -> bool:
        return self.X == restricted_product(self.inst, self.processed)


@dataclass
class PipelineConfig:
    schedule: str | Sequence[ScheduleRow] = "table2"
    dense_engine: str = "semiring3d"
    small_eps: Optional[float] = None
    seed: int = 0
    round_budget: Optional[int] = None
    pipeline: str = "full"  # or "brute"
    respect_small_d: bool = False
    naive_below: int = 8
    colors: Optional[int] = None
    load_bound: Optional[float] = None
    max_attempts: int = 50
    trace: bool = False
    check_phases: bool = False

    def __post_init__(self):
        if self.dense_engine not in ENGINES:
            raise ValueError(f"unknown dense engine {self.dense_engine!r}; expected one of {ENGINES}")
        if self.pipeline not in ("full", "brute"):
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if self.small_eps is not None and not self.small_eps < 1:
            raise ValueError("small_eps must be below 1")

    def rows(self) -> tuple[ScheduleRow, ...]:
        if isinstance(self.schedule, str):
            return load_schedule(self.schedule)
        return tuple(self.schedule)

    def eps(self) -> float:
        if self.small_eps is not None:
            return self.small_eps
        if isinstance(self.schedule, str) and self.schedule in PRESET_SMALL_EPS:
            return PRESET_SMALL_EPS[self.schedule]
        return self.rows()[-1].eps2


@dataclass
class PhaseRecord:
    phase: str
    layer: Optional[int]
    rounds: int
    triangles: int


@dataclass
class RoundReport:
    n: int
    d: int
    rows: list[PhaseRecord] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)  # scalars, printed in the summary
    engine: Optional[RoundEngine] = None
    decomposition: Optional[Decomposition] = None
    small_chunks: list = field(default_factory=list)

    def add(self, phase: str, rounds: int, triangles: int, layer: Optional[int] = None) -> None:
        self.rows.append(PhaseRecord(phase, layer, rounds, triangles))

    @property
    def total(self) -> int:
        return sum(r.rounds for r in self.rows)

    def by_phase(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for r in self.rows:
            out[r.phase] += r.rounds
        return dict(out)

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "layer", "rounds", "triangles"])
        for r in self.rows:
            w.writerow([r.phase, "" if r.layer is None else r.layer, r.rounds, r.triangles])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def summary(self) -> str:
        lines = [f"n: {self.n}", f"d: {self.d}", f"total_rounds: {self.total}"]
        for phase, rounds in sorted(self.by_phase().items()):
            lines.append(f"rounds[{phase}]: {rounds}")
        for key in sorted(self.diagnostics):
            lines.append(f"{key}: {self.diagnostics[key]}")
        return "\n".join(lines) + "\n"


# ------------------------------------------------------------ brute force

def _gid(side: Side, x: int, n: int) -> int:
    return side * n + x


def brute_force_schedule(inst: TriInstance, T: Iterable[Triangle], tag: str = "brute"):
    """Node ``j`` sends ``B_jk`` to node ``i`` once per triangle."""
    n = inst.n
    demands = [Message(_gid(Side.J, t.j, n), _gid(Side.I, t.i, n), inst.b(t.j, t.k), (t.j, t.k), tag)
               for t in T]
    return schedule_unicast(demands)


def _brute_receiver(inst: TriInstance, acc: OutputAccumulator) -> Callable[[list[Message]], None]:
    sr, n = inst.semiring, inst.n

    def on_receive(msgs: list[Message]) -> None:
        for m in msgs:
            i = m.dst - _gid(Side.I, 0, n)
            j, k = m.meta
            acc.add(i, k, sr.mul(inst.a(i, j), m.value))
    return on_receive


def process_brute_force(engine: RoundEngine, inst: TriInstance, T: Iterable[Triangle],
                        acc: OutputAccumulator) -> int:
    T = list(T)
    rounds = deliver(engine, brute_force_schedule(inst, T), _brute_receiver(inst, acc))
    acc.mark(T)
    return rounds


# ------------------------------------------------------ in-cluster engines

def _isolated(protocol: Protocol, allowed: frozenset[int]) -> Protocol:
    """Pass a protocol through, failing if any message leaves ``allowed``."""
    try:
        out = next(protocol)
        while True:
            for m in out:
                if m.src not in allowed or m.dst not in allowed:
                    raise PhaseIsolationError(f"message {m.src}->{m.dst} leaves its cluster")
            got = yield out
            out = protocol.send(got)
    except StopIteration:
        return


def cube_side(d: int) -> int:
    """Largest ``s`` with ``s^3 <= 3d``."""
    s = int(round((3 * d) ** (1 / 3)))
    while s ** 3 > 3 * d:
        s -= 1
    while (s + 1) ** 3 <= 3 * d:
        s += 1
    return s


def naive_cluster_protocol(inst: TriInstance, TU: TriangleSet, acc: OutputAccumulator) -> Protocol:
    tris = list(TU)
    yield from unicast_protocol(brute_force_schedule(inst, tris, "naive"), _brute_receiver(inst, acc))
    acc.mark(tris)


def semiring3d_protocol(inst: TriInstance, U: Cluster, TU: TriangleSet, acc: OutputAccumulator) -> Protocol:
    """3D-partitioned product inside one cluster.

    The cluster's nodes form an ``s x s x s`` grid of processors.  The
    cluster's I, J and K indices are dealt round-robin into ``s`` blocks, and
    processor ``(a, b, c)`` computes the products of the triangles whose
    I, J and K indices fall in blocks ``a``, ``b`` and ``c``.  It first
    collects the A and B entries those triangles use, then sends each
    partial output sum to the I-node owning that output.
    """
    n, sr = inst.n, inst.semiring
    s = cube_side(U.d)
    nodes = [_gid(side, x, n) for trio in zip(*(sorted(U.side(sd)) for sd in Side))
             for side, x in zip(Side, trio)]
    procs = nodes[:s ** 3]
    blk = {side: {x: p % s for p, x in enumerate(sorted(U.side(side)))} for side in Side}

    work: dict[int, list[Triangle]] = defaultdict(list)
    for t in TU:
        a, b, c = blk[Side.I][t.i], blk[Side.J][t.j], blk[Side.K][t.k]
        work[procs[(a * s + b) * s + c]].append(t)

    demands = []
    for p in sorted(work):
        need_a = sorted({(t.i, t.j) for t in work[p]})
        need_b = sorted({(t.j, t.k) for t in work[p]})
        demands += [Message(_gid(Side.I, i, n), p, inst.a(i, j), (0, i, j), "s3d-a") for i, j in need_a]
        demands += [Message(_gid(Side.J, j, n), p, inst.b(j, k), (1, j, k), "s3d-b") for j, k in need_b]
    memory: dict[int, dict] = defaultdict(dict)

    def store(msgs: list[Message]) -> None:
        for m in msgs:
            memory[m.dst][m.meta] = m.value

    yield from unicast_protocol(schedule_unicast(demands), store)

    partial: dict[int, dict[tuple[int, int], Any]] = {}
    for p, tris in work.items():
        mem = memory[p]
        sums: dict[tuple[int, int], Any] = {}
        for t in tris:
            v = sr.mul(mem[(0, t.i, t.j)], mem[(1, t.j, t.k)])
            key = (t.i, t.k)
            sums[key] = sr.add(sums[key], v) if key in sums else v
        partial[p] = sums

    back = [Message(p, _gid(Side.I, i, n), v, (i, k), "s3d-x")
            for p in sorted(partial) for (i, k), v in sorted(partial[p].items())]

    def gather(msgs: list[Message]) -> None:
        for m in msgs:
            acc.add(m.meta[0], m.meta[1], m.value)

    yield from unicast_protocol(schedule_unicast(back), gather)
    acc.mark(TU)


def cluster_protocol(inst: TriInstance, U: Cluster, TU: TriangleSet, acc: OutputAccumulator,
                     dense_engine: str = "semiring3d", naive_below: int = 8) -> Protocol:
    if dense_engine == "naive" or U.d < naive_below:
        inner = naive_cluster_protocol(inst, TU, acc)
    elif dense_engine == "semiring3d":
        inner = semiring3d_protocol(inst, U, TU, acc)
    else:
        raise ValueError(f"unknown dense engine {dense_engine!r}")
    return _isolated(inner, frozenset(U.gids(inst.n)))


def process_cluster_dense(engine: RoundEngine, inst: TriInstance, U: Cluster, TU: TriangleSet,
                          acc: OutputAccumulator, dense_engine: str = "semiring3d",
                          naive_below: int = 8) -> int:
    if any(not U.contains_triangle(t) for t in TU):
        raise PreconditionError("triangles outside the cluster")
    return engine.run(cluster_protocol(inst, U, TU, acc, dense_engine, naive_below))


def process_clustered_set(engine: RoundEngine, inst: TriInstance, P: ClusteredSet, acc: OutputAccumulator,
                          dense_engine: str = "semiring3d", naive_below: int = 8) -> int:
    """All clusters of ``P`` at once; they share no nodes, so rounds are the max."""
    if not P.is_valid():
        raise AssertionError("clusters overlap or hold foreign triangles")
    protocols = [cluster_protocol(inst, U, TU, acc, dense_engine, naive_below)
                 for U, TU in zip(P.clusters, P.per_cluster) if len(TU)]
    return engine.run_parallel(protocols)


# ------------------------------------------------------ small component

def process_small_component(engine: RoundEngine, inst: TriInstance, T: TriangleSet, eps: float,
                            acc: OutputAccumulator, config: Optional[PipelineConfig] = None,
                            diagnostics: Optional[list] = None) -> int:
    """Split the load of heavily loaded nodes across helpers, then brute force.

    Inputs above ``d^(2-eps) n`` triangles are cut into chunks of that size
    and handled one after another.
    """
    config = config or PipelineConfig()
    if not len(T):
        return 0
    d, n = inst.d, inst.n
    if d < 2:
        return process_brute_force(engine, inst, T, acc)
    cap = max(1, math.floor(d ** (2 - eps) * n))
    tris = T.sorted()
    rounds = 0
    for start in range(0, len(tris), cap):
        chunk = TriangleSet(tris[start:start + cap])
        info: dict = {}
        rounds += _small_chunk(engine, inst, chunk, eps, acc, config, info)
        if diagnostics is not None:
            diagnostics.append(info)
    return rounds


def _small_chunk(engine: RoundEngine, inst: TriInstance, T: TriangleSet, eps: float,
                 acc: OutputAccumulator, config: PipelineConfig, info: dict) -> int:
    n, d, sr = inst.n, inst.d, inst.semiring
    bad = classify_bad(T, d, eps, n)
    universe = [NodeId(s, x) for s in Side for x in range(n)]
    if config.colors is not None:
        colors = config.colors
        if bad.bad_nodes and colors * len(bad.bad_nodes) > len(universe):
            colors = len(universe) // len(bad.bad_nodes)
            log.warning("colour override lowered to %d to fit the helper pool", colors)
        load_bound = config.load_bound if config.load_bound is not None \
            else 2 * bad.max_bad_load() / colors
    else:
        colors = default_color_count(d, eps)
        load_bound = config.load_bound if config.load_bound is not None else virtual_load_bound(d, eps)
    coloring = color_with_fallback(bad, colors, load_bound, config.max_attempts, config.seed)
    helpers = assign_helpers(bad, coloring.color_count, universe)
    vi = build_virtual_instance(inst, T, bad, coloring, helpers)
    info.update(triangles=len(T), bad_nodes=len(bad.bad_nodes), colors=coloring.color_count,
                attempts=coloring.attempts, fallback=coloring.fallback,
                virtual_nodes=len(vi.node_map), max_virtual_load=vi.max_load())

    # physical memory: own rows are read directly, copies of bad rows arrive by broadcast
    copies: dict[int, dict] = defaultdict(dict)

    def a_at(p: int, i: int, j: int):
        return inst.a(i, j) if p == _gid(Side.I, i, n) else copies[p][(0, i, j)]

    def b_at(p: int, j: int, k: int):
        return inst.b(j, k) if p == _gid(Side.J, j, n) else copies[p][(1, j, k)]

    # 1. bad I- and J-nodes hand their rows to their helpers
    jobs = []
    for v in sorted(bad.bad_nodes):
        if v.side == Side.K:
            continue
        root = v.gid(n)
        members = tuple(h.gid(n) for h in helpers[v])
        if v.side == Side.I:
            msgs = [(inst.a(v.index, j), (0, v.index, j)) for j in inst.pat_a.row(v.index)]
        else:
            msgs = [(inst.b(v.index, k), (1, v.index, k)) for k in inst.pat_b.row(v.index)]
        tree = TreeSchedule(root, members)

        def factory(tree=tree, msgs=msgs):
            received: dict[int, list] = {}

            def run():
                yield from broadcast_protocol(tree, msgs, received, "helper-rows")
                for u, got in received.items():
                    for value, key in got:
                        copies[u][key] = value
            return run()
        jobs.append((frozenset((root,) + members), factory))
    r_bcast = run_disjoint_batches(engine, jobs)

    # 2-3. brute force on the virtual instance, scheduled between physical hosts
    stride = len(vi.colors) + 1
    demands = []
    for vt in vi.triangles:
        src, dst = vi.node_map[vt.j].gid(n), vi.node_map[vt.i].gid(n)
        i, j, k = vt.i.node.index, vt.j.node.index, vt.k.node.index
        demands.append(Message(src, dst, b_at(src, j, k), (i, vt.i.color, j, k * stride + vt.k.color), "virtual"))
    vx: dict[int, dict] = defaultdict(dict)

    def on_receive(msgs: list[Message]) -> None:
        for m in msgs:
            i, ci, j, code = m.meta
            key = (VNode(NodeId(Side.I, i), ci), VNode(NodeId(Side.K, code // stride), code % stride))
            v = sr.mul(a_at(m.dst, i, j), m.value)
            cell = vx[m.dst]
            cell[key] = sr.add(cell[key], v) if key in cell else v
    r_virtual = deliver(engine, schedule_unicast(demands), on_receive)
    info["virtual_partials"] = {key: val for cell in vx.values() for key, val in cell.items()}

    # 4. fold colour copies back: locally for good I-nodes, by convergecast for bad ones
    by_i: dict[int, list[tuple[int, VNode, Any]]] = defaultdict(list)
    for p, cell in vx.items():
        for (vi_node, vk_node), val in cell.items():
            by_i[vi_node.node.index].append((p, vk_node, val))
    jobs = []
    for i in sorted(by_i):
        node = NodeId(Side.I, i)
        if node not in bad.bad_nodes:
            for _, vk, val in by_i[i]:
                acc.add(i, vk.node.index, val)
            continue
        cols = sorted({vk.node.index for _, vk, _ in by_i[i]})
        slot = {k: x for x, k in enumerate(cols)}
        values: dict[int, list] = {}
        for p, vk, val in by_i[i]:
            row = values.setdefault(p, [sr.zero] * len(cols))
            row[slot[vk.node.index]] = sr.add(row[slot[vk.node.index]], val)
        root = node.gid(n)
        tree = TreeSchedule(root, tuple(h.gid(n) for h in helpers[node]))

        def factory(tree=tree, values=values, cols=cols, i=i):
            result = [sr.zero] * len(cols)

            def run():
                yield from convergecast_protocol(tree, values, sr.add, sr.zero, result, "recover")
                for k, val in zip(cols, result):
                    acc.add(i, k, val)
            return run()
        jobs.append((frozenset((root,) + tree.members), factory))
    r_recover = run_disjoint_batches(engine, jobs)

    acc.mark(T)
    info.update(rounds_broadcast=r_bcast, rounds_virtual=r_virtual, rounds_recover=r_recover)
    return r_bcast + r_virtual + r_recover


# ------------------------------------------------------------ pipeline

def multiply(inst: TriInstance, config: Optional[PipelineConfig] = None,
             acc: Optional[OutputAccumulator] = None,
             engine: Optional[RoundEngine] = None) -> tuple[dict, RoundReport]:
    """Compute ``X_ik = sum_j A_ij B_jk`` on every output slot; returns ``(X, report)``.

    The decomposition depends on patterns only and is charged zero rounds.
    """
    config = config or PipelineConfig()
    engine = engine or RoundEngine(3 * inst.n, config.round_budget, config.trace)
    acc = acc or OutputAccumulator(inst)
    report = RoundReport(inst.n, inst.d, engine=engine)
    That = enumerate_triangles(inst)
    report.add("preprocess", 0, len(That))

    def checkpoint():
        if config.check_phases and not acc.check():
            raise AssertionError("accumulator disagrees with its processed set")

    rows = config.rows()
    small_d = not all(is_large(inst.d, r.delta) for r in rows)
    if config.pipeline == "brute" or (config.respect_small_d and small_d):
        report.add("brute", process_brute_force(engine, inst, That, acc), len(That))
        checkpoint()
        report.diagnostics.update(layers=0, residual=len(That))
        return dict(acc.X), report

    dec = schedule_decompose(That, rows, inst.d, inst.n)
    report.diagnostics.update(layers=len(dec.layers), residual=len(dec.residual))
    report.decomposition = dec
    for L, P in enumerate(dec.layers):
        r = process_clustered_set(engine, inst, P, acc, config.dense_engine, config.naive_below)
        report.add("clustered", r, len(P), layer=L)
        checkpoint()

    chunks = report.small_chunks
    eps = config.eps()
    r = process_small_component(engine, inst, dec.residual, eps, acc, config, chunks)
    report.add("small", r, len(dec.residual))
    checkpoint()
    report.diagnostics["small_eps"] = eps
    report.diagnostics["coloring_fallbacks"] = sum(1 for c in chunks if c.get("fallback"))
    if acc.processed != That:
        raise AssertionError("some triangles were never processed")
    return dict(acc.X), report


def count_triangles_graph(n: int, edges: Iterable[tuple[int, int]], red: Optional[Iterable] = None,
                          config: Optional[PipelineConfig] = None) -> int:
    """Triangles of red edges, via ``A = B = red indicator`` over the graph's output pattern.

    Each triangle is counted once per ordered edge slot, i.e. 6 times; only
    red slots are summed, since a red triangle has all three edges red.
    """
    edges = list(edges)
    red_list = edges if red is None else list(red)
    inst = graph_instance(n, edges, red_list)
    X, _ = multiply(inst, config)
    red_slots = {(u, v) for u, v in red_list} | {(v, u) for u, v in red_list}
    total = sum(X[e] for e in red_slots)
    if total % 6:
        raise AssertionError(f"red-slot sum {total} is not a multiple of 6")
    return total // 6
