"""Round-synchronous low-bandwidth network simulator.

Every node may send at most one message and receive at most one message per
round.  The engine enforces that on every round it executes and aborts the
run on the first violation.

Protocols are generators.  Each ``yield`` hands the engine the messages to
send in the next round and receives back the messages that were delivered::

    def protocol():
        delivered = yield [Message(0, 1, value=7)]
        ...

Several protocols can be driven side by side with
:meth:`RoundEngine.run_parallel`; their rounds are merged, so phases on
disjoint node sets cost the maximum of their lengths, and any overlap shows
up as a bandwidth violation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Iterable, Optional, Sequence

MAX_META_WORDS = 4

Protocol = Generator[list, list, None]

# every violation raised by any engine in this process, for suite-wide audits
VIOLATIONS: list[tuple[int, int, str]] = []


class BandwidthViolation(RuntimeError):
    def __init__(self, round_no: int, node: int, kind: str):
        super().__init__(f"round {round_no}: node {node} {kind} more than one message")
        self.round = round_no
        self.node = node
        self.kind = kind


class RoundBudgetExceeded(RuntimeError):
    pass


class Message:
    """One O(log n)-bit message: one semiring element plus a few index words."""

    __slots__ = ("src", "dst", "value", "meta", "tag")

    def __init__(self, src: int, dst: int, value: Any = None, meta: tuple = (), tag: str = ""):
        if len(meta) > MAX_META_WORDS:
            raise ValueError(f"message carries {len(meta)} metadata words (max {MAX_META_WORDS})")
        self.src = src
        self.dst = dst
        self.value = value
        self.meta = meta
        self.tag = tag

    def __repr__(self) -> str:
        return f"Message({self.src}->{self.dst}, {self.value!r}, meta={self.meta}, tag={self.tag!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Message):
            return NotImplemented
        return (self.src, self.dst, self.value, self.meta, self.tag) == (
            other.src, other.dst, other.value, other.meta, other.tag)

    def __hash__(self) -> int:
        return hash((self.src, self.dst, self.meta, self.tag))


class RoundEngine:
    def __init__(self, node_count: int, round_budget: Optional[int] = None, trace: bool = False):
        self.node_count = node_count
        self.round_budget = round_budget
        self.round = 0
        self.messages_delivered = 0
        self.violations: list[tuple[int, int, str]] = []
        self.trace_enabled = trace
        self.trace: list[tuple[int, int, int, str]] = []

    def exchange(self, messages: Sequence[Message]) -> list[Message]:
        """Execute one round: check bandwidth, deliver, advance the counter."""
        if self.round_budget is not None and self.round >= self.round_budget:
            raise RoundBudgetExceeded(f"round budget of {self.round_budget} exhausted")
        srcs = [m.src for m in messages]
        dsts = [m.dst for m in messages]
        if len(set(srcs)) != len(srcs) or len(set(dsts)) != len(dsts):
            self._find_violation(messages)
        n = self.node_count
        for m in messages:
            if not (0 <= m.src < n and 0 <= m.dst < n):
                raise ValueError(f"message {m.src}->{m.dst} outside the {n}-node network")
            if m.src == m.dst:
                raise ValueError(f"node {m.src} sends a message to itself")
        if self.trace_enabled:
            self.trace.extend((self.round, m.src, m.dst, m.tag) for m in messages)
        self.round += 1
        self.messages_delivered += len(messages)
        return list(messages)

    def _find_violation(self, messages):
        senders: set[int] = set()
        receivers: set[int] = set()
        for m in messages:
            if m.src in senders:
                self._violate(m.src, "sends")
            if m.dst in receivers:
                self._violate(m.dst, "receives")
            senders.add(m.src)
            receivers.add(m.dst)

    def _violate(self, node: int, kind: str):
        self.violations.append((self.round, node, kind))
        VIOLATIONS.append((self.round, node, kind))
        raise BandwidthViolation(self.round, node, kind)

    def run(self, protocol: Protocol) -> int:
        return self.run_parallel([protocol])

    def run_parallel(self, protocols: Iterable[Protocol]) -> int:
        """Drive protocols in lockstep; returns the number of rounds executed."""
        pending: list[tuple[Protocol, list]] = []
        for p in protocols:
            try:
                pending.append((p, next(p)))
            except StopIteration:
                pass
        used = 0
        while pending:
            outgoing = [m for _, msgs in pending for m in msgs]
            self.exchange(outgoing)
            used += 1
            still = []
            for p, msgs in pending:
                try:
                    still.append((p, p.send(msgs)))
                except StopIteration:
                    pass
            pending = still
        return used

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "src", "dst", "tag"])
            w.writerows(self.trace)


def run_rounds(engine: RoundEngine, step: Callable, states: list,
               round_budget: Optional[int] = None) -> int:
    """Run per-node transitions until a round in which nobody sends.

    ``step(node, state, inbox)`` returns ``(state, out)`` where ``out`` is
    ``None``, a :class:`Message` or a list of messages.  ``inbox`` is the
    message delivered to ``node`` in the previous round, or ``None``.
    """
    n = engine.node_count
    inbox: list[Optional[Message]] = [None] * n
    used = 0
    while True:
        outgoing: list[Message] = []
        for v in range(n):
            states[v], out = step(v, states[v], inbox[v])
            if out is None:
                continue
            for m in ([out] if isinstance(out, Message) else out):
                if m.src != v:
                    raise ValueError(f"node {v} emitted a message claiming source {m.src}")
                outgoing.append(m)
        if not outgoing:
            return used
        if round_budget is not None and used >= round_budget:
            raise RoundBudgetExceeded(f"run_rounds budget of {round_budget} exhausted")
        inbox = [None] * n
        for m in engine.exchange(outgoing):
            inbox[m.dst] = m
        used += 1


# ---------------------------------------------------------------- unicast

@dataclass
class RoutingSchedule:
    """A proper edge colouring of a demand multigraph; colour ``c`` is round ``c``."""

    demands: list[Message]
    color_of: list[int]
    color_count: int
    local: list[Message] = field(default_factory=list)

    @property
    def max_degree(self) -> int:
        return demand_degree(self.demands)

    def rounds(self) -> list[list[Message]]:
        out: list[list[Message]] = [[] for _ in range(self.color_count)]
        for m, c in zip(self.demands, self.color_of):
            out[c].append(m)
        return out

    def is_proper(self) -> bool:
        seen_src: set[tuple[int, int]] = set()
        seen_dst: set[tuple[int, int]] = set()
        for m, c in zip(self.demands, self.color_of):
            if (m.src, c) in seen_src or (m.dst, c) in seen_dst:
                return False
            seen_src.add((m.src, c))
            seen_dst.add((m.dst, c))
        return True


def demand_degree(demands: Iterable[Message]) -> int:
    """Largest number of messages any node must send, or must receive."""
    outd: dict[int, int] = {}
    ind: dict[int, int] = {}
    for m in demands:
        outd[m.src] = outd.get(m.src, 0) + 1
        ind[m.dst] = ind.get(m.dst, 0) + 1
    return max(max(outd.values(), default=0), max(ind.values(), default=0))


def schedule_unicast(demands: Iterable[Message]) -> RoutingSchedule:
    """Greedy first-fit edge colouring, demands taken in ``(src, dst)`` order.

    A demand conflicts only with demands sharing its sender or its receiver,
    so first-fit never needs more than ``2 * max_degree - 1`` colours.
    Self-addressed demands need no communication and are kept aside.
    """
    remote, local = [], []
    for m in demands:
        (local if m.src == m.dst else remote).append(m)
    remote.sort(key=lambda m: (m.src, m.dst))
    out_mask: dict[int, int] = {}
    in_mask: dict[int, int] = {}
    colors = []
    top = 0
    for m in remote:
        used = out_mask.get(m.src, 0) | in_mask.get(m.dst, 0)
        free = ~used & (used + 1)
        c = free.bit_length() - 1
        out_mask[m.src] = out_mask.get(m.src, 0) | free
        in_mask[m.dst] = in_mask.get(m.dst, 0) | free
        colors.append(c)
        if c + 1 > top:
            top = c + 1
    return RoutingSchedule(remote, colors, top, local)


def unicast_protocol(schedule: RoutingSchedule,
                     on_receive: Optional[Callable[[list[Message]], None]] = None) -> Protocol:
    if on_receive is not None and schedule.local:
        on_receive(list(schedule.local))
    for msgs in schedule.rounds():
        delivered = yield msgs
        if on_receive is not None:
            on_receive(delivered)


def deliver(engine: RoundEngine, schedule: RoutingSchedule,
            on_receive: Optional[Callable[[list[Message]], None]] = None) -> int:
    return engine.run(unicast_protocol(schedule, on_receive))


# ------------------------------------------------------------ binary trees

@dataclass
class TreeSchedule:
    """Complete binary tree, root first, members in increasing id order."""

    root: int
    members: tuple[int, ...]

    def __post_init__(self):
        self.members = tuple(sorted(set(self.members) - {self.root}))
        self.order = (self.root,) + self.members
        self.pos = {v: p for p, v in enumerate(self.order)}
        size = len(self.order)
        self._children = {v: [self.order[c] for c in (2 * p + 1, 2 * p + 2) if c < size]
                          for p, v in enumerate(self.order)}

    @property
    def k(self) -> int:
        return len(self.members)

    def parent(self, v: int) -> Optional[int]:
        p = self.pos[v]
        return None if p == 0 else self.order[(p - 1) // 2]

    def children(self, v: int) -> list[int]:
        return self._children[v]

    def depth(self) -> int:
        return int(math.floor(math.log2(len(self.order))))


def tree_round_bound(d: int, k: int, slack: int = 4) -> int:
    return 2 * d + 2 * math.ceil(math.log2(k + 1)) + slack


def broadcast_protocol(tree: TreeSchedule, messages: Sequence[tuple[Any, tuple]],
                       received: dict[int, list], tag: str = "bcast") -> Protocol:
    """Pipelined broadcast: each holder forwards message ``m`` to its children
    in turn and moves to ``m + 1`` straight away."""
    if not tree.members or not messages:
        return
    children = tree._children
    queues: dict[int, list] = {v: [] for v in tree.order}
    queues[tree.root] = [(m, c) for m in range(len(messages)) for c in children[tree.root]]
    heads = dict.fromkeys(tree.order, 0)
    for v in tree.members:
        received.setdefault(v, [None] * len(messages))
    payloads = [(value, (m,) + tuple(meta)) for m, (value, meta) in enumerate(messages)]
    active = [tree.root]
    outstanding = len(messages) * tree.k
    while outstanding:
        out = []
        for v in active:
            h = heads[v]
            m, c = queues[v][h]
            heads[v] = h + 1
            value, meta = payloads[m]
            out.append(Message(v, c, value, meta, tag))
        delivered = yield out
        nxt = [v for v in active if heads[v] < len(queues[v])]
        live = set(nxt)
        for msg in delivered:
            u = msg.dst
            m = msg.meta[0]
            received[u][m] = (msg.value, msg.meta[1:])
            outstanding -= 1
            kids = children[u]
            if kids:
                q = queues[u]
                for c in kids:
                    q.append((m, c))
                if u not in live:
                    live.add(u)
                    nxt.append(u)
        active = nxt


def convergecast_protocol(tree: TreeSchedule, values: dict[int, Sequence], add: Callable,
                          zero: Any, result: list, tag: str = "ccast") -> Protocol:
    """Pipelined index-wise reduction towards the root.

    Interior nodes add their children's values to their own before
    forwarding.  Siblings alternate: the first child of a parent talks on
    even rounds and the second on odd rounds; an only child talks every round.
    """
    width = len(result)
    if width == 0:
        return
    if not tree.members:
        if tree.root in values:
            result[:] = list(values[tree.root])
        return
    partial = {v: list(values.get(v, [zero] * width)) for v in tree.order}
    if tree.root not in values:
        partial[tree.root] = [zero] * width
    pending = {v: [len(tree.children(v))] * width for v in tree.order}
    next_idx = {v: 0 for v in tree.members}
    parity = {}
    for v in tree.order:
        kids = tree.children(v)
        for slot, c in enumerate(kids):
            parity[c] = slot if len(kids) == 2 else None
    parent = {v: tree.parent(v) for v in tree.members}
    root_done = 0
    rnd = 0
    while root_done < width:
        out = []
        for v in tree.members:
            i = next_idx[v]
            if i >= width or pending[v][i]:
                continue
            if parity[v] is not None and rnd % 2 != parity[v]:
                continue
            out.append(Message(v, parent[v], partial[v][i], (i,), tag))
            next_idx[v] = i + 1
        delivered = yield out
        rnd += 1
        for msg in delivered:
            i = msg.meta[0]
            partial[msg.dst][i] = add(partial[msg.dst][i], msg.value)
            pending[msg.dst][i] -= 1
            if msg.dst == tree.root and pending[msg.dst][i] == 0:
                root_done += 1
    result[:] = partial[tree.root]


def broadcast_tree(engine: RoundEngine, v: int, U: Iterable[int],
                   messages: Sequence[tuple[Any, tuple]],
                   received: Optional[dict[int, list]] = None) -> int:
    """Send the ``d`` messages held by ``v`` to every node of ``U``; returns rounds used."""
    received = {} if received is None else received
    return engine.run(broadcast_protocol(TreeSchedule(v, tuple(U)), messages, received))


def convergecast_sum(engine: RoundEngine, v: int, U: Iterable[int], values: dict[int, Sequence],
                     add: Callable, zero: Any, width: int, result: Optional[list] = None) -> tuple[int, list]:
    """Leave at ``v`` the index-wise sums of the ``width`` values held by each node of ``U``."""
    result = [zero] * width if result is None else result
    tree = TreeSchedule(v, tuple(U))
    rounds = engine.run(convergecast_protocol(tree, values, add, zero, result))
    return rounds, result


def run_disjoint_batches(engine: RoundEngine, jobs: Sequence[tuple[frozenset, Callable[[], Protocol]]]) -> int:
    """Run jobs in node-disjoint batches, each batch in parallel.

    Jobs whose node sets overlap a job already in the current batch move to
    a later batch.  Returns total rounds (sum over batches of the batch max).
    """
    remaining = list(jobs)
    total = 0
    while remaining:
        used: set = set()
        batch, later = [], []
        for nodes, factory in remaining:
            if used.isdisjoint(nodes):
                used |= nodes
                batch.append(factory())
            else:
                later.append((nodes, factory))
        total += engine.run_parallel(batch)
        remaining = later
    return total
