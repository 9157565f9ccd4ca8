import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowband.simulator import (MAX_META_WORDS, BandwidthViolation, Message, RoundBudgetExceeded, RoundEngine,
                               TreeSchedule, broadcast_tree, convergecast_sum, deliver, demand_degree,
                               run_disjoint_batches, run_rounds, schedule_unicast, tree_round_bound,
                               broadcast_protocol)


# -------------------------------------------------------------- engine

def test_idle_network_uses_no_rounds():
    eng = RoundEngine(4)
    assert run_rounds(eng, lambda v, s, inbox: (s, None), [None] * 4) == 0


def test_one_message_takes_one_round():
    eng = RoundEngine(3)
    got = {}

    def step(v, state, inbox):
        if inbox is not None:
            got[v] = inbox.value
        if v == 0 and state == "start":
            return "done", Message(0, 2, 42)
        return state, None

    states = ["start", None, None]
    assert run_rounds(eng, step, states) == 1
    assert got == {2: 42}


def test_two_sends_in_a_round_abort():
    eng = RoundEngine(3)

    def step(v, state, inbox):
        if v == 0 and state is None:
            return 1, [Message(0, 1), Message(0, 2)]
        return state, None

    with pytest.raises(BandwidthViolation) as exc:
        run_rounds(eng, step, [None] * 3)
    assert exc.value.node == 0 and exc.value.kind == "sends"
    assert eng.violations


def test_two_receives_abort():
    eng = RoundEngine(3)
    with pytest.raises(BandwidthViolation) as exc:
        eng.exchange([Message(0, 2), Message(1, 2)])
    assert exc.value.node == 2 and exc.value.kind == "receives"


def test_budget_is_enforced():
    eng = RoundEngine(2, round_budget=2)
    eng.exchange([Message(0, 1)])
    eng.exchange([Message(1, 0)])
    with pytest.raises(RoundBudgetExceeded):
        eng.exchange([Message(0, 1)])


def test_metadata_limit():
    Message(0, 1, 5, tuple(range(MAX_META_WORDS)))
    with pytest.raises(ValueError):
        Message(0, 1, 5, tuple(range(MAX_META_WORDS + 1)))


def test_self_send_and_range_checks():
    eng = RoundEngine(2)
    with pytest.raises(ValueError):
        eng.exchange([Message(1, 1)])
    with pytest.raises(ValueError):
        eng.exchange([Message(0, 2)])


def test_trace_csv(tmp_path):
    eng = RoundEngine(3, trace=True)
    eng.exchange([Message(0, 1, tag="x"), Message(1, 2, tag="y")])
    path = tmp_path / "t.csv"
    eng.write_trace(path)
    assert path.read_text().splitlines() == ["round,src,dst,tag", "0,0,1,x", "0,1,2,y"]


# ------------------------------------------------------------ routing

def test_permutation_needs_one_colour():
    perm = [3, 0, 1, 2]
    sched = schedule_unicast([Message(v, perm[v]) for v in range(4)])
    assert sched.color_count == 1
    assert deliver(RoundEngine(4), sched) == 1


def test_empty_demands():
    sched = schedule_unicast([])
    assert sched.color_count == 0
    assert deliver(RoundEngine(2), sched) == 0


def test_degree_three_demands_fit_in_five_colours():
    # star-ish multigraph: node 0 sends 3 messages, node 5 receives 3, plus cross traffic
    demands = [Message(0, 3), Message(0, 4), Message(0, 5), Message(1, 5), Message(2, 5),
               Message(1, 3), Message(2, 4), Message(1, 4)]
    assert demand_degree(demands) == 3
    sched = schedule_unicast(demands)
    assert sched.is_proper()
    assert sched.color_count <= 5


@given(st.integers(2, 30), st.integers(0, 200), st.integers(0, 10_000))
def test_greedy_colouring_bound(nodes, count, seed):
    rng = np.random.default_rng(seed)
    demands = []
    for _ in range(count):
        s, t = rng.choice(nodes, 2, replace=False)
        demands.append(Message(int(s), int(t), len(demands)))
    sched = schedule_unicast(demands)
    assert sched.is_proper()
    t = demand_degree(demands)
    assert sched.color_count <= max(0, 2 * t - 1)
    got = []
    rounds = deliver(RoundEngine(nodes), sched, got.extend)
    assert rounds == sched.color_count
    # every payload arrives exactly once
    assert sorted(m.value for m in got) == list(range(count))


def test_self_demands_are_local():
    got = []
    sched = schedule_unicast([Message(1, 1, "x")])
    assert sched.color_count == 0
    deliver(RoundEngine(2), sched, got.extend)
    assert [m.value for m in got] == ["x"]


# -------------------------------------------------------------- trees

def test_tree_shape():
    tree = TreeSchedule(5, (9, 1, 3, 5, 7))
    assert tree.members == (1, 3, 7, 9)
    assert tree.children(5) == [1, 3]
    assert tree.children(1) == [7, 9]
    assert tree.parent(9) == 1 and tree.parent(5) is None


def test_broadcast_to_nobody():
    assert broadcast_tree(RoundEngine(1), 0, [], [(1, ())]) == 0


def test_broadcast_to_one_node_is_direct():
    recv = {}
    d = 6
    rounds = broadcast_tree(RoundEngine(2), 0, [1], [(x, ()) for x in range(d)], recv)
    assert rounds == d
    assert [v for v, _ in recv[1]] == list(range(d))


def test_broadcast_k7_d4_within_bound():
    recv = {}
    msgs = [(10 * x, (x,)) for x in range(4)]
    rounds = broadcast_tree(RoundEngine(8), 0, range(1, 8), msgs, recv)
    assert rounds <= 2 * 4 + 2 * 3 + 4
    for u in range(1, 8):
        assert recv[u] == [(10 * x, (x,)) for x in range(4)]


def test_convergecast_zeros():
    rounds, res = convergecast_sum(RoundEngine(4), 0, [1, 2, 3], {u: [0] * 5 for u in (1, 2, 3)},
                                   lambda a, b: a + b, 0, 5)
    assert res == [0] * 5


def test_convergecast_single_child_verbatim():
    rounds, res = convergecast_sum(RoundEngine(2), 0, [1], {1: [4, 5, 6]}, lambda a, b: a + b, 0, 3)
    assert rounds == 3 and res == [4, 5, 6]


def test_convergecast_k3_d5_sums():
    rng = np.random.default_rng(1)
    vals = {u: [int(x) for x in rng.integers(-9, 10, 5)] for u in (1, 2, 3)}
    want = [sum(vals[u][i] for u in vals) for i in range(5)]
    rounds, res = convergecast_sum(RoundEngine(4), 0, [1, 2, 3], vals, lambda a, b: a + b, 0, 5)
    assert res == want
    assert rounds <= tree_round_bound(5, 3)


def test_convergecast_includes_root_value():
    rounds, res = convergecast_sum(RoundEngine(3), 0, [0, 1, 2], {0: [1], 1: [2], 2: [3]},
                                   lambda a, b: a + b, 0, 1)
    assert res == [6]
    rounds, res = convergecast_sum(RoundEngine(1), 0, [0], {0: [7, 8]}, lambda a, b: a + b, 0, 2)
    assert (rounds, res) == (0, [7, 8])


@given(st.integers(1, 12), st.integers(1, 40), st.integers(0, 100))
def test_tree_round_bound_sampled(d, k, seed):
    rng = np.random.default_rng(seed)
    members = [int(x) for x in rng.choice(np.arange(1, 100), k, replace=False)]
    root = 0
    recv = {}
    rb = broadcast_tree(RoundEngine(100), root, members, [(x, ()) for x in range(d)], recv)
    assert rb <= tree_round_bound(d, k)
    assert all([v for v, _ in recv[u]] == list(range(d)) for u in members)
    vals = {u: [int(x) for x in rng.integers(0, 9, d)] for u in members}
    rc, res = convergecast_sum(RoundEngine(100), root, members, vals, lambda a, b: a + b, 0, d)
    assert rc <= tree_round_bound(d, k)
    assert res == [sum(vals[u][i] for u in members) for i in range(d)]


# ---------------------------------------------------------- parallelism

def test_parallel_protocols_cost_the_max():
    eng = RoundEngine(8)
    a = TreeSchedule(0, (1, 2, 3))
    b = TreeSchedule(4, (5,))
    p1 = broadcast_protocol(a, [(x, ()) for x in range(5)], {})
    p2 = broadcast_protocol(b, [(x, ()) for x in range(2)], {})
    r1 = broadcast_tree(RoundEngine(8), 0, (1, 2, 3), [(x, ()) for x in range(5)])
    assert eng.run_parallel([p1, p2]) == r1


def test_overlapping_parallel_protocols_are_caught():
    eng = RoundEngine(4)
    a = broadcast_protocol(TreeSchedule(0, (1,)), [(1, ())], {})
    b = broadcast_protocol(TreeSchedule(2, (1,)), [(1, ())], {})
    with pytest.raises(BandwidthViolation):
        eng.run_parallel([a, b])


def test_disjoint_batches():
    eng = RoundEngine(6)
    jobs = []
    for root, members in ((0, (1,)), (2, (1,)), (3, (4, 5))):
        tree = TreeSchedule(root, members)
        jobs.append((frozenset((root,) + members),
                     lambda tree=tree: broadcast_protocol(tree, [(1, ()), (2, ())], {})))
    # jobs 0 and 2 share a batch (max of 2 and 4 rounds); job 1 shares node 1, so it waits (2 more)
    assert run_disjoint_batches(eng, jobs) == 6


def test_determinism():
    def once():
        eng = RoundEngine(50, trace=True)
        rng = np.random.default_rng(9)
        demands = [Message(int(s), int(t)) for s, t in rng.integers(0, 50, (300, 2)) if s != t]
        deliver(eng, schedule_unicast(demands))
        return eng.round, eng.trace
    assert once() == once()
