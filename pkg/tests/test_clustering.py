import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowband.clustering import (PRESETS, SIMPLIFIED, TABLE1, TABLE2, ScheduleRow, check_schedule, cluster_bound,
                                cluster_search, decompose_layers, extract_clustered_layer, find_heavy_triangles,
                                find_one_cluster, is_large, layer_count_bound, layer_yield_bound, load_schedule,
                                schedule_decompose)
from lowband.core import (Cluster, PreconditionError, Triangle, TriangleSet,
                          enumerate_triangles, triangles_in_cluster)
from lowband.generators import planted_clusters

from conftest import dense_instance, thinned_planted


def partitions(parts, whole):
    sets = [p.as_set() for p in parts]
    return sum(map(len, sets)) == len(whole) and frozenset().union(*sets) == whole.as_set()


# ------------------------------------------------------------ heavy edges

def test_full_cluster_all_heavy():
    T = enumerate_triangles(dense_instance(4, 4))
    assert len(T) == 64
    # each J-K edge carries 4 triangles >= ceil(4 / 2)
    assert find_heavy_triangles(T, 0, 4, 4) == T


def test_single_multiplicity_edges_not_heavy():
    T = TriangleSet(Triangle(x, x, x) for x in range(8))
    assert len(find_heavy_triangles(T, 0, 4, 8)) == 0


def test_eps_one_makes_everything_heavy():
    T = TriangleSet(Triangle(x, x, x) for x in range(8))
    assert find_heavy_triangles(T, 1, 4, 8) == T


@given(st.integers(0, 200), st.sampled_from([0.0, 0.25]))
def test_heavy_count_lower_bound(seed, eps):
    d, n = 4, 16
    T = enumerate_triangles(thinned_planted(n, d, 0.9, seed))
    H = find_heavy_triangles(T, eps, d, n)
    if len(T) >= d ** (2 - eps) * n:
        assert len(H) >= len(T) - 0.5 * d ** (2 - eps) * n


# ------------------------------------------------------------ one cluster

def test_whole_instance_is_one_cluster():
    T = enumerate_triangles(dense_instance(2, 2))
    U, count = find_one_cluster(T, 0, 2, 2)
    assert U == Cluster({0, 1}, {0, 1}, {0, 1})
    assert count == 8


def test_planted_clusters_give_a_full_cluster():
    inst = planted_clusters(32, 4, seed=3)
    T = enumerate_triangles(inst)
    assert len(T) == 512
    U, count = find_one_cluster(T, 0, 4, 32)
    assert count == 64
    assert count >= math.ceil(cluster_bound(4, 0))


@pytest.mark.parametrize("seed", range(4))
def test_thinned_instance_eps_quarter(seed):
    d, n, eps = 8, 64, 0.25
    T = enumerate_triangles(thinned_planted(n, d, 0.65, seed))
    assert len(T) >= d ** 1.75 * n
    U, count = find_one_cluster(T, eps, d, n)
    assert count == len(triangles_in_cluster(T, U))
    assert count >= 3  # ceil(8^2 / 24)


def test_search_state_invariants():
    d, n, eps = 8, 64, 0.25
    T = enumerate_triangles(thinned_planted(n, d, 0.65, 11))
    st_ = cluster_search(T, eps, d, n)
    assert len(st_.J0) <= d and len(st_.K0) <= d
    for i, (t, y, z, e) in st_.labels.items():
        assert e == y + z
        assert t <= y * z
    assert len(st_.top) == d
    assert st_.sum_top >= cluster_bound(d, eps)
    assert st_.min_top == min(st_.t(i) for i in st_.top)


def test_cluster_preconditions():
    T = TriangleSet([Triangle(0, 0, 0)])
    with pytest.raises(PreconditionError):
        find_one_cluster(T, 0, 4, 8)
    with pytest.raises(PreconditionError):
        find_one_cluster(T, 0, 4, 2)


@given(st.integers(0, 500), st.sampled_from([0.0, 0.25, 0.5]), st.sampled_from([0.6, 0.8, 1.0]))
def test_cluster_bound_whenever_precondition_holds(seed, eps, keep):
    d, n = 4, 16
    T = enumerate_triangles(thinned_planted(n, d, keep, seed))
    if len(T) < d ** (2 - eps) * n:
        return
    U, count = find_one_cluster(T, eps, d, n)
    assert U.d == d
    assert count >= cluster_bound(d, eps)


# ----------------------------------------------------------- one layer

def test_layer_below_threshold_is_empty():
    T = TriangleSet([Triangle(0, 0, 0)])
    P, rest = extract_clustered_layer(T, 0, 0.05, 4, 32)
    assert len(P) == 0 and rest == T


def test_layer_on_planted_d4():
    T = enumerate_triangles(planted_clusters(32, 4, seed=5))
    P, rest = extract_clustered_layer(T, 0, 0.05, 4, 32)
    assert len(P) >= 3  # ceil(4^1.8 * 32 / 144)
    assert P.is_valid()
    assert partitions(P.per_cluster + [rest], T)


def test_layer_on_planted_d16():
    d, n = 16, 256
    T = enumerate_triangles(planted_clusters(n, d, seed=6))
    assert len(T) >= d ** 1.9 * n
    P, rest = extract_clustered_layer(T, 0.1, 0.05, d, n)
    assert len(P) >= 66  # ceil(16^1.3 * 256 / 144)
    assert P.is_valid()
    assert partitions(P.per_cluster + [rest], T)


@given(st.integers(0, 300), st.sampled_from([0.7, 0.9, 1.0]))
def test_layer_progress_is_monotone(seed, keep):
    d, n = 4, 24
    T = enumerate_triangles(thinned_planted(n, d, keep, seed))
    hist = []
    P, rest = extract_clustered_layer(T, 0.0, 0.25, d, n, history=hist)
    assert all(a > b for a, b in zip(hist, hist[1:]))
    assert P.is_valid()
    assert partitions(P.per_cluster + [rest], T)


def test_large_delta_layer_bound():
    # d^delta = 2 exactly, so the yield bound applies
    d, n, eps2, delta = 4, 32, 0.0, 0.5
    assert is_large(d, delta)
    T = enumerate_triangles(planted_clusters(n, d, seed=7))
    P, _ = extract_clustered_layer(T, eps2, delta, d, n)
    assert len(P) >= layer_yield_bound(d, n, eps2, delta)


# ---------------------------------------------------------- many layers

def test_decompose_empty():
    layers, rest = decompose_layers(TriangleSet(), ScheduleRow(0, 0.5, 0.05), 8, 64)
    assert layers == [] and len(rest) == 0


def test_decompose_saturated_d8():
    d, n = 8, 64
    row = ScheduleRow(0, 0.5, 0.05)
    T = enumerate_triangles(planted_clusters(n, d, seed=8))
    assert len(T) == d * d * n
    layers, rest = decompose_layers(T, row, d, n)
    assert len(rest) <= d ** 1.5 * n
    assert len(layers) <= 144 * d ** 2.7
    assert all(P.is_valid() for P in layers)
    assert partitions([p for P in layers for p in P.per_cluster] + [rest], T)


def test_decompose_already_small():
    T = TriangleSet(Triangle(x, x, x) for x in range(10))
    layers, rest = decompose_layers(T, ScheduleRow(0, 0.5, 0.05), 8, 64)
    assert layers == [] and rest == T


def test_decompose_precondition():
    T = enumerate_triangles(planted_clusters(64, 8, seed=9))
    with pytest.raises(PreconditionError):
        decompose_layers(T, ScheduleRow(0.5, 0.6, 0.05), 8, 64)


# ------------------------------------------------------------ schedules

def test_schedule_constants():
    assert TABLE2[0] == ScheduleRow(0, 0.118537, 0.00001)
    assert TABLE1[0] == ScheduleRow(0, 0.149775, 0.00001)
    assert [r.eps2 for r in TABLE2] == [0.118537, 0.142249, 0.146986, 0.147937, 0.148127]
    assert [r.eps2 for r in TABLE1] == [0.149775, 0.179736, 0.185724, 0.186926, 0.187166]
    assert SIMPLIFIED == (ScheduleRow(0, 0.1, 0.05),)
    for rows in PRESETS.values():
        check_schedule(rows)


def test_bad_schedules():
    with pytest.raises(ValueError):
        check_schedule([ScheduleRow(0, 0.1, 0.01), ScheduleRow(0.2, 0.3, 0.01)])
    with pytest.raises(ValueError):
        check_schedule([ScheduleRow(0.1, 0.2, 0.01)])
    with pytest.raises(ValueError):
        ScheduleRow(0.2, 0.1, 0.01)
    with pytest.raises(ValueError):
        ScheduleRow(0, 0.1, 0)


def test_schedule_file(tmp_path):
    f = tmp_path / "s.txt"
    f.write_text("# two rows\n0 0.2 0.05\n0.2 0.3 0.05\n")
    rows = load_schedule(f)
    assert rows == (ScheduleRow(0, 0.2, 0.05), ScheduleRow(0.2, 0.3, 0.05))
    assert load_schedule("table2") is TABLE2


@pytest.mark.parametrize("name,exponent", [("table2", 1.854), ("table1", 1.814)])
def test_saturated_d8_schedules(name, exponent):
    d, n = 8, 64
    T = enumerate_triangles(planted_clusters(n, d, seed=10))
    dec = schedule_decompose(T, PRESETS[name], d, n)
    assert len(dec.residual) <= d ** exponent * n
    assert dec.partitions(T)
    assert all(P.is_valid() for P in dec.layers)
    for P, r in zip(dec.layers, dec.layer_rows):
        assert r < len(PRESETS[name])


def test_respect_small_d_skips_clustering():
    d, n = 8, 64
    T = enumerate_triangles(planted_clusters(n, d, seed=10))
    dec = schedule_decompose(T, TABLE2, d, n, respect_small_d=True)
    assert dec.layers == [] and dec.residual == T
    big = schedule_decompose(T, (ScheduleRow(0, 0.1, 0.5),), d, n, respect_small_d=True)
    assert big.layers


def test_layer_count_bound_formula():
    row = ScheduleRow(0.1, 0.2, 0.05)
    assert layer_count_bound(8, row) == pytest.approx(144 * 8 ** (1.0 - 0.1 + 0.2))
