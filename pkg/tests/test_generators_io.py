import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowband.core import enumerate_triangles, triple_loop_triangles, validate_uniform_sparsity
from lowband.fileformats import format_instance, parse_instance, read_edges, write_edges
from lowband.generators import (GeneratorSpec, bounded_degree_edges, bounded_degree_graph, generate,
                                planted_bad_node, planted_clusters)

from conftest import instances


def test_planted_clusters_n32_d4():
    inst = planted_clusters(32, 4, seed=0)
    assert len(enumerate_triangles(inst)) == 512
    assert len(triple_loop_triangles(inst)) == 512
    g = nx.Graph()
    # clusters are the connected components of the I-J-K support
    for i, j in inst.pat_a.entries():
        g.add_edge(("I", i), ("J", j))
    for j, k in inst.pat_b.entries():
        g.add_edge(("J", j), ("K", k))
    assert nx.number_connected_components(g) == 8


def test_bounded_degree_graph_n16_d3():
    inst = bounded_degree_graph(16, 3, seed=0)
    pat = inst.pat_a
    assert pat.transpose() == pat
    assert pat.max_row() <= 3
    assert all(i not in pat.row(i) for i in range(16))


def test_zero_density_is_empty():
    inst = generate(GeneratorSpec("randomUniform", 10, 3, density=0.0))
    assert inst.pat_a.nnz == inst.pat_b.nnz == inst.pat_x.nnz == 0


def test_planted_bad_node_load():
    inst = planted_bad_node(50, 7, seed=3)
    from lowband.core import NodeId, Side
    assert enumerate_triangles(inst).load(NodeId(Side.I, 0)) == 49


@pytest.mark.parametrize("kw", [dict(kind="nope", n=4, d=2), dict(kind="randomUniform", n=2, d=4),
                                dict(kind="randomUniform", n=4, d=2, density=1.5)])
def test_infeasible_specs(kw):
    with pytest.raises(ValueError):
        GeneratorSpec(**kw)


@given(st.sampled_from(["randomUniform", "plantedClusters", "plantedBadNode", "boundedDegreeGraph"]),
       st.integers(1, 6), st.integers(0, 20), st.integers(0, 1000))
def test_generated_instances_are_valid(kind, d, extra, seed):
    inst = generate(GeneratorSpec(kind, d + extra, d, 1.0, seed))
    for pat in (inst.pat_a, inst.pat_b, inst.pat_x):
        assert validate_uniform_sparsity(pat, d)


def test_bounded_degree_edges_degrees():
    for seed in range(5):
        edges = bounded_degree_edges(60, 8, seed)
        g = nx.Graph(edges)
        assert max(dict(g.degree).values()) <= 8


# ------------------------------------------------------------- files

@given(instances(max_n=16, max_d=3))
def test_instance_round_trip(inst):
    back = parse_instance(format_instance(inst))
    assert back.n == inst.n and back.d == inst.d and back.semiring is inst.semiring
    assert back.pat_a == inst.pat_a and back.pat_b == inst.pat_b and back.pat_x == inst.pat_x
    assert all(back.a(i, j) == inst.a(i, j) for i, j in inst.pat_a.entries())
    assert all(back.b(j, k) == inst.b(j, k) for j, k in inst.pat_b.entries())


def test_parse_is_whitespace_tolerant():
    text = """
    # a 2x2 example
    2   2\ttropical
    A
      0 1   inf
    1 0 3     # trailing comment
    B
    1 1 4
    0 0 2
    X
    0 0
    1 1
    pattern   a
    0 0
    """
    inst = parse_instance(text)
    assert inst.semiring.name == "tropical"
    assert inst.pat_a.row(0) == (0, 1)
    assert inst.a(1, 0) == 3 and inst.b(1, 1) == 4


@pytest.mark.parametrize("text", ["", "2 1\n", "2 1 integer\n0 0 1\n", "2 1 integer\nA\n0 0\n",
                                  "2 1 integer\nX\n0 5\n"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_instance(text)


def test_edge_files(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# k3\n0 1\n2 1\n1 0\n0 2\n")
    assert read_edges(p) == [(0, 1), (0, 2), (1, 2)]
    write_edges([(1, 2), (0, 1)], p)
    assert read_edges(p) == [(0, 1), (1, 2)]
    p.write_text("3 3\n")
    with pytest.raises(ValueError):
        read_edges(p)
