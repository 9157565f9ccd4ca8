"""Walk one instance through the whole pipeline and look at where the rounds go.

    python demos/multiply_walkthrough.py
"""

from lowband import PipelineConfig, multiply
from lowband.clustering import TABLE2, schedule_decompose
from lowband.core import enumerate_triangles, triple_loop_product
from lowband.generators import planted_bad_node, planted_clusters

# Eight disjoint full 8x8x8 blocks: every triangle sits inside some cluster.
inst = planted_clusters(64, 8, seed=1)
T = enumerate_triangles(inst)
print(f"planted instance: n={inst.n}, d={inst.d}, {len(T)} triangles")

# Preprocessing only looks at the patterns, so we can inspect it on its own.
dec = schedule_decompose(T, TABLE2, inst.d, inst.n)
for x, layer in enumerate(dec.layers):
    print(f"  layer {x}: {len(layer.clusters)} clusters, {len(layer)} triangles")
print(f"  residual: {len(dec.residual)} triangles")

X, report = multiply(inst)
assert X == triple_loop_product(inst)
print(report.summary())

# A single I-node sitting in d^2 triangles: nothing clusters, the small
# component phase hands its work to helper nodes instead.
inst = planted_bad_node(64, 8, seed=2)
X, report = multiply(inst, PipelineConfig(seed=3))
assert X == triple_loop_product(inst)
for chunk in report.small_chunks:
    print(f"bad nodes {chunk['bad_nodes']}, colours {chunk['colors']}, "
          f"virtual nodes {chunk['virtual_nodes']}, heaviest virtual node {chunk['max_virtual_load']}")
print(report.summary())

# Same instance, no cleverness: one brute-force routing phase.
_, brute = multiply(inst, PipelineConfig(pipeline="brute"))
print(f"brute force alone: {brute.total} rounds")
