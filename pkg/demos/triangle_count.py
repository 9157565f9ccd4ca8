"""Count triangles in a bounded-degree graph with the matrix pipeline.

Marks a random subset of edges red and counts only all-red triangles,
checking both answers against networkx.

    python demos/triangle_count.py
"""

import networkx as nx
import numpy as np

from lowband import count_triangles_graph
from lowband.generators import bounded_degree_edges

n, degree = 96, 8
edges = sorted(bounded_degree_edges(n, degree, seed=4))
g = nx.Graph(edges)
print(f"{n} vertices, {len(edges)} edges, max degree {max(dict(g.degree).values())}")

total = count_triangles_graph(n, edges)
print(f"all triangles: {total} (networkx says {sum(nx.triangles(g).values()) // 3})")

rng = np.random.default_rng(5)
red = [e for e in edges if rng.random() < 0.7]
red_total = count_triangles_graph(n, edges, red)
print(f"all-red triangles: {red_total} (networkx says {sum(nx.triangles(nx.Graph(red)).values()) // 3})")
