"""How in-cluster rounds grow with d, and a small sweep with CSV and plot output.

    python demos/round_growth.py [output-dir]
"""

import sys
from pathlib import Path

from lowband import OutputAccumulator, PipelineConfig
from lowband.algorithms import process_cluster_dense
from lowband.core import Cluster, SparsePattern, TriInstance, enumerate_triangles
from lowband.experiments import ExperimentSpec, fit_slope, run_experiment
from lowband.generators import GeneratorSpec
from lowband.semiring import INTEGER
from lowband.simulator import RoundEngine

out = Path(sys.argv[1] if len(sys.argv) > 1 else "lowband-out")


def full_block(d):
    pat = SparsePattern(d, tuple(tuple(range(d)) for _ in range(d)))
    vals = {e: 1 + (e[0] * 7 + e[1]) % 5 for e in pat.entries()}
    return TriInstance(d, d, INTEGER, pat, pat, pat, vals, dict(vals))


# One fully dense cluster: d^3 triangles, each node in d^2 of them, so brute
# force needs about d^2 rounds.  The cube engine should do much better.
ds, rounds = [8, 16, 32], []
for d in ds:
    inst = full_block(d)
    everyone = frozenset(range(d))
    r = process_cluster_dense(RoundEngine(3 * d), inst, Cluster(everyone, everyone, everyone),
                              enumerate_triangles(inst), OutputAccumulator(inst), "semiring3d")
    rounds.append(r)
    print(f"d={d:3d}: {r:5d} rounds (d^2 = {d * d})")
print(f"log-log slope {fit_slope(ds, rounds):.2f}")

spec = ExperimentSpec(GeneratorSpec("plantedClusters", 64, 4, seed=0), PipelineConfig(),
                      sweep=[(64, 4), (64, 8), (128, 8), (128, 16)], out_dir=out, name="planted-sweep")
result = run_experiment(spec)
print(f"wrote {result.csv_path} and {result.plot_path}; all exact: {result.all_exact}")
