"""Uniformly sparse matrix multiplication on a simulated low-bandwidth network."""

from .algorithms import (OutputAccumulator, PipelineConfig, RoundReport, count_triangles_graph, multiply,
                         process_brute_force, process_cluster_dense, process_clustered_set,
                         process_small_component)
from .clustering import (PRESETS, SIMPLIFIED, TABLE1, TABLE2, ClusteredSet, Decomposition, ScheduleRow,
                         decompose_layers, extract_clustered_layer, find_heavy_triangles, find_one_cluster,
                         load_schedule, schedule_decompose)
from .core import (Cluster, NodeId, PatternError, PreconditionError, Side, SparsePattern, Triangle,
                   TriangleSet, TriInstance, dense_oracle, enumerate_triangles, restricted_product,
                   support_graph, triangles_in_cluster, triple_loop_product, validate_uniform_sparsity)
from .generators import GeneratorSpec, generate
from .semiring import BOOLEAN, INTEGER, TROPICAL, Semiring, get_semiring
from .simulator import (BandwidthViolation, Message, RoundBudgetExceeded, RoundEngine, broadcast_tree,
                        convergecast_sum, deliver, run_rounds, schedule_unicast)

__version__ = "0.1.0"
