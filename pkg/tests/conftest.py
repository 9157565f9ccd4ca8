import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lowband.core import Cluster, SparsePattern, TriInstance
from lowband.generators import random_uniform

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def instances(draw, max_n=24, max_d=4, semirings=("integer", "boolean", "tropical")):
    d = draw(st.integers(1, max_d))
    n = draw(st.integers(d, max_n))
    density = draw(st.sampled_from([0.25, 0.5, 1.0]))
    seed = draw(st.integers(0, 10_000))
    sr = draw(st.sampled_from(semirings))
    return random_uniform(n, d, density, seed, sr)


def full_cluster(d: int) -> Cluster:
    r = frozenset(range(d))
    return Cluster(r, r, r)


def dense_instance(n: int, d: int, semiring="integer", seed=0) -> TriInstance:
    """All-ones patterns on an ``n x n`` instance with ``n == d``."""
    rng = np.random.default_rng(seed)
    from lowband.semiring import get_semiring
    sr = get_semiring(semiring)
    pat = SparsePattern(n, tuple(tuple(range(n)) for _ in range(n)))
    va = {e: sr.sample(rng) for e in pat.entries()}
    vb = {e: sr.sample(rng) for e in pat.entries()}
    return TriInstance(n, d, sr, pat, pat, pat, va, vb)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def thinned_planted(n: int, d: int, keep: float, seed: int = 0, semiring="integer") -> TriInstance:
    """Planted full clusters with each output-pattern entry kept with probability ``keep``."""
    from lowband.generators import planted_clusters
    inst = planted_clusters(n, d, seed, semiring)
    rng = np.random.default_rng(seed + 1)
    xs = [e for e in inst.pat_x.entries() if rng.random() < keep]
    return TriInstance(inst.n, d, inst.semiring, inst.pat_a, inst.pat_b,
                       SparsePattern.from_entries(n, xs), inst.val_a, inst.val_b)


# one PASS/FAIL line per acceptance test, printed after the run; tests add
# measurements with record_property("measured", ...)
_acceptance: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords:
        return
    name = report.nodeid.split("::")[-1]
    measured = "; ".join(str(v) for k, v in report.user_properties if k == "measured")
    if report.failed:
        _acceptance[name] = ["FAIL", measured]
    elif report.when == "call" and name not in _acceptance:
        _acceptance[name] = ["SKIP" if report.skipped else "PASS", measured]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, (verdict, measured) in _acceptance.items():
        terminalreporter.write_line(f"{verdict}  {name}" + (f"  [{measured}]" if measured else ""))
