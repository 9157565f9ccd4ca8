"""Sweeps over instance sizes: measure rounds, check outputs, fit growth exponents."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .algorithms import PipelineConfig, multiply
from .core import TriInstance, dense_oracle
from .generators import GeneratorSpec, generate
from .simulator import BandwidthViolation, RoundBudgetExceeded

log = logging.getLogger(__name__)

COLUMNS = ["kind", "n", "d", "rep", "seed", "semiring", "pipeline", "engine", "triangles", "layers",
           "residual", "rounds_total", "rounds_clustered", "rounds_small", "rounds_brute", "verdict"]


@dataclass
class ExperimentSpec:
    generator: GeneratorSpec
    config: PipelineConfig = field(default_factory=PipelineConfig)
    sweep: Sequence[tuple[int, int]] = ()
    repetitions: int = 1
    out_dir: Optional[Path] = None
    name: str = "experiment"
    threads: int = 1
    oracle_cap: int = 512
    spot_checks: int = 1000
    plot: bool = True

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")


@dataclass
class ExperimentResult:
    rows: list[dict]
    slope: Optional[float]
    csv_path: Optional[Path] = None
    plot_path: Optional[Path] = None
    summary_path: Optional[Path] = None

    @property
    def all_exact(self) -> bool:
        return all(r["verdict"] in ("exact-match", "spot-match") for r in self.rows)


def _spot_check(inst: TriInstance, X: dict, count: int, seed: int) -> bool:
    sr = inst.semiring
    keys = sorted(X)
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(keys), size=min(count, len(keys)), replace=False) if keys else []
    for p in pick:
        i, k = keys[int(p)]
        want = sr.zero
        for j in inst.pat_a.row(i):
            want = sr.add(want, sr.mul(inst.a(i, j), inst.b(j, k)))
        if X[(i, k)] != want:
            return False
    return True


def run_point(spec: ExperimentSpec, n: int, d: int, rep: int) -> dict:
    gspec = replace(spec.generator, n=n, d=d, seed=spec.generator.seed + rep)
    inst = generate(gspec)
    cfg = spec.config
    row = {"kind": gspec.kind, "n": n, "d": d, "rep": rep, "seed": gspec.seed,
           "semiring": inst.semiring.name, "pipeline": cfg.pipeline, "engine": cfg.dense_engine}
    try:
        X, report = multiply(inst, cfg)
    except RoundBudgetExceeded:
        row.update(verdict="budget-exceeded")
        return row
    except BandwidthViolation as exc:
        row.update(verdict=f"bandwidth-violation:{exc}")
        return row
    phases = report.by_phase()
    row.update(triangles=report.rows[0].triangles, layers=report.diagnostics.get("layers", 0),
               residual=report.diagnostics.get("residual", 0), rounds_total=report.total,
               rounds_clustered=phases.get("clustered", 0), rounds_small=phases.get("small", 0),
               rounds_brute=phases.get("brute", 0))
    if n <= spec.oracle_cap:
        row["verdict"] = "exact-match" if X == dense_oracle(inst) else "mismatch"
    else:
        row["verdict"] = "spot-match" if _spot_check(inst, X, spec.spot_checks, gspec.seed) else "mismatch"
    return row


def fit_slope(ds: Sequence[float], rounds: Sequence[float]) -> Optional[float]:
    """Least-squares slope of ``log rounds`` against ``log d``."""
    pts = [(math.log(d), math.log(r)) for d, r in zip(ds, rounds) if d > 0 and r > 0]
    if len({x for x, _ in pts}) < 2:
        return None
    x, y = zip(*pts)
    return float(np.polyfit(x, y, 1)[0])


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n", restval="")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def plot_rounds(rows: Sequence[dict], slope: Optional[float], path: Path, title: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    good = [r for r in rows if isinstance(r.get("rounds_total"), int) and r["rounds_total"] > 0]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if good:
        ds = np.array([r["d"] for r in good], dtype=float)
        rs = np.array([r["rounds_total"] for r in good], dtype=float)
        ax.loglog(ds, rs, "o", label="measured")
        grid = np.geomspace(ds.min(), ds.max(), 50)
        base_d, base_r = ds[0], rs[0]
        for expo, style in ((2.0, ":"), (4 / 3, "--"), (1.0, "-.")):
            ax.loglog(grid, base_r * (grid / base_d) ** expo, style, color="grey", lw=1,
                      label=f"d^{expo:.2f} reference")
        if slope is not None:
            coef = np.polyfit(np.log(ds), np.log(rs), 1)
            ax.loglog(grid, np.exp(coef[1]) * grid ** coef[0], "-", label=f"fit, slope {slope:.3f}")
    ax.set_xlabel("d")
    ax.set_ylabel("rounds")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    points = [(n, d, rep) for n, d in spec.sweep for rep in range(spec.repetitions)]
    if spec.threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(lambda p: run_point(spec, *p), points))
    else:
        rows = [run_point(spec, *p) for p in points]
    rows.sort(key=lambda r: (r["n"], r["d"], r["rep"]))
    slope = fit_slope([r["d"] for r in rows if "rounds_total" in r],
                      [r["rounds_total"] for r in rows if "rounds_total" in r])
    result = ExperimentResult(rows, slope)
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.csv_path = out / f"{spec.name}.csv"
        result.csv_path.write_text(rows_to_csv(rows))
        result.summary_path = out / f"{spec.name}-summary.txt"
        verdicts = sorted({r["verdict"] for r in rows})
        result.summary_path.write_text(
            f"runs: {len(rows)}\n"
            f"fitted_slope: {'n/a' if slope is None else f'{slope:.4f}'}\n"
            f"verdicts: {', '.join(verdicts) if verdicts else 'none'}\n")
        if spec.plot and rows:
            result.plot_path = out / f"{spec.name}.png"
            plot_rounds(rows, slope, result.plot_path, f"{spec.generator.kind}, {spec.config.pipeline} pipeline")
    return result
