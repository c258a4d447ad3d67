"""Multi-seed experiment runner, CSV traces, aggregation, and plots.

Trace files use the fixed header ``t,queries,aux_queries,<metric>,...`` with
floats rendered at 17 significant digits, so identical configurations and
seeds produce byte-identical files. Aggregates are recomputed from the
written trace files (not from memory) with exact summation, which makes the
mean/std columns reproducible by any independent reader.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .agda import AgdaConfig, derive_agda_params, run_agda, run_fo_agda
from .diagnostics import METRIC_NAMES, RegretOptions, TraceRecorder, regret
from .errors import ConfigError, UnknownMetricError
from .estimators import SmoothingParams
from .metering import QueryMeter
from .problems import StochasticMinimaxProblem
from .rng import ROLE_METRIC, RngStream
from .suite import build_problem
from .vragda import VragdaConfig, derive_vragda_params, run_vragda

logger = logging.getLogger(__name__)

ALGORITHMS = ("zo-agda", "zo-vragda", "fo-agda")
THREADS_ENV = "ZO_MINIMAX_THREADS"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class ExperimentConfig:
    """One experiment: a problem, an algorithm, and a set of seeds."""

    problem: str
    algorithm: str
    seeds: list[int]
    max_iter: int
    params: dict = field(default_factory=dict)
    param_mode: str = "explicit"  # or "theory"
    theory_eps: Optional[float] = None
    problem_params: dict = field(default_factory=dict)
    record_every: int = 1
    metrics: tuple[str, ...] = ("grad_x_norm",)
    out_dir: str = "results"
    x0: Optional[list[float]] = None
    y0: Optional[list[float]] = None
    target_eps: float = 0.0
    label: str = ""
    # Run a deterministic-oracle algorithm on the closed-form expectation of
    # a stochastic problem (when one is attached) instead of on samples.
    use_expectation: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; one of {ALGORITHMS}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.param_mode not in ("explicit", "theory"):
            raise ConfigError(f"param_mode must be explicit or theory, got {self.param_mode!r}")
        if self.param_mode == "theory" and not self.theory_eps:
            raise ConfigError("theory param mode needs theory_eps")
        for m in self.metrics:
            if m not in METRIC_NAMES:
                raise UnknownMetricError(m, METRIC_NAMES)
        self.metrics = tuple(self.metrics)
        self.seeds = [int(s) for s in self.seeds]
        if not self.label:
            self.label = self.algorithm

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def snapshot(self) -> dict:
        return {
            "problem": self.problem, "algorithm": self.algorithm,
            "seeds": list(self.seeds), "max_iter": self.max_iter,
            "params": dict(self.params), "param_mode": self.param_mode,
            "theory_eps": self.theory_eps,
            "problem_params": dict(self.problem_params),
            "record_every": self.record_every, "metrics": list(self.metrics),
            "x0": self.x0, "y0": self.y0, "target_eps": self.target_eps,
            "label": self.label, "use_expectation": self.use_expectation,
        }


def _build_algo_config(config: ExperimentConfig, problem):
    p = dict(config.params)
    if config.algorithm == "zo-vragda" and not isinstance(problem, StochasticMinimaxProblem):
        raise ConfigError("zo-vragda requires a stochastic problem")
    if config.param_mode == "theory":
        if config.algorithm == "zo-agda":
            return derive_agda_params(problem.constants, problem.d1, problem.d2,
                                      config.theory_eps, max_iter=config.max_iter,
                                      target_eps=config.target_eps)
        if config.algorithm == "zo-vragda":
            return derive_vragda_params(problem.constants, problem.d1, problem.d2,
                                        config.theory_eps, max_iter=config.max_iter,
                                        target_eps=config.target_eps,
                                        max_batch=int(p.get("max_batch", 10 ** 5)))
        raise ConfigError("theory param mode applies to zo-agda and zo-vragda")
    if config.algorithm == "fo-agda":
        return {"alpha": float(p.get("alpha", p.get("tau1", 0.1))),
                "beta": float(p.get("beta", p.get("tau2", 0.1)))}
    smoothing = SmoothingParams(float(p.get("mu1", 0.01)), float(p.get("mu2", 0.01)))
    if config.algorithm == "zo-agda":
        return AgdaConfig(alpha=float(p["alpha"]), beta=float(p["beta"]),
                          smoothing=smoothing, max_iter=config.max_iter,
                          target_eps=config.target_eps)
    return VragdaConfig(alpha=float(p["alpha"]), beta=float(p["beta"]),
                        smoothing=smoothing, q=int(p["q"]), B=int(p["B"]),
                        b=int(p["b"]), max_iter=config.max_iter,
                        target_eps=config.target_eps)


def _run_one_seed(config: ExperimentConfig, problem, algo_config, seed: int):
    if config.use_expectation:
        if config.algorithm == "zo-vragda":
            raise ConfigError("the variance-reduced solver needs samples, not the expectation")
        if isinstance(problem, StochasticMinimaxProblem):
            if problem.expected is None:
                raise ConfigError("use_expectation set but the problem has no expectation")
            problem = problem.expected
    rng = RngStream(seed)
    recorder = TraceRecorder(
        problem, metrics=config.metrics, record_every=config.record_every,
        meter=QueryMeter(), rng=rng.child(ROLE_METRIC),
        regret_opts=RegretOptions(starts=8, iters=300, step=5e-4),
        seed=seed, config=config.snapshot(), problem_id=config.problem)
    if config.algorithm == "zo-agda":
        run_agda(problem, algo_config, rng, recorder, x0=config.x0, y0=config.y0)
    elif config.algorithm == "zo-vragda":
        run_vragda(problem, algo_config, rng, recorder, x0=config.x0, y0=config.y0)
    else:
        run_fo_agda(problem, algo_config["alpha"], algo_config["beta"],
                    config.max_iter, rng, recorder, x0=config.x0, y0=config.y0)
    return recorder.trace


def write_trace_csv(trace, path) -> None:
    lines = ["t,queries,aux_queries" + "".join("," + m for m in trace.metric_names)]
    for row in trace.rows:
        cells = [str(row.t), str(row.queries), str(row.aux_queries)]
        cells += [_fmt(row.metrics[m]) for m in trace.metric_names]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> tuple[list[str], np.ndarray]:
    """Returns (column names, rows as a 2-D float array)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    data = np.array([[float(c) for c in line.split(",")] for line in text[1:]])
    return header, data


def aggregate_trace_files(paths) -> tuple[list[str], list[list[float]]]:
    """Mean and sample standard deviation per row across trace files.

    Columns become <name>_mean, <name>_std for every input column except t,
    which must agree across files. Uses exact (fsum) accumulation so any
    faithful reader reproduces the numbers bit-for-bit.
    """
    if not paths:
        raise ConfigError("no trace files to aggregate")
    headers, tables = zip(*(read_trace_csv(p) for p in paths))
    if any(h != headers[0] for h in headers):
        raise ConfigError("trace files have differing headers")
    n_rows = min(len(tab) for tab in tables)
    if any(len(tab) != n_rows for tab in tables):
        logger.warning("trace files differ in length; aggregating first %d rows", n_rows)
    header = headers[0]
    out_header = ["t"]
    for name in header[1:]:
        out_header += [f"{name}_mean", f"{name}_std"]
    out_rows: list[list[float]] = []
    n = len(tables)
    for i in range(n_rows):
        t0 = tables[0][i, 0]
        if any(tab[i, 0] != t0 for tab in tables):
            raise ConfigError(f"trace files disagree on t at row {i}")
        row = [t0]
        for j in range(1, len(header)):
            vals = [float(tab[i, j]) for tab in tables]
            mean = math.fsum(vals) / n
            if n > 1:
                var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
                std = math.sqrt(var)
            else:
                std = 0.0
            row += [mean, std]
        out_rows.append(row)
    return out_header, out_rows


def write_aggregate_csv(header, rows, path) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = [str(int(row[0]))] + [_fmt(v) for v in row[1:]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: list
    trace_paths: list[str]
    aggregate_path: str
    errors: dict[int, str]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every seed, write per-seed traces and the aggregate summary."""
    problem = build_problem(config.problem, config.problem_params)
    algo_config = _build_algo_config(config, problem)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = max(1, int(os.environ.get(THREADS_ENV, "1")))
    results: dict[int, object] = {}
    errors: dict[int, str] = {}

    def work(seed):
        return _run_one_seed(config, problem, algo_config, seed)

    if threads == 1:
        for seed in config.seeds:
            try:
                results[seed] = work(seed)
            except Exception as exc:  # noqa: BLE001 - per-seed isolation
                errors[seed] = f"{type(exc).__name__}: {exc}"
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {seed: pool.submit(work, seed) for seed in config.seeds}
            for seed, fut in futures.items():
                try:
                    results[seed] = fut.result()
                except Exception as exc:  # noqa: BLE001
                    errors[seed] = f"{type(exc).__name__}: {exc}"
    if errors:
        logger.warning("seeds failed and are excluded from the aggregate: %s", errors)
    if not results:
        raise RuntimeError(f"all seeds failed: {errors}")

    traces, trace_paths = [], []
    for seed in sorted(results):
        trace = results[seed]
        path = out / f"{config.label}_seed{seed}.csv"
        write_trace_csv(trace, path)
        traces.append(trace)
        trace_paths.append(str(path))
    agg_header, agg_rows = aggregate_trace_files(trace_paths)
    aggregate_path = out / f"{config.label}_aggregate.csv"
    write_aggregate_csv(agg_header, agg_rows, aggregate_path)
    summary = {"config": config.snapshot(), "trace_files": [Path(p).name for p in trace_paths],
               "aggregate_file": aggregate_path.name, "errors": errors}
    (out / f"{config.label}_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return ExperimentResult(config=config, traces=traces, trace_paths=trace_paths,
                            aggregate_path=str(aggregate_path), errors=errors)


# ---------------------------------------------------------------------------
# Plotting


def emit_plot(series, metric: str, x_axis: str = "iteration", logy: bool = False,
              out: str = "plot.svg", title: str = "") -> str:
    """Render mean lines with +-1 std bands to a self-contained SVG.

    ``series`` is a list of (label, aggregate_csv_path). ``x_axis`` is
    ``iteration`` or ``queries``.
    """
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "zo-minimax"
    import matplotlib.pyplot as plt

    if x_axis not in ("iteration", "queries"):
        raise ConfigError(f"x_axis must be iteration or queries, got {x_axis!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, path in series:
        header, rows = read_trace_csv(path)
        cols = {name: idx for idx, name in enumerate(header)}
        mean_col = f"{metric}_mean"
        if mean_col not in cols:
            available = sorted(c[:-5] for c in cols if c.endswith("_mean"))
            raise UnknownMetricError(metric, available)
        x = rows[:, 0] if x_axis == "iteration" else rows[:, cols["queries_mean"]]
        mean = rows[:, cols[mean_col]]
        std = rows[:, cols[f"{metric}_std"]]
        (line,) = ax.plot(x, mean, label=label)
        if np.any(std > 0):
            ax.fill_between(x, mean - std, mean + std, alpha=0.2,
                            color=line.get_color(), linewidth=0)
    ax.set_xlabel("iteration" if x_axis == "iteration" else "function queries")
    ax.set_ylabel(metric)
    if logy:
        ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, format="svg")
    plt.close(fig)
    return str(out)


# ---------------------------------------------------------------------------
# Pinned reproduction experiments

WGAN_SEEDS = [101, 102, 103, 104, 105, 106, 107, 108, 109, 110]
ROBUST_POLY_SEEDS = [201, 202, 203, 204, 205]

# Reproduction thresholds (checked by `reproduce`, exit code 2 on failure).
WGAN_DIST_TARGET = 0.05
WGAN_DIST_WITHIN_ITERS = 5000
ROBUST_POLY_REGRET_TARGET = 0.5
ROBUST_POLY_QUERY_BUDGET = 10 ** 5
ROBUST_POLY_XSTAR_REGRET_TOL = 1e-2


def wgan_experiment_configs(out_dir: str, seed_offset: int = 0,
                            max_iter: Optional[int] = None) -> list[ExperimentConfig]:
    """Pinned generator-game experiment.

    Oracle samples carry 256 coupled data pairs (the minibatch convention;
    the expectation is unchanged). The first-order baseline runs on the
    closed-form expectation. The start is chosen inside the stable region
    of the sampled dynamics.
    """
    iters = max_iter or WGAN_DIST_WITHIN_ITERS
    seeds = [s + seed_offset for s in WGAN_SEEDS]
    metrics = ("dist_to_opt", "grad_x_norm", "grad_y_norm")
    common = dict(problem="wgan",
                  problem_params={"lam": 0.001, "data_batch": 256, "paired": True},
                  seeds=seeds, max_iter=iters, record_every=5,
                  metrics=metrics, out_dir=out_dir, x0=[0.5, 0.8], y0=[0.0, 0.0])
    return [
        ExperimentConfig(algorithm="zo-agda",
                         params={"alpha": 0.1, "beta": 0.5, "mu1": 0.05, "mu2": 0.05},
                         **common),
        ExperimentConfig(algorithm="zo-vragda",
                         params={"alpha": 0.1, "beta": 0.5, "mu1": 0.05, "mu2": 0.05,
                                 "q": 10, "b": 10, "B": 100},
                         **common),
        ExperimentConfig(algorithm="fo-agda", params={"tau1": 0.1, "tau2": 0.5},
                         use_expectation=True, **common),
    ]


def robust_poly_experiment_configs(out_dir: str, seed_offset: int = 0,
                                   max_iter: Optional[int] = None) -> list[ExperimentConfig]:
    seeds = [s + seed_offset for s in ROBUST_POLY_SEEDS]
    metrics = ("regret", "dist_to_opt")
    common = dict(problem="robust-poly-noisy", problem_params={"variance": 0.5},
                  seeds=seeds, metrics=metrics, out_dir=out_dir,
                  x0=[1.0, 1.0], y0=[0.0, 0.0])
    # Iteration counts sized so each solver consumes about the query budget:
    # zo-vragda spends (4B + 8b) / 2 = 140 queries per iteration at q=2,
    # zo-agda spends 4 per iteration, fo-agda spends none.
    return [
        ExperimentConfig(algorithm="zo-agda", max_iter=max_iter or 25000,
                         record_every=100,
                         params={"alpha": 0.1, "beta": 0.1, "mu1": 0.05, "mu2": 0.05},
                         **common),
        ExperimentConfig(algorithm="zo-vragda", max_iter=max_iter or 714,
                         record_every=4,
                         params={"alpha": 0.1, "beta": 0.1, "mu1": 0.05, "mu2": 0.05,
                                 "q": 2, "b": 10, "B": 50},
                         **common),
        ExperimentConfig(algorithm="fo-agda", max_iter=max_iter or 2000,
                         record_every=20, params={"tau1": 0.1, "tau2": 0.1},
                         **common),
    ]


def _mean_curve(aggregate_path: str, metric: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    header, rows = read_trace_csv(aggregate_path)
    cols = {name: idx for idx, name in enumerate(header)}
    return (rows[:, 0], rows[:, cols[f"{metric}_mean"]],
            rows[:, cols["queries_mean"]])


def _check_wgan(results: dict[str, ExperimentResult], report: list[str]) -> bool:
    ok = True
    for label, res in results.items():
        t, dist, _ = _mean_curve(res.aggregate_path, "dist_to_opt")
        within = t <= WGAN_DIST_WITHIN_ITERS
        hit = bool(np.any(dist[within] < WGAN_DIST_TARGET))
        n = len(dist)
        decile = max(1, n // 10)
        trend = float(dist[-decile:].mean()) < float(dist[:decile].mean())
        report.append(f"[{'PASS' if hit else 'FAIL'}] {label}: mean dist-to-opt "
                      f"min {dist[within].min():.4f} (target < {WGAN_DIST_TARGET}) "
                      f"within {WGAN_DIST_WITHIN_ITERS} iterations")
        report.append(f"[{'PASS' if trend else 'FAIL'}] {label}: final-decile mean "
                      f"{dist[-decile:].mean():.4f} < first-decile mean {dist[:decile].mean():.4f}")
        ok = ok and hit and trend
    return ok


def best_so_far_regret(trace_paths) -> tuple[np.ndarray, np.ndarray]:
    """Seed-mean of the running minimum of recorded regret (the reported
    'minimum achieved regret' convention), with the shared query axis."""
    curves, queries = [], None
    for path in trace_paths:
        header, rows = read_trace_csv(path)
        cols = {n: i for i, n in enumerate(header)}
        curves.append(np.minimum.accumulate(rows[:, cols["regret"]]))
        queries = rows[:, cols["queries"]]
    n = min(len(c) for c in curves)
    return np.mean([c[:n] for c in curves], axis=0), queries[:n]


def write_best_regret_aggregate(trace_paths, out_path) -> str:
    """Aggregate per-seed running-min regret into a plottable CSV."""
    curves, ts, queries = [], None, None
    for path in trace_paths:
        header, rows = read_trace_csv(path)
        cols = {n: i for i, n in enumerate(header)}
        curves.append(np.minimum.accumulate(rows[:, cols["regret"]]))
        ts = rows[:, 0]
        queries = rows[:, cols["queries"]]
    n = min(len(c) for c in curves)
    header = ["t", "queries_mean", "queries_std", "regret_best_mean", "regret_best_std"]
    out_rows = []
    k = len(curves)
    for i in range(n):
        vals = [float(c[i]) for c in curves]
        mean = math.fsum(vals) / k
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (k - 1)) if k > 1 else 0.0
        out_rows.append([ts[i], queries[i], 0.0, mean, std])
    write_aggregate_csv(header, out_rows, out_path)
    return str(out_path)


def _check_robust_poly(results: dict[str, ExperimentResult], report: list[str]) -> bool:
    ok = True
    res = results["zo-vragda"]
    best, queries = best_so_far_regret(res.trace_paths)
    in_budget = queries <= ROBUST_POLY_QUERY_BUDGET
    hit = bool(np.any(best[in_budget] < ROBUST_POLY_REGRET_TARGET))
    report.append(f"[{'PASS' if hit else 'FAIL'}] zo-vragda: mean best-achieved regret "
                  f"{best[in_budget].min():.4f} (target < {ROBUST_POLY_REGRET_TARGET}) "
                  f"within {ROBUST_POLY_QUERY_BUDGET} queries")
    ok = ok and hit
    from .suite import make_robust_polynomial
    problem = make_robust_polynomial()
    rep = regret(problem, problem.x_star, RegretOptions(), rng=RngStream(7))
    close = abs(rep.regret) <= ROBUST_POLY_XSTAR_REGRET_TOL
    report.append(f"[{'PASS' if close else 'FAIL'}] regret at reference x* = "
                  f"{rep.regret:.2e} (|.| <= {ROBUST_POLY_XSTAR_REGRET_TOL})")
    return ok and close


def reproduce(experiment: str, out_dir: str = "reproduce-out", seed_offset: int = 0,
              max_iter: Optional[int] = None) -> int:
    """Run a pinned experiment set, emit plots, check thresholds.

    Returns the process exit status: 0 on success, 2 when a reproduction
    threshold fails. Run errors propagate as exceptions (exit 1 in the CLI).
    """
    if experiment == "wgan":
        configs = wgan_experiment_configs(out_dir, seed_offset, max_iter)
        plots = [("dist_to_opt", "iteration", False),
                 ("grad_x_norm", "iteration", True),
                 ("grad_y_norm", "iteration", True)]
        checker = _check_wgan
    elif experiment == "robust-poly":
        configs = robust_poly_experiment_configs(out_dir, seed_offset, max_iter)
        plots = [("regret", "queries", False), ("regret", "iteration", False)]
        checker = _check_robust_poly
    else:
        raise ConfigError(f"unknown experiment {experiment!r}; one of: wgan, robust-poly")

    results: dict[str, ExperimentResult] = {}
    for config in configs:
        logger.info("running %s / %s (%d seeds)", experiment, config.label, len(config.seeds))
        results[config.label] = run_experiment(config)
    series = [(label, res.aggregate_path) for label, res in results.items()]
    for metric, x_axis, logy in plots:
        usable = series
        if x_axis == "queries":
            usable = [(lab, p) for lab, p in series if lab != "fo-agda"]
        emit_plot(usable, metric, x_axis=x_axis, logy=logy,
                  out=str(Path(out_dir) / f"{experiment}_{metric}_vs_{x_axis}.svg"),
                  title=f"{experiment}: {metric}")
    if experiment == "robust-poly":
        best_series = []
        for label, res in results.items():
            if label == "fo-agda":
                continue
            path = Path(out_dir) / f"{label}_best_regret_aggregate.csv"
            write_best_regret_aggregate(res.trace_paths, path)
            best_series.append((label, str(path)))
        emit_plot(best_series, "regret_best", x_axis="queries",
                  out=str(Path(out_dir) / "robust-poly_regret_best_vs_queries.svg"),
                  title="robust-poly: best regret so far")
    report: list[str] = []
    ok = checker(results, report)
    report_text = "\n".join(report)
    (Path(out_dir) / f"{experiment}_report.txt").write_text(report_text + "\n")
    print(report_text)
    return 0 if ok else 2
