"""Run orchestration: single estimator runs, shared-data comparisons, Monte Carlo."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .radar import (
    RadarTruth,
    RangeMeasurements,
    ScenarioConfig,
    make_estimator,
    measure_range,
    simulate_truth,
)
from .series import EstimateSeries, MonteCarloSummary, RadarRunTable, RmseSummary, compute_rmse

THREADS_ENV = "GSSM_LAB_THREADS"


def simulate_pair(cfg: ScenarioConfig, seed: int | None = None, zero_noise: bool = False) -> tuple[RadarTruth, RangeMeasurements]:
    """One truth/measurement stream pair; every estimator of a run shares it."""
    base = cfg.seed if seed is None else seed
    truth_ss, meas_ss = np.random.SeedSequence(base).spawn(2)
    truth = simulate_truth(cfg, truth_ss, noise_scale=0.0 if zero_noise else 1.0)
    meas = measure_range(truth, 0.0 if zero_noise else cfg.R, meas_ss)
    meas.seed = base
    return truth, meas


def run_estimator(name: str, cfg: ScenarioConfig, truth: RadarTruth, meas: RangeMeasurements) -> RadarRunTable:
    """Drive one estimator over a prepared stream and tabulate against truth."""
    estimator = make_estimator(name, cfg)
    series = EstimateSeries(tag=name)
    for k in range(len(meas)):
        mean, var = estimator.step(meas.rho[k])
        series.append(k + 1, truth.t[k], mean, var)
    return RadarRunTable.from_series(series, truth.as_matrix())


def run_single(cfg: ScenarioConfig, name: str, seed: int | None = None, zero_noise: bool = False) -> RadarRunTable:
    if cfg.N == 0:
        return RadarRunTable.empty(tag=name)
    truth, meas = simulate_pair(cfg, seed, zero_noise)
    return run_estimator(name, cfg, truth, meas)


def compare(
    cfg: ScenarioConfig,
    seed: int | None = None,
    zero_noise: bool = False,
    trailing: float = 1.0,
) -> tuple[dict[str, RadarRunTable], dict[str, RmseSummary]]:
    """Run every configured estimator on bit-identical data."""
    tables: dict[str, RadarRunTable] = {}
    summaries: dict[str, RmseSummary] = {}
    if cfg.N == 0:
        for name in cfg.estimators:
            tables[name] = RadarRunTable.empty(tag=name)
        return tables, summaries
    truth, meas = simulate_pair(cfg, seed, zero_noise)
    for name in cfg.estimators:
        table = run_estimator(name, cfg, truth, meas)
        tables[name] = table
        summaries[name] = compute_rmse(table, trailing)
    return tables, summaries


def _mc_worker(args: tuple[ScenarioConfig, int, float]) -> dict[str, dict[str, float]]:
    cfg, seed, trailing = args
    _, summaries = compare(cfg, seed=seed, trailing=trailing)
    return {tag: s.rmse for tag, s in summaries.items()}


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else the environment cap, else the CPU count."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, threads)


def monte_carlo(
    cfg: ScenarioConfig,
    runs: int | None = None,
    base_seed: int | None = None,
    trailing: float = 1.0,
    threads: int | None = None,
) -> MonteCarloSummary:
    """Aggregate per-run RMSE over consecutive seeds base, base+1, ...

    Runs are independent and execute in parallel across processes; the
    aggregation is a single-threaded reduction in seed order, so results do
    not depend on the worker count.
    """
    runs = cfg.runs if runs is None else runs
    if runs < 1:
        raise ValueError("need at least one run")
    base_seed = cfg.seed if base_seed is None else base_seed
    jobs = [(cfg, base_seed + i, trailing) for i in range(runs)]
    workers = min(resolve_threads(threads), runs)
    if workers <= 1:
        results = [_mc_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_worker, jobs, chunksize=max(1, runs // (4 * workers))))
    per_run: dict[str, list[dict[str, float]]] = {tag: [] for tag in cfg.estimators}
    for res in results:
        for tag, rmse in res.items():
            per_run[tag].append(rmse)
    return MonteCarloSummary(runs=runs, base_seed=base_seed, trailing_fraction=trailing, per_run=per_run)
