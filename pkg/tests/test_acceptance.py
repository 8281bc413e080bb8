"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The summary lines go straight to the terminal, bypassing output capture, so
``pytest tests/test_acceptance.py -v`` shows them inline.
"""

import io as stdio
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import brute_force_min_stress
from dkps import io
from dkps.alignment import aligned_error, procrustes
from dkps.cli import main
from dkps.core import DissimilarityMatrix, pairwise_distances
from dkps.discrepancy import discrepancy_matrix, table_discrepancy
from dkps.experiments import loglog_slope, run_regime, summarize, tail_bound_check, trend_spearman
from dkps.rawstress import SolverSettings, mds
from dkps.synth import (
    CollectionSpec,
    GammaSchedule,
    LatentSpec,
    exact_limit_matrix,
    make_collection,
    population_means,
    sample_collection,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok
    return emit


def _random_target(rng, n):
    upper = np.triu(rng.uniform(0.1, 2.0, (n, n)), 1)
    return DissimilarityMatrix.from_array(upper + upper.T)


def test_01_exact_recovery(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_stress = worst_rmse = 0.0
    for inst in range(20):
        pts = rng.standard_normal((10, 2))
        conf = mds(DissimilarityMatrix.from_array(pairwise_distances(pts)), SolverSettings(seed=inst))
        fit = procrustes(conf.points, pts)
        rmse = float(np.sqrt(np.mean(np.sum((fit.apply(conf) - pts) ** 2, axis=1))))
        worst_stress = max(worst_stress, conf.stress)
        worst_rmse = max(worst_rmse, rmse)
    elapsed = time.perf_counter() - start
    ok = worst_stress < 1e-8 and worst_rmse < 1e-4 and elapsed < 5
    assert report(1, ok, f"max stress {worst_stress:.2e} (<1e-8), max RMSE {worst_rmse:.2e} (<1e-4), "
                         f"{elapsed:.2f}s (<5s)")


def test_02_smacof_monotone(report):
    rng = np.random.default_rng(2)
    violations = steps = 0
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(3, 16))
        conf = mds(_random_target(rng, n), SolverSettings(seed=k, restarts=2, max_iters=500), history=True)
        for trace in conf.meta["stress_history"]:
            rises = np.diff(trace)
            steps += len(rises)
            violations += int(np.sum(rises > 1e-12))
            worst = max(worst, float(rises.max(initial=-np.inf)))
    ok = violations == 0
    assert report(2, ok, f"{violations} violations over {steps} steps, largest step change {worst:.2e}")


def test_03_brute_force_oracle(report):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for k in range(10):
        target = _random_target(rng, 4)
        solver = mds(target, SolverSettings(seed=k)).stress
        oracle = brute_force_min_stress(target.values, d=2, samples=100_000, seed=k)
        worst = max(worst, (solver - oracle) / max(oracle, 1e-12))
    elapsed = time.perf_counter() - start
    ok = worst <= 0.01 and elapsed < 60
    assert report(3, ok, f"worst relative gap to brute force {worst:.2e} (<=1%), {elapsed:.1f}s (<60s)")


def test_04_fixed_nm_trend(report):
    cfg = io.load_regime_config(CONFIGS / "fixed_nm.json")
    start = time.perf_counter()
    results = run_regime(cfg)
    elapsed = time.perf_counter() - start
    med = [v for _, v in sorted((k[2], v) for k, v in summarize(results).items())]
    decreasing = all(a > b for a, b in zip(med, med[1:]))
    rho = trend_spearman(results, "r")
    slope = loglog_slope(results)
    ok = decreasing and rho <= -0.9 and -0.65 <= slope <= -0.35 and elapsed < 120
    assert report(4, ok, f"medians {[round(v, 4) for v in med]}, Spearman {rho:.2f} (<=-0.9), "
                         f"slope {slope:.3f} in [-0.65,-0.35], {elapsed:.1f}s (<120s)")


def test_05_growing_m_trend(report):
    cfg = io.load_regime_config(CONFIGS / "growing_m.json")
    start = time.perf_counter()
    results = run_regime(cfg)
    elapsed = time.perf_counter() - start
    rho_m = trend_spearman(results, "m", "two_inf_err")
    rho_r = trend_spearman(results, "r", "two_inf_err")
    ok = rho_m <= -0.8 and rho_r <= -0.8 and elapsed < 300
    assert report(5, ok, f"Spearman along m {rho_m:.2f}, along r {rho_r:.2f} (<=-0.8), {elapsed:.1f}s (<300s)")


def test_06_growing_nm_trend(report):
    cfg = io.load_regime_config(CONFIGS / "growing_nm.json")
    start = time.perf_counter()
    results = run_regime(cfg)
    elapsed = time.perf_counter() - start
    med = summarize(results, "two_inf_err")
    lo = med[(min(cfg.n_grid), min(cfg.m_grid), min(cfg.r_grid))]
    hi = med[(max(cfg.n_grid), max(cfg.m_grid), max(cfg.r_grid))]
    ok = hi <= 0.25 * lo and elapsed < 600
    assert report(6, ok, f"two-to-infinity median {lo:.4f} -> {hi:.4f}, ratio {hi / lo:.3f} (<=0.25), "
                         f"d={cfg.dim}, {elapsed:.1f}s (<600s)")


def test_07_tail_bound(report):
    spec = CollectionSpec(n=10, m=20, s=4, gamma=GammaSchedule(c=1.0), seed=7)
    rows = tail_bound_check(spec, [0.5, 1.0], [16, 64], trials=1000)
    bad = [row for row in rows if not row.ok]
    worst = max(rows, key=lambda row: row.empirical - row.bound)
    ok = not bad
    assert report(7, ok, f"{len(rows) - len(bad)}/{len(rows)} cells within bound + 3 SE; tightest cell "
                         f"r={worst.r} eps={worst.eps}: {worst.empirical:.3f} vs {worst.bound:.4f}")


def test_08_exact_realizability(report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for k in range(50):
        q = int(rng.integers(1, 5))
        s = q + int(rng.integers(0, 4))
        manifold = ("unit_cube", "unit_sphere")[k % 2]
        coll = make_collection(int(rng.integers(2, 12)), int(rng.integers(1, 40)), 1, s,
                               LatentSpec(q, manifold, k), GammaSchedule(), seed=k)
        d = discrepancy_matrix([population_means(coll, i) for i in range(coll.n)]).values
        worst = max(worst, float(np.max(np.abs(d - pairwise_distances(coll.latents)))))
    ok = worst < 1e-10
    assert report(8, ok, f"max realizability error {worst:.2e} (<1e-10) over 50 collections")


def test_09_noiseless_pipeline(report, tmp_path):
    worst = 0.0
    for seed in range(10):
        spec = CollectionSpec(n=8, m=12, s=4, latent=LatentSpec(2, seed=seed), gamma=GammaSchedule(c=0.0), seed=seed)
        coll = spec.build(3)
        path = tmp_path / f"e{seed}.jsonl"
        io.write_embeddings(sample_collection(coll), path)
        est = mds(table_discrepancy(io.read_embeddings(path)), SolverSettings(seed=seed))
        ref = mds(exact_limit_matrix(coll), SolverSettings(seed=seed))
        worst = max(worst, aligned_error(est, ref, "avg_l2"))
    ok = worst < 1e-6
    assert report(9, ok, f"max avg_l2_err {worst:.2e} (<1e-6) over 10 seeds")


def _csv(results):
    buf = stdio.StringIO()
    io.write_results(results, buf)
    return buf.getvalue().encode()


def test_10_determinism(report, tmp_path):
    checks = []
    for name in ("fixed_nm.json", "growing_m.json"):
        cfg = io.load_regime_config(CONFIGS / name)
        if name == "growing_m.json":
            cfg = replace(cfg, bootstrap_reps=3)
        first = _csv(run_regime(cfg))
        checks.append(first == _csv(run_regime(cfg)))
        checks.append(first == _csv(run_regime(cfg, workers=2)))
    outs = [tmp_path / f"cli{k}.csv" for k in range(2)]
    for out, workers in zip(outs, ("1", "2")):
        main(["experiment", str(CONFIGS / "fixed_nm.json"), "--seed", "3", "--workers", workers, "-o", str(out)])
    checks.append(outs[0].read_bytes() == outs[1].read_bytes())
    ok = all(checks)
    assert report(10, ok, f"{sum(checks)}/{len(checks)} repeated or parallel runs byte-identical")
