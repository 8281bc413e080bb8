"""Bootstrap consistency experiments on synthetic collections.

Three regimes mirror the consistency results: ``fixed_nm`` (models and
queries fixed, replicates grow), ``growing_m`` (models fixed, queries and
replicates grow) and ``growing_nm`` (all three grow). A run draws one pool of
N models x M queries x R replicates, builds a reference configuration, then
for every grid point and bootstrap repetition resamples from the pool with
replacement, embeds the resample and records its aligned error against the
reference rows of the sampled models.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .alignment import aligned_error
from .core import DissimilarityMatrix
from .discrepancy import scaled_frobenius_distances
from .rawstress import SolverSettings, mds
from .synth import (
    CollectionSpec,
    GammaSchedule,
    LatentSpec,
    exact_limit_matrix,
    make_collection,
    mean_tensor,
    replicate_noise,
    substream,
    SyntheticCollection,
)

log = logging.getLogger(__name__)

REGIMES = ("fixed_nm", "growing_m", "growing_nm")
PROXY_RULES = ("exact_limit", "max_params")
_REFERENCE_STREAM = 3
_TRIAL_STREAM = 4
_TAIL_STREAM = 5


@dataclass(frozen=True)
class RegimeConfig:
    regime: str
    n_grid: tuple
    m_grid: tuple
    r_grid: tuple
    bootstrap_reps: int = 10
    dim: int = 2
    latent: LatentSpec = LatentSpec()
    gamma: GammaSchedule = GammaSchedule()
    s: int = 4
    proxy_rule: str = "exact_limit"
    seed: int = 0
    # replicate pool size; None means max(r_grid)
    pool_r: int | None = None
    translation: bool = True
    max_iters: int = 2000
    rel_tol: float = 1e-10
    restarts: int = 4
    timing: bool = False

    def __post_init__(self):
        for name in ("n_grid", "m_grid", "r_grid"):
            grid = tuple(int(v) for v in getattr(self, name))
            if not grid:
                raise ValueError(f"{name} must be nonempty")
            if min(grid) < 1:
                raise ValueError(f"{name} values must be positive")
            object.__setattr__(self, name, grid)
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; choose from {REGIMES}")
        if self.proxy_rule not in PROXY_RULES:
            raise ValueError(f"unknown proxy_rule {self.proxy_rule!r}; choose from {PROXY_RULES}")
        if min(self.n_grid) < 2:
            raise ValueError("every grid point needs at least two models")
        if self.regime == "fixed_nm" and (len(self.n_grid) != 1 or len(self.m_grid) != 1):
            raise ValueError("fixed_nm needs singleton n and m grids")
        if self.regime == "growing_m" and len(self.n_grid) != 1:
            raise ValueError("growing_m needs a singleton n grid")
        if int(self.bootstrap_reps) < 1:
            raise ValueError("bootstrap_reps must be positive")
        if self.pool_r is not None and int(self.pool_r) < 1:
            raise ValueError("pool_r must be positive")
        if self.latent.q > self.s:
            raise ValueError(f"s={self.s} must be at least the latent dimension q={self.latent.q}")

    @property
    def pool(self) -> tuple[int, int, int]:
        return max(self.n_grid), max(self.m_grid), int(self.pool_r or max(self.r_grid))

    def grid(self) -> list[tuple[int, int, int]]:
        return list(itertools.product(self.n_grid, self.m_grid, self.r_grid))

    def solver(self, seed: int) -> SolverSettings:
        return SolverSettings(self.dim, self.max_iters, self.rel_tol, self.restarts, seed)


@dataclass(frozen=True)
class TrialResult:
    regime: str
    n: int
    m: int
    r: int
    bootstrap: int
    avg_l2_err: float
    two_inf_err: float
    stress: float
    condition_ratio: float
    wall_time: float = 0.0


def condition_ratio(gamma_row_means: Sequence[float], r: int) -> float:
    """Worst-model value of ``((1/m) sum_j gamma_ij) / r``.

    Consistency is guaranteed when this tends to zero as r grows.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    means = np.asarray(gamma_row_means, dtype=float)
    return float(np.max(means) / r) if means.size else 0.0


@dataclass
class _Pool:
    config: RegimeConfig
    coll: SyntheticCollection
    noise: np.ndarray
    reference: np.ndarray = field(default=None)


def _build_pool(config: RegimeConfig) -> _Pool:
    n_pool, m_pool, r_pool = config.pool
    coll = make_collection(n_pool, m_pool, r_pool, config.s, config.latent, config.gamma, config.seed)
    noise = replicate_noise(config.seed, range(n_pool), range(m_pool), r_pool, config.s)
    pool = _Pool(config, coll, noise)
    ref_seed = int(substream(config.seed, _REFERENCE_STREAM).integers(2**63))
    if config.proxy_rule == "exact_limit":
        target = exact_limit_matrix(coll)
    else:
        xbar = _sample_means(pool, np.arange(n_pool), np.arange(m_pool), None, r_pool)
        target = DissimilarityMatrix(coll.model_ids, scaled_frobenius_distances(xbar))
    pool.reference = mds(target, config.solver(ref_seed)).points
    return pool


def _sample_means(pool: _Pool, model_idx, query_idx, rep_idx, r) -> np.ndarray:
    mu = mean_tensor(pool.coll, model_idx, query_idx)
    if rep_idx is None:
        noise_mean = pool.noise[model_idx][:, query_idx].mean(axis=2)
    else:
        noise_mean = pool.noise[model_idx[:, None, None], query_idx[None, :, None], rep_idx].mean(axis=2)
    gamma = pool.config.gamma.value(r)
    return mu + math.sqrt(gamma / pool.config.s) * noise_mean


def _run_trial(pool: _Pool, g: int, point: tuple[int, int, int], b: int) -> TrialResult:
    cfg = pool.config
    n, m, r = point
    n_pool, m_pool, r_pool = cfg.pool
    start = time.perf_counter()
    rng = substream(cfg.seed, _TRIAL_STREAM, g, b)
    model_idx = rng.integers(0, n_pool, n) if cfg.regime == "growing_nm" else np.arange(n_pool)
    query_idx = rng.integers(0, m_pool, m) if cfg.regime != "fixed_nm" else np.arange(m_pool)
    rep_idx = rng.integers(0, r_pool, (len(model_idx), len(query_idx), r))
    solver_seed = int(rng.integers(2**63))
    gamma_rows = np.full(len(model_idx), cfg.gamma.value(r))
    ratio = condition_ratio(gamma_rows, r)
    try:
        xbar = _sample_means(pool, model_idx, query_idx, rep_idx, r)
        labels = tuple(f"model{i}" for i in model_idx)
        target = DissimilarityMatrix(labels, scaled_frobenius_distances(xbar))
        est = mds(target, cfg.solver(solver_seed))
        ref = pool.reference[model_idx]
        l2 = aligned_error(est.points, ref, "avg_l2", cfg.translation)
        tinf = aligned_error(est.points, ref, "two_to_infinity", cfg.translation)
        stress = est.stress
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.warning("trial %s bootstrap %d failed: %s", point, b, exc)
        l2 = tinf = stress = float("nan")
    elapsed = time.perf_counter() - start if cfg.timing else 0.0
    return TrialResult(cfg.regime, n, m, r, b, l2, tinf, stress, ratio, elapsed)


def run_regime(config: RegimeConfig, workers: int = 1) -> list[TrialResult]:
    """Run every (grid point, bootstrap) trial of `config`.

    Output order is grid order (n, then m, then r) with bootstrap index
    innermost, and every trial draws from its own seeded stream, so the result
    list does not depend on `workers`. Wall times are recorded only when
    ``config.timing`` is set; otherwise they are 0 so repeated runs are
    identical.
    """
    pool = _build_pool(config)
    tasks = [(g, point, b) for g, point in enumerate(config.grid()) for b in range(config.bootstrap_reps)]
    if workers <= 1:
        return [_run_trial(pool, *t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda t: _run_trial(pool, *t), tasks))


def reference_configuration(config: RegimeConfig) -> np.ndarray:
    return _build_pool(config).reference.copy()


_AXES = ("n", "m", "r")


def summarize(results: Sequence[TrialResult], metric: str = "avg_l2_err", stat: str = "median") -> dict:
    """Aggregate `metric` over bootstrap reps for each (n, m, r); `stat` is median or mean."""
    agg = {"median": np.median, "mean": np.mean}[stat]
    groups: dict = {}
    for res in results:
        groups.setdefault((res.n, res.m, res.r), []).append(getattr(res, metric))
    return {key: float(agg(vals)) for key, vals in sorted(groups.items())}


def _axis_profile(results, vary, metric):
    if vary not in _AXES:
        raise ValueError(f"vary must be one of {_AXES}")
    summary = summarize(results, metric)
    axis = _AXES.index(vary)
    others = [k for k in range(3) if k != axis]
    best = tuple(max(key[k] for key in summary) for k in others)
    pts = sorted((key[axis], val) for key, val in summary.items() if tuple(key[k] for k in others) == best)
    return np.array([p[0] for p in pts], dtype=float), np.array([p[1] for p in pts])


def trend_spearman(results: Sequence[TrialResult], vary: str = "r", metric: str = "avg_l2_err") -> float:
    """Spearman correlation between `vary` and the median `metric`, other axes at their maxima."""
    x, y = _axis_profile(results, vary, metric)
    if len(x) < 2:
        raise ValueError(f"need at least two distinct {vary} values")
    return float(stats.spearmanr(x, y).statistic)


def loglog_slope(results: Sequence[TrialResult], vary: str = "r", metric: str = "avg_l2_err") -> float:
    """Least-squares slope of log(median error) against log(vary).

    When the other axes vary too, only the results at their maxima are used.
    """
    if vary != "r":
        raise ValueError("loglog_slope only supports vary='r'")
    x, y = _axis_profile(results, vary, metric)
    if len(x) < 3:
        raise ValueError(f"need at least 3 distinct r values, got {len(x)}")
    if np.any(y <= 0):
        raise ValueError("median errors must be positive to take logs")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


@dataclass(frozen=True)
class TailBoundRow:
    model: int
    r: int
    eps: float
    empirical: float
    bound: float
    stderr: float

    @property
    def informative(self) -> bool:
        return self.bound < 1.0

    @property
    def ok(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.stderr


def tail_bound_check(spec: CollectionSpec, eps_grid: Sequence[float], r_grid: Sequence[int],
                     trials: int = 1000) -> list[TailBoundRow]:
    """Monte Carlo check of ``P[(1/m)||Xbar_i - mu_i||_F > eps] <= sum_j gamma_ij / (r m eps^2)``.

    Each trial draws fresh replicates for every (model, query) pair. The
    standard error is the binomial one at ``min(bound, 1)``, i.e. under the
    hypothesis that the bound is attained.
    """
    if trials < 100:
        raise ValueError("tail_bound_check needs at least 100 trials")
    rows = []
    for r in r_grid:
        coll = spec.build(r)
        mu = mean_tensor(coll)
        scale = np.sqrt(coll.gamma / coll.s)[:, :, None]
        devs = np.empty((trials, coll.n))
        for t in range(trials):
            z = substream(spec.seed, _TAIL_STREAM, r, t).standard_normal((coll.n, coll.m, r, coll.s))
            xbar = mu + scale * z.mean(axis=2)
            diff = (xbar - mu).reshape(coll.n, -1)
            devs[t] = np.sqrt(np.einsum("ij,ij->i", diff, diff)) / coll.m
        for eps in eps_grid:
            exceed = np.mean(devs > eps, axis=0)
            for i in range(coll.n):
                bound = float(coll.gamma[i].sum() / (r * coll.m * eps * eps))
                p = min(bound, 1.0)
                rows.append(TailBoundRow(i, int(r), float(eps), float(exceed[i]), bound,
                                         math.sqrt(p * (1 - p) / trials)))
    return rows

