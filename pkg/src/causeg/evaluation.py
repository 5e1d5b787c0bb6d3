"""Targeting-strategy simulation, Qini curves, bootstrap bands and correlation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .dataset import Dataset
from .errors import ValidationError
from .segmentation import kmeans

STRATEGIES = ("causal_effect", "propensity", "kmeans", "random")
DEFAULT_POINTS = 101


@dataclass(frozen=True, eq=False)
class UpliftCurve:
    fractions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.fractions, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if f.shape != v.shape or f.ndim != 1 or f.size < 2:
            raise ValidationError("fractions and values must be equal-length 1-D arrays")
        if f[0] != 0.0 or f[-1] != 1.0 or np.any(np.diff(f) <= 0):
            raise ValidationError("fractions must ascend from 0 to 1")
        object.__setattr__(self, "fractions", f)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class StrategyRanking:
    strategy: str
    order: np.ndarray
    seed: int = 0


def grid(n_points: int = DEFAULT_POINTS) -> np.ndarray:
    if n_points < 2:
        raise ValidationError("n_points must be >= 2")
    return np.linspace(0.0, 1.0, n_points)


def _cuts(n: int, n_points: int) -> np.ndarray:
    # floor(p * n) at p = i / (n_points - 1), in exact integer arithmetic
    return np.arange(n_points, dtype=np.int64) * n // (n_points - 1)


def _vector(a, n, name):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.shape[0] != n:
        raise ValidationError(f"{name} has length {a.shape[0]}, expected {n}")
    return a


def _descending(scores) -> np.ndarray:
    # stable: equal scores keep unit-index order
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def rank_by_strategy(
    ds: Dataset,
    features,
    cate,
    purchase_propensity,
    strategy: str,
    k: int = 3,
    seed: int = 0,
) -> StrategyRanking:
    """Order units for promotion, most preferred first.

    ``kmeans`` clusters ``features`` into ``k`` groups, visits clusters in
    descending mean purchase propensity and shuffles units within a cluster.
    """
    n = ds.n
    cate = _vector(cate, n, "cate")
    prop = _vector(purchase_propensity, n, "purchase_propensity")
    if strategy == "causal_effect":
        order = _descending(cate)
    elif strategy == "propensity":
        order = _descending(prop)
    elif strategy == "random":
        order = rng.stream(seed, rng.SHUFFLE, 0).permutation(n)
    elif strategy == "kmeans":
        F = np.asarray(ds.covariates if features is None else features, dtype=np.float64)
        if F.shape[0] != n:
            raise ValidationError(f"features have {F.shape[0]} rows, expected {n}")
        labels = kmeans(F, k, seed=rng.child_seed(seed, rng.KMEANS_INIT)).assignment.labels
        means = np.array([prop[labels == c].mean() for c in range(k)])
        gen = rng.stream(seed, rng.SHUFFLE, 1)
        parts = [gen.permutation(np.flatnonzero(labels == c)) for c in _descending(means)]
        order = np.concatenate(parts)
    else:
        raise ValidationError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    return StrategyRanking(strategy=strategy, order=np.asarray(order, dtype=np.int64), seed=seed)


def oracle_gain_curve(ranking: StrategyRanking, true_cate, n_points: int = DEFAULT_POINTS) -> UpliftCurve:
    """Cumulative true effect of treating the first ``floor(p*N)`` ranked units."""
    tau = np.asarray(true_cate, dtype=np.float64)
    n = tau.shape[0]
    if ranking.order.shape[0] != n:
        raise ValidationError(f"ranking covers {ranking.order.shape[0]} units, true_cate has {n}")
    prefix = np.concatenate(([0.0], np.cumsum(tau[ranking.order])))
    values = prefix[_cuts(n, n_points)]
    values[0] = 0.0
    values[-1] = tau.sum()
    return UpliftCurve(grid(n_points), values)


def qini_curve(outcome, treatment, scores, n_points: int = DEFAULT_POINTS, normalize: bool = False) -> UpliftCurve:
    """Qini curve of ``scores`` over a grid of population fractions.

    At fraction ``p`` the top ``floor(p*N)`` units by descending score give
    ``sum_T(Y) - sum_C(Y) * n_T / n_C``; the control term is zero while no
    control unit has been reached. ``normalize`` divides by N, giving
    per-capita incremental gain.
    """
    y = np.asarray(outcome, dtype=np.float64).reshape(-1)
    n = y.shape[0]
    t = _vector(treatment, n, "treatment").astype(np.int64)
    s = _vector(scores, n, "scores")
    if not np.any(t == 1) or not np.any(t == 0):
        raise ValidationError("Qini curve needs both treated and control units")
    order = _descending(s)
    prefix = kernels.qini_prefix(y[order], t[order])
    values = prefix[_cuts(n, n_points)]
    if normalize:
        values = values / n
    return UpliftCurve(grid(n_points), values)


def random_baseline(curve: UpliftCurve) -> UpliftCurve:
    """Straight line from 0 to the curve's endpoint: the expected random ranking."""
    return UpliftCurve(curve.fractions, curve.fractions * curve.values[-1])


def qini_coefficient(curve: UpliftCurve, baseline: UpliftCurve | None = None) -> float:
    """Trapezoidal area between ``curve`` and ``baseline`` (random line by default)."""
    baseline = random_baseline(curve) if baseline is None else baseline
    if curve.fractions.shape != baseline.fractions.shape or not np.array_equal(curve.fractions, baseline.fractions):
        raise ValidationError("curve and baseline are on different grids")
    gap = curve.values - baseline.values
    return float(np.sum(np.diff(curve.fractions) * (gap[1:] + gap[:-1]) / 2.0))


area_over_random = qini_coefficient


def _resample(t, n, gen, max_retries):
    for _ in range(max_retries):
        idx = gen.integers(0, n, n)
        tt = t[idx]
        if tt.any() and not tt.all():
            return idx
    raise ValidationError(f"bootstrap resample kept drawing a single arm after {max_retries} tries")


def bootstrap_curves(
    outcome, treatment, scores, n_boot: int, n_points: int, seed: int, normalize: bool = False, max_retries: int = 100
) -> np.ndarray:
    """Qini curves of ``n_boot`` unit resamples, one row per replicate."""
    y = np.asarray(outcome, dtype=np.float64)
    t = np.asarray(treatment, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    n = y.shape[0]
    out = np.empty((n_boot, n_points))
    for b in range(n_boot):
        idx = _resample(t, n, rng.stream(seed, rng.BOOTSTRAP, b), max_retries)
        out[b] = qini_curve(y[idx], t[idx], s[idx], n_points, normalize).values
    return out


def bootstrap_band(
    ds: Dataset,
    scores,
    level: float = 0.90,
    n_boot: int = 200,
    n_points: int = DEFAULT_POINTS,
    seed: int = 0,
    normalize: bool = False,
) -> tuple[UpliftCurve, UpliftCurve]:
    """Pointwise percentile band of the Qini curve under unit resampling."""
    if n_boot < 200:
        raise ValidationError(f"n_boot must be >= 200, got {n_boot}")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    reps = bootstrap_curves(ds.outcome, ds.treatment, _vector(scores, ds.n, "scores"), n_boot, n_points, seed, normalize)
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(reps, [alpha, 1.0 - alpha], axis=0)
    g = grid(n_points)
    return UpliftCurve(g, lower), UpliftCurve(g, upper)


def correlation(a, b) -> float:
    """Pearson correlation coefficient."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ValidationError(f"inputs have lengths {a.size} and {b.size}")
    if a.size < 2:
        raise ValidationError("correlation needs at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    sa = np.sqrt(da @ da)
    sb = np.sqrt(db @ db)
    if sa == 0 or sb == 0:
        raise ValidationError("correlation is undefined for a constant input")
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))


def simulate_strategies(
    ds: Dataset,
    truth,
    cate,
    purchase_propensity,
    k: int = 3,
    n_points: int = DEFAULT_POINTS,
    seed: int = 0,
    features=None,
) -> dict:
    """Gain curve for each of the four targeting strategies.

    With ground truth (``truth`` exposing ``true_cate``) the curves are oracle
    cumulative gains. Without it they are empirical Qini curves of each
    strategy's ranking.
    """
    curves = {}
    for name in STRATEGIES:
        ranking = rank_by_strategy(ds, features, cate, purchase_propensity, name, k, seed)
        if truth is not None:
            curves[name] = oracle_gain_curve(ranking, truth.true_cate, n_points)
        else:
            position_score = np.empty(ds.n)
            position_score[ranking.order] = -np.arange(ds.n, dtype=np.float64)
            curves[name] = qini_curve(ds.outcome, ds.treatment, position_score, n_points)
    return curves


def strategy_summary(curves: dict) -> dict:
    return {name: {"area_over_random": area_over_random(c), "endpoint": float(c.values[-1])} for name, c in curves.items()}
