"""Seeded synthetic worlds with known treatment effects.

Covariates are independent Uniform(0, 1). With ``rho`` the
baseline/effect correlation knob, ``s`` the effect scale and ``h`` the
heterogeneity::

    baseline(x) = 0.2 + 0.5*x1 + 0.3*x2 + 0.4*x1*x2
    z_b(x)      = (baseline(x) - E[baseline]) / sd[baseline]
    z_e(x)      = sqrt(12) * (x3 - 0.5)
    cate(x)     = s * (0.5 + 0.3*h * (rho*z_b(x) + sqrt(1 - rho^2)*z_e(x)))

``z_b`` and ``z_e`` have zero mean and unit variance and are independent, so
``corr(baseline, cate) = rho`` exactly in the population and the mean effect is
``0.5 * s``. Assignment is either Bernoulli(p) or confounded through
``sigmoid(3*(x1 - 0.5) - 3*(x2 - 0.5))``, which stays inside (0.047, 0.953).
Outcomes are ``baseline + A*cate + Normal(0, noise_sd)``.

Covariates, assignment and noise each draw from their own seeded stream.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .dataset import Dataset
from .errors import ValidationError

_B0, _B1, _B2, _B12 = 0.2, 0.5, 0.3, 0.4
CONFOUNDING_STRENGTH = 3.0


@dataclass(frozen=True)
class SynthConfig:
    n_units: int = 20_000
    n_features: int = 10
    noise_sd: float = 0.5
    effect_scale: float = 1.0
    baseline_effect_correlation: float = -0.4
    heterogeneity: float = 1.0
    assignment: str = "randomized"
    treat_prob: float = 0.5

    def __post_init__(self):
        if int(self.n_units) < 10:
            raise ValidationError("n_units must be >= 10")
        if int(self.n_features) < 3:
            raise ValidationError("n_features must be >= 3")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise ValidationError("noise_sd must be finite and >= 0")
        if not math.isfinite(self.effect_scale) or not math.isfinite(self.heterogeneity):
            raise ValidationError("effect_scale and heterogeneity must be finite")
        if not -1.0 <= self.baseline_effect_correlation <= 1.0:
            raise ValidationError("baseline_effect_correlation must lie in [-1, 1]")
        if self.assignment not in ("randomized", "confounded"):
            raise ValidationError(f"unknown assignment policy {self.assignment!r}")
        if not 0.0 < self.treat_prob < 1.0:
            raise ValidationError("treat_prob must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TrueEffects:
    true_cate: np.ndarray
    true_baseline: np.ndarray
    true_assignment_propensity: np.ndarray


def baseline_moments() -> tuple[float, float]:
    """Exact mean and standard deviation of the baseline under the covariate law."""
    mean = _B0 + _B1 / 2 + _B2 / 2 + _B12 / 4
    var = (_B1 + _B12 / 2) ** 2 / 12 + (_B2 + _B12 / 2) ** 2 / 12 + _B12**2 / 144
    return mean, math.sqrt(var)


def expected_cate(cfg: SynthConfig) -> float:
    return 0.5 * cfg.effect_scale


def baseline_fn(X: np.ndarray) -> np.ndarray:
    return _B0 + _B1 * X[:, 0] + _B2 * X[:, 1] + _B12 * X[:, 0] * X[:, 1]


def cate_fn(X: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    mean, sd = baseline_moments()
    z_b = (baseline_fn(X) - mean) / sd
    z_e = math.sqrt(12.0) * (X[:, 2] - 0.5)
    rho = cfg.baseline_effect_correlation
    mix = rho * z_b + math.sqrt(max(0.0, 1.0 - rho * rho)) * z_e
    return cfg.effect_scale * (0.5 + 0.3 * cfg.heterogeneity * mix)


def assignment_propensity(X: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    if cfg.assignment == "randomized":
        return np.full(X.shape[0], cfg.treat_prob)
    z = CONFOUNDING_STRENGTH * ((X[:, 0] - 0.5) - (X[:, 1] - 0.5))
    return 1.0 / (1.0 + np.exp(-z))


def generate(cfg: SynthConfig, seed: int) -> tuple[Dataset, TrueEffects]:
    n, d = int(cfg.n_units), int(cfg.n_features)
    X = rng.stream(seed, rng.COVARIATES).random((n, d))
    mu0 = baseline_fn(X)
    tau = cate_fn(X, cfg)
    e = assignment_propensity(X, cfg)
    A = (rng.stream(seed, rng.ASSIGNMENT).random(n) < e).astype(np.int64)
    noise = rng.stream(seed, rng.NOISE).standard_normal(n) * cfg.noise_sd
    Y = mu0 + A * tau + noise
    ds = Dataset(unit_ids=np.arange(n), covariates=X, treatment=A, outcome=Y)
    return ds, TrueEffects(true_cate=tau, true_baseline=mu0, true_assignment_propensity=e)
