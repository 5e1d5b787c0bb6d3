"""Exact SHAP attributions for linear models and linear CATE models.

For a linear model ``f(x) = w.x + b`` with independent features the Shapley
value of feature ``j`` against a background point ``m`` is ``w_j * (x_j - m_j)``,
and the attributions plus ``f(m)`` add up to ``f(x)`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .causal import CateModel, _design_for, effect_coefficients
from .errors import ValidationError
from .learners import LinearModel, _as_matrix, expanded_names, predict


@dataclass(frozen=True, eq=False)
class Attribution:
    per_unit: np.ndarray
    base_value: float
    feature_names: tuple
    background: np.ndarray
    space: str = "outcome"

    def totals(self) -> np.ndarray:
        """``base_value`` plus the row sums: the explained prediction per unit."""
        return self.base_value + self.per_unit.sum(axis=1)

    def mean_abs(self) -> np.ndarray:
        return np.abs(self.per_unit).mean(axis=0)


def _names(names, d):
    if names is None:
        return tuple(f"f{j}" for j in range(d))
    names = tuple(names)
    if len(names) != d:
        raise ValidationError(f"{len(names)} feature names for {d} columns")
    return names


def _background(background, default, d):
    bg = np.asarray(default if background is None else background, dtype=np.float64).reshape(-1)
    if bg.shape[0] != d:
        raise ValidationError(f"background has {bg.shape[0]} entries, model has {d} features")
    return bg


def shap_linear(model: LinearModel, X, background_means=None, feature_names=None) -> Attribution:
    """Per-unit contributions ``w_j * (x_j - background_j)``.

    The background defaults to the model's training means. Logit-link models
    are attributed in log-odds space, flagged by ``space="log_odds"``.
    """
    X = _as_matrix(X)
    if X.shape[1] != model.d:
        raise ValidationError(f"model expects {model.d} columns, got {X.shape[1]}")
    bg = _background(background_means, model.feature_means, model.d)
    phi = model.weights * (X - bg)
    base = float(bg @ model.weights + model.intercept)
    if model.link == "identity":
        return Attribution(phi, base, _names(feature_names, model.d), bg, "outcome")
    return Attribution(phi, base, _names(feature_names, model.d), bg, "log_odds")


def design_names(model: CateModel, covariate_names) -> tuple:
    names = expanded_names(covariate_names, model.feature_degree)
    names += [f"segment_{j}" for j in range(1, model.n_segment_columns + 1)]
    return tuple(names)


def shap_cate(model: CateModel, features, segments=None, background_means=None, feature_names=None) -> Attribution:
    """Attributions of per-unit CATE over the model's design columns.

    For a T-learner this is the treated-arm attribution minus the control-arm
    attribution against a shared background (the pooled design means by
    default). For an S-learner the pooled model is differenced between the
    treated and control counterfactual inputs, which leaves the treatment
    interaction weights. Either way the attributions plus ``base_value``
    reproduce :func:`causeg.causal.predict_cate`.
    """
    D = _design_for(model, features, segments)
    bg = _background(background_means, model.design_means, model.design_width)
    names = _names(feature_names, model.design_width)
    if model.kind == "t_learner":
        treated = shap_linear(model.treated_model, D, bg)
        control = shap_linear(model.control_model, D, bg)
        return Attribution(treated.per_unit - control.per_unit, treated.base_value - control.base_value, names, bg)
    w, b = effect_coefficients(model)
    return Attribution(w * (D - bg), float(b + bg @ w), names, bg)


def permutation_importance(model: LinearModel, X, y, n_repeats: int = 5, seed: int = 0) -> np.ndarray:
    """Mean increase in squared error when one column at a time is shuffled."""
    if n_repeats < 1:
        raise ValidationError("n_repeats must be >= 1")
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    base = np.mean((predict(model, X) - y) ** 2)
    n, d = X.shape
    out = np.zeros(d)
    for j in range(d):
        for r in range(n_repeats):
            perm = rng.stream(seed, rng.PERMUTATION, j, r).permutation(n)
            Xp = X.copy()
            Xp[:, j] = X[perm, j]
            out[j] += np.mean((predict(model, Xp) - y) ** 2) - base
    return out / n_repeats
