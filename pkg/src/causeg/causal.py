"""ATE and CATE estimation with S- and T-learners over linear base models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .dataset import Dataset
from .errors import ValidationError
from .learners import (
    LOGISTIC_LAMBDA,
    RIDGE_LAMBDA,
    LinearModel,
    expand_features,
    fit_logistic,
    fit_ridge,
    predict,
)


@dataclass(frozen=True, eq=False)
class CateModel:
    """A fitted meta-learner.

    The base design is ``expand_features(features, degree)`` followed by the
    optional segment indicator columns, which are never expanded. A T-learner
    holds one ridge model per arm, so segments act as effect modifiers. An
    S-learner holds one pooled model over
    ``[expanded | segments | A | A * expanded | A * segments]``; the
    ``A * expanded`` block is dropped when ``interactions`` is false and the
    ``A * segments`` block is present only when ``segment_interactions`` is
    true. Without it, segments enter as confounders: they adjust the outcome
    level but do not modify the effect directly.
    """

    kind: str
    feature_degree: int
    n_features: int
    n_segment_columns: int
    design_means: np.ndarray
    control_model: LinearModel = None
    treated_model: LinearModel = None
    pooled_model: LinearModel = None
    interactions: bool = True
    segment_interactions: bool = False

    @property
    def segment_features_included(self) -> bool:
        return self.n_segment_columns > 0

    @property
    def design_width(self) -> int:
        return self.design_means.shape[0]


@dataclass(frozen=True)
class AteEstimate:
    ate: float
    se: float
    method: str

    def to_dict(self) -> dict:
        return {"ate": self.ate, "se": self.se, "method": self.method}


def design_matrix(features, degree: int = 1, segments=None) -> np.ndarray:
    E = expand_features(features, degree)
    if segments is None:
        return E
    S = np.asarray(segments, dtype=np.float64)
    if S.ndim == 1:
        S = S[:, None]
    if S.shape[0] != E.shape[0]:
        raise ValidationError(f"segment indicators have {S.shape[0]} rows, features have {E.shape[0]}")
    return np.hstack([E, S])


def segment_indicators(labels, k: int) -> np.ndarray:
    """Indicator columns for segments ``1..k-1``; segment 0 is the reference level."""
    labels = np.asarray(labels)
    return (labels[:, None] == np.arange(1, k)[None, :]).astype(np.float64)


def _check_inputs(ds: Dataset, features):
    F = np.asarray(features, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[0] != ds.n:
        raise ValidationError(f"features have {F.shape[0]} rows, dataset has {ds.n} units")
    if ds.n_treated == 0 or ds.n_control == 0:
        raise ValidationError("both treatment arms must be non-empty")
    return F


def _n_seg(segments) -> int:
    if segments is None:
        return 0
    s = np.asarray(segments)
    return 1 if s.ndim == 1 else s.shape[1]


def fit_t_learner(ds: Dataset, features=None, lam: float = RIDGE_LAMBDA, degree: int = 1, segments=None) -> CateModel:
    """One ridge model on control rows and one on treated rows."""
    F = _check_inputs(ds, ds.covariates if features is None else features)
    D = design_matrix(F, degree, segments)
    treated = ds.treatment == 1
    return CateModel(
        kind="t_learner",
        feature_degree=degree,
        n_features=F.shape[1],
        n_segment_columns=_n_seg(segments),
        design_means=D.mean(axis=0),
        control_model=fit_ridge(D[~treated], ds.outcome[~treated], lam),
        treated_model=fit_ridge(D[treated], ds.outcome[treated], lam),
    )


def _s_design(D, a, n_expanded, interactions, segment_interactions):
    a = np.asarray(a, dtype=np.float64)[:, None]
    E, S = D[:, :n_expanded], D[:, n_expanded:]
    blocks = [D, a]
    if interactions:
        blocks.append(a * E)
    if segment_interactions and S.shape[1]:
        blocks.append(a * S)
    return np.hstack(blocks)


def fit_s_learner(
    ds: Dataset,
    features=None,
    lam: float = RIDGE_LAMBDA,
    degree: int = 1,
    segments=None,
    interactions: bool = True,
    segment_interactions: bool = False,
) -> CateModel:
    """A single ridge model with the treatment flag (and its interactions) as inputs."""
    F = _check_inputs(ds, ds.covariates if features is None else features)
    D = design_matrix(F, degree, segments)
    n_seg = _n_seg(segments)
    X = _s_design(D, ds.treatment, D.shape[1] - n_seg, interactions, segment_interactions)
    return CateModel(
        kind="s_learner",
        feature_degree=degree,
        n_features=F.shape[1],
        n_segment_columns=n_seg,
        design_means=D.mean(axis=0),
        pooled_model=fit_ridge(X, ds.outcome, lam),
        interactions=interactions,
        segment_interactions=segment_interactions,
    )


def _design_for(model: CateModel, features, segments) -> np.ndarray:
    F = np.asarray(features, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[1] != model.n_features:
        raise ValidationError(f"model expects {model.n_features} features, got {F.shape[1]}")
    if _n_seg(segments) != model.n_segment_columns:
        raise ValidationError(
            f"model expects {model.n_segment_columns} segment columns, got {_n_seg(segments)}"
        )
    return design_matrix(F, model.feature_degree, segments)


def _counterfactual(model: CateModel, D: np.ndarray, arm: float) -> np.ndarray:
    n_exp = D.shape[1] - model.n_segment_columns
    return _s_design(D, np.full(D.shape[0], arm), n_exp, model.interactions, model.segment_interactions)


def cate_from_design(model: CateModel, D: np.ndarray) -> np.ndarray:
    if model.kind == "t_learner":
        return predict(model.treated_model, D) - predict(model.control_model, D)
    return predict(model.pooled_model, _counterfactual(model, D, 1.0)) - predict(
        model.pooled_model, _counterfactual(model, D, 0.0)
    )


def effect_coefficients(model: CateModel) -> tuple[np.ndarray, float]:
    """CATE as a linear function of the base design: ``(weights, intercept)``.

    Both learners are linear in the base design, so
    ``predict_cate == design @ weights + intercept`` up to rounding.
    """
    if model.kind == "t_learner":
        return (
            model.treated_model.weights - model.control_model.weights,
            model.treated_model.intercept - model.control_model.intercept,
        )
    w = model.pooled_model.weights
    p = model.design_width
    n_exp = p - model.n_segment_columns
    pos = p + 1
    effect = np.zeros(p)
    if model.interactions:
        effect[:n_exp] = w[pos : pos + n_exp]
        pos += n_exp
    if model.segment_interactions and model.n_segment_columns:
        effect[n_exp:] = w[pos : pos + model.n_segment_columns]
    return effect, float(w[p])


def predict_cate(model: CateModel, features, segments=None) -> np.ndarray:
    """Per-unit effect: treated-arm prediction minus control-arm prediction."""
    return cate_from_design(model, _design_for(model, features, segments))


def compute_ate(ds: Dataset) -> AteEstimate:
    """Difference in arm means with the unpooled (Welch) standard error."""
    y1 = ds.outcome[ds.treatment == 1]
    y0 = ds.outcome[ds.treatment == 0]
    if len(y1) < 2 or len(y0) < 2:
        raise ValidationError("each arm needs at least 2 units for a standard error")
    se = np.sqrt(y1.var(ddof=1) / len(y1) + y0.var(ddof=1) / len(y0))
    return AteEstimate(ate=float(y1.mean() - y0.mean()), se=float(se), method="diff_in_means")


def ate_from_cate(cate, n_boot: int = 200, seed: int = 0) -> AteEstimate:
    """Mean CATE, with the standard deviation of bootstrap means as its SE.

    Replicate ``b`` resamples with its own stream derived from ``(seed, b)``,
    so the result does not depend on evaluation order.
    """
    cate = np.asarray(cate, dtype=np.float64).reshape(-1)
    n = cate.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 CATE values")
    if n_boot < 100:
        raise ValidationError(f"n_boot must be >= 100 for a stable SE, got {n_boot}")
    ate = float(cate.mean())
    if np.ptp(cate) == 0:
        return AteEstimate(ate=float(cate[0]), se=0.0, method="mean_cate_bootstrap")
    means = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.stream(seed, rng.BOOTSTRAP, b).integers(0, n, n)
        means[b] = cate[idx].mean()
    return AteEstimate(ate=ate, se=float(means.std(ddof=1)), method="mean_cate_bootstrap")


def fit_propensity_outcome(
    ds: Dataset, features=None, lam: float | None = None, degree: int = 1, link: str = "auto"
) -> LinearModel:
    """Purchase propensity: outcome level given X, fitted on control units only.

    ``link="auto"`` picks logistic regression when control outcomes are all
    0/1 and ridge regression otherwise.
    """
    F = np.asarray(ds.covariates if features is None else features, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[0] != ds.n:
        raise ValidationError(f"features have {F.shape[0]} rows, dataset has {ds.n} units")
    control = ds.treatment == 0
    if not control.any():
        raise ValidationError("control arm is empty")
    D = expand_features(F[control], degree)
    y = ds.outcome[control]
    if link == "auto":
        link = "logit" if np.all((y == 0) | (y == 1)) else "identity"
    if link == "logit":
        return fit_logistic(D, y, LOGISTIC_LAMBDA if lam is None else lam)
    if link != "identity":
        raise ValidationError(f"unknown link {link!r}")
    return fit_ridge(D, y, RIDGE_LAMBDA if lam is None else lam)


def fit_assignment_propensity(ds: Dataset, features=None, lam: float = LOGISTIC_LAMBDA, degree: int = 1) -> LinearModel:
    """Logistic model of treatment given X, for overlap diagnostics only."""
    F = _check_inputs(ds, ds.covariates if features is None else features)
    return fit_logistic(expand_features(F, degree), ds.treatment.astype(np.float64), lam)
