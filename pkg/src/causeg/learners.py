"""Linear base learners: closed-form ridge and L2-penalised logistic regression."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError

RIDGE_LAMBDA = 1e-6
LOGISTIC_LAMBDA = 1e-3


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    intercept: float
    regularization: float
    link: str = "identity"
    feature_means: np.ndarray = None
    n_iter: int = 0
    objective_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.intercept):
            raise NumericalError("model coefficients are not finite")
        if self.regularization < 0:
            raise ValidationError("regularization must be >= 0")
        if self.link not in ("identity", "logit"):
            raise ValidationError(f"unknown link {self.link!r}")
        means = np.zeros_like(w) if self.feature_means is None else np.array(self.feature_means, dtype=np.float64)
        w.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_means", means)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "intercept": self.intercept,
            "lambda": self.regularization,
            "link": self.link,
            "feature_means": [float(v) for v in self.feature_means],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            intercept=doc["intercept"],
            regularization=doc["lambda"],
            link=doc["link"],
            feature_means=np.asarray(doc["feature_means"], dtype=np.float64),
        )


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValidationError("feature matrix must be 2-D")
    return X


def fit_ridge(X, y, lam: float = RIDGE_LAMBDA) -> LinearModel:
    """Minimise ``||y - Xw - b||^2 + lam * ||w||^2`` with an unpenalised intercept.

    Solved through the normal equations on column-centred data.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    if n < 1 or y.shape[0] != n:
        raise ValidationError(f"need matching non-empty X ({n} rows) and y ({y.shape[0]})")
    if lam < 0:
        raise ValidationError("lambda must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    gram = Xc.T @ Xc
    gram[np.diag_indices(d)] += lam
    if d == 0:
        w = np.zeros(0)
    else:
        if lam == 0 and np.linalg.cond(gram) > 1e12:
            raise NumericalError("normal equations are singular; use lambda > 0")
        try:
            w = np.linalg.solve(gram, Xc.T @ (y - y_mean))
        except np.linalg.LinAlgError:
            raise NumericalError("normal equations are singular; use lambda > 0") from None
    return LinearModel(weights=w, intercept=y_mean - x_mean @ w, regularization=lam, feature_means=x_mean)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_objective(X, y, weights, intercept, lam) -> float:
    """Penalised log-likelihood ``sum(y*eta - log(1+exp(eta))) - lam/2 * ||w||^2``."""
    eta = X @ weights + intercept
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * lam * weights @ weights)


def logistic_gradient(X, y, weights, intercept, lam):
    """Gradient of :func:`logistic_objective` as ``(d/dw, d/db)``."""
    resid = y - _sigmoid(X @ weights + intercept)
    return X.T @ resid - lam * weights, float(resid.sum())


def fit_logistic(X, y, lam: float = LOGISTIC_LAMBDA, tol: float = 1e-8, max_iter: int = 100) -> LinearModel:
    """Fit an L2-penalised logistic regression by IRLS (Newton steps).

    Each step is halved until the penalised log-likelihood does not decrease,
    so the objective trace is monotone. Convergence is judged on the per-row
    gradient (largest component divided by ``n``) so that ``tol`` means the same
    thing at any sample size. Raises ``ConvergenceError`` when it is still above
    ``tol`` after ``max_iter`` steps,
    or when ``lam = 0`` and the labels are perfectly separable.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n, d = X.shape
    if y.shape[0] != n or n < 1:
        raise ValidationError(f"need matching non-empty X ({n} rows) and y ({y.shape[0]})")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("logistic regression needs binary labels")
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    if lam < 0:
        raise ValidationError("lambda must be >= 0")

    A = np.hstack([X, np.ones((n, 1))])
    penalty = np.full(d + 1, lam)
    penalty[-1] = 0.0
    beta = np.zeros(d + 1)
    obj = logistic_objective(X, y, beta[:-1], beta[-1], lam)
    trace = [obj]
    grad_norm = np.inf
    for it in range(max_iter + 1):
        p = _sigmoid(A @ beta)
        grad = A.T @ (y - p) - penalty * beta
        grad_norm = float(np.max(np.abs(grad))) / n
        if grad_norm <= tol:
            eta = A @ beta
            if lam == 0 and np.all((eta > 0) == (y == 1)):
                # a stationary point that classifies every row correctly means the
                # data are separable and the unpenalised optimum is at infinity
                raise ConvergenceError(
                    "labels are perfectly separable; the unpenalised fit diverges (use lambda > 0)",
                    grad_norm=grad_norm,
                )
            return LinearModel(
                weights=beta[:-1],
                intercept=beta[-1],
                regularization=lam,
                link="logit",
                feature_means=X.mean(axis=0),
                n_iter=it,
                objective_trace=tuple(trace),
            )
        if it == max_iter:
            break
        wts = p * (1.0 - p)
        hess = (A * wts[:, None]).T @ A
        hess[np.diag_indices(d + 1)] += penalty
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta + t * step
            cand_obj = logistic_objective(X, y, cand[:-1], cand[-1], lam)
            if cand_obj >= obj or t < 1e-10:
                break
            t *= 0.5
        if cand_obj < obj:
            break  # no ascent direction left at machine precision
        beta, obj = cand, cand_obj
        trace.append(obj)
    raise ConvergenceError(f"logistic regression did not converge in {max_iter} iterations", grad_norm=grad_norm)


def predict(model: LinearModel, X) -> np.ndarray:
    """Identity link gives ``Xw + b``; logit link gives ``sigmoid(Xw + b)``."""
    X = _as_matrix(X)
    if X.shape[1] != model.d:
        raise ValidationError(f"model expects {model.d} columns, got {X.shape[1]}")
    eta = X @ model.weights + model.intercept
    if model.link == "logit":
        return _sigmoid(eta)
    return eta


def expand_features(X, degree: int = 1) -> np.ndarray:
    """Polynomial feature map.

    Degree 2 appends all squares and then all pairwise products ``x_i * x_j``
    (``i < j``, lexicographic), after the original columns.
    """
    X = _as_matrix(X)
    if degree == 1:
        return X
    if degree != 2:
        raise ValidationError(f"degree must be 1 or 2, got {degree}")
    d = X.shape[1]
    pairs = list(combinations(range(d), 2))
    cols = [X, X**2]
    if pairs:
        i, j = np.array(pairs).T
        cols.append(X[:, i] * X[:, j])
    return np.hstack(cols)


def expanded_names(names, degree: int = 1) -> list:
    names = list(names)
    if degree == 1:
        return names
    return names + [f"{n}^2" for n in names] + [f"{a}*{b}" for a, b in combinations(names, 2)]
