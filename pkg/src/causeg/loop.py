"""Iterative causal segmentation: alternate CATE estimation and CATE-based
segmentation until segment movement drops to the ATE standard error times the
population size."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .causal import (
    AteEstimate,
    CateModel,
    ate_from_cate,
    compute_ate,
    fit_s_learner,
    fit_t_learner,
    predict_cate,
    segment_indicators,
)
from .dataset import Dataset
from .errors import ValidationError
from .learners import RIDGE_LAMBDA
from .segmentation import SegmentAssignment, kmeans, segment_by_cate, segment_movement

INITIAL_SEGMENTATIONS = ("kmeans_on_X", "random", "single_segment")
ATE_PATHS = ("diff_in_means", "mean_cate_bootstrap")


@dataclass(frozen=True)
class LoopConfig:
    k_segments: int = 3
    learner: str = "s"
    degree: int = 2
    lam: float = RIDGE_LAMBDA
    ate_path: str = "mean_cate_bootstrap"
    n_boot: int = 200
    max_iter: int = 50
    seed: int = 0
    initial_segmentation: str = "kmeans_on_X"
    segment_features: bool = True
    segment_role: str = "auto"
    cate_decimals: int | None = 9
    oscillation_window: int = 5

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.k_segments < 2:
            raise ValidationError("k_segments must be >= 2")
        if self.learner not in ("t", "s"):
            raise ValidationError(f"learner must be 't' or 's', got {self.learner!r}")
        if self.degree not in (1, 2):
            raise ValidationError("degree must be 1 or 2")
        if self.ate_path not in ATE_PATHS:
            raise ValidationError(f"ate_path must be one of {ATE_PATHS}")
        if self.initial_segmentation not in INITIAL_SEGMENTATIONS:
            raise ValidationError(f"initial_segmentation must be one of {INITIAL_SEGMENTATIONS}")
        if self.lam < 0:
            raise ValidationError("lam must be >= 0")
        if self.segment_role not in ("auto", "confounder", "modifier"):
            raise ValidationError("segment_role must be 'auto', 'confounder' or 'modifier'")
        if self.learner == "t" and self.segment_role == "confounder":
            raise ValidationError("a T-learner fits each arm separately; segments can only be modifiers")

    @property
    def resolved_segment_role(self) -> str:
        """``auto`` means confounder for the S-learner and modifier for the T-learner."""
        if self.segment_role != "auto":
            return self.segment_role
        return "confounder" if self.learner == "s" else "modifier"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ConvergenceRecord:
    iteration: int
    ate: float
    se: float
    se_ate_ratio_pct: float
    movement_precision: float
    segment_movement: int

    @classmethod
    def build(cls, iteration: int, ate: float, se: float, n_units: int, movement: int) -> "ConvergenceRecord":
        ratio = 100.0 * se / abs(ate) if ate != 0 else math.inf
        return cls(iteration, float(ate), float(se), ratio, float(se) * n_units, int(movement))

    @property
    def converged(self) -> bool:
        return self.segment_movement <= self.movement_precision

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["se_ate_ratio_pct"]):
            d["se_ate_ratio_pct"] = None
        return d


@dataclass(frozen=True, eq=False)
class RunResult:
    final_assignment: SegmentAssignment
    history: tuple
    converged: bool
    final_cate: np.ndarray
    final_model: CateModel = None
    final_segments: np.ndarray = None
    stop_reason: str = "converged"
    ate: AteEstimate = None
    config: LoopConfig = field(default=None, repr=False)

    def history_dict(self) -> dict:
        return {
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "iterations": len(self.history),
            "seed": self.config.seed if self.config else None,
            "config": self.config.to_dict() if self.config else None,
            "final": {"k": self.final_assignment.k, "thresholds": list(self.final_assignment.thresholds)},
            "records": [r.to_dict() for r in self.history],
        }


def initial_assignment(ds: Dataset, cfg: LoopConfig) -> SegmentAssignment:
    k = cfg.k_segments
    if cfg.initial_segmentation == "kmeans_on_X":
        return kmeans(ds.covariates, k, seed=rng.child_seed(cfg.seed, rng.KMEANS_INIT)).assignment
    if cfg.initial_segmentation == "random":
        labels = rng.stream(cfg.seed, rng.INITIAL_SEGMENTS).integers(0, k, ds.n)
        return SegmentAssignment(labels=labels, k=k, method="initial")
    return SegmentAssignment(labels=np.zeros(ds.n, dtype=np.int64), k=k, method="initial")


def _fit(ds, cfg, seg):
    if cfg.learner == "t":
        return fit_t_learner(ds, ds.covariates, cfg.lam, cfg.degree, seg)
    modifier = cfg.resolved_segment_role == "modifier"
    return fit_s_learner(ds, ds.covariates, cfg.lam, cfg.degree, seg, segment_interactions=modifier)


def run_iterative_causal_segmentation(ds: Dataset, cfg: LoopConfig = LoopConfig()) -> RunResult:
    """Run the coupled estimation/segmentation iteration.

    Each pass fits the CATE model on the covariates plus indicators of the
    current segmentation (as confounders or effect modifiers, see
    ``LoopConfig.segment_role``), estimates the ATE and its SE, re-segments units by
    CATE quantile and counts how many units changed segment. The run stops
    when ``movement <= se * N``, at ``max_iter``, or when the assignments
    alternate in a 2-cycle for ``oscillation_window`` consecutive passes.
    Non-convergence is reported through ``converged`` and ``stop_reason``.
    """
    if ds.n_treated == 0 or ds.n_control == 0:
        raise ValidationError("both treatment arms must be non-empty")
    if cfg.k_segments > ds.n:
        raise ValidationError(f"k_segments={cfg.k_segments} exceeds the number of units ({ds.n})")

    prev = initial_assignment(ds, cfg)
    before_prev = None
    history = []
    cycles = 0
    reason = "max_iter"
    converged = False
    for it in range(1, cfg.max_iter + 1):
        use_segments = cfg.segment_features and not (it == 1 and cfg.initial_segmentation == "single_segment")
        seg = segment_indicators(prev.labels, cfg.k_segments) if use_segments else None
        model = _fit(ds, cfg, seg)
        cate = predict_cate(model, ds.covariates, seg)
        if cfg.ate_path == "diff_in_means":
            est = compute_ate(ds)
        else:
            est = ate_from_cate(cate, cfg.n_boot, rng.child_seed(cfg.seed, rng.BOOTSTRAP, it))
        ranked = cate if cfg.cate_decimals is None else np.round(cate, cfg.cate_decimals)
        curr = segment_by_cate(ranked, cfg.k_segments)
        movement = segment_movement(prev, curr, strict=it > 1)
        record = ConvergenceRecord.build(it, est.ate, est.se, ds.n, movement)
        history.append(record)
        if record.converged:
            converged, reason = True, "converged"
            prev = curr
            break
        if before_prev is not None and np.array_equal(curr.labels, before_prev.labels):
            cycles += 1
            if cycles >= cfg.oscillation_window:
                reason = "oscillation"
                prev = curr
                break
        else:
            cycles = 0
        before_prev, prev = prev, curr

    return RunResult(
        final_assignment=prev,
        history=tuple(history),
        converged=converged,
        final_cate=cate,
        final_model=model,
        final_segments=seg,
        stop_reason=reason,
        ate=est,
        config=cfg,
    )


COLUMNS = ("ATE", "SE", "SE-ATE Ratio (%)", "Movement Precision", "Segment Movement")


def format_record(r: ConvergenceRecord, sep: str = "  ") -> str:
    ratio = "nan" if not math.isfinite(r.se_ate_ratio_pct) else f"{r.se_ate_ratio_pct:.3f}"
    return sep.join(
        [f"{r.ate:.3f}", f"{r.se:.3f}", ratio, f"{r.movement_precision:.3f}", str(r.segment_movement)]
    )


def render_convergence_table(history, sep: str = "  ", header: bool = True) -> str:
    """Text table with one row per record, values to 3 decimals."""
    history = list(history)
    if not history:
        raise ValidationError("cannot render an empty history")
    lines = [sep.join(COLUMNS)] if header else []
    lines += [format_record(r, sep) for r in history]
    return "\n".join(lines) + "\n"
