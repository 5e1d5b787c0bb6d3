"""Command-line entry point: ``causeg {synth,run,simulate,evaluate,explain}``.

Exit codes: 0 success, 2 configuration error, 3 validation error,
4 numerical or convergence error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, kernels, rng
from .causal import fit_assignment_propensity, fit_propensity_outcome, predict_cate
from .config import RunConfig, load_config
from .dataset import Dataset, load_csv, overlap_report, positivity_trim, save_csv
from .errors import CausegError, ConfigError, ValidationError
from .evaluation import (
    bootstrap_band,
    bootstrap_curves,
    correlation,
    qini_coefficient,
    qini_curve,
    simulate_strategies,
    strategy_summary,
    UpliftCurve,
)
from .explain import design_names, shap_cate
from .learners import predict
from .loop import render_convergence_table, run_iterative_causal_segmentation
from .synth import generate

log = logging.getLogger("causeg")

PREFLIGHT = """\
preflight: two identification assumptions cannot be checked from data.
  no interference: keep the measurement window short enough that one unit's
    promotion cannot change another unit's outcome.
  consistency: every treated unit must receive the same version of the
    promotion; a new campaign needs its own analysis.
  Overlap is checked (overlap.json); ignorability rests on the covariates."""


class Outputs:
    """Writes artifacts and records them, with provenance, in manifest.json."""

    def __init__(self, cfg: RunConfig, command: str):
        self.dir = Path(cfg.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.provenance = {
            "artifact_version": __version__,
            "config_hash": cfg.digest(),
            "seed": cfg.seed,
            "command": command,
        }
        self.files = {}

    def _record(self, name: str) -> Path:
        path = self.dir / name
        self.files[name] = path
        return path

    def json(self, name: str, doc: dict) -> None:
        doc = {"provenance": self.provenance, **doc}
        self._record(name).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")

    def csv(self, name: str, header, rows) -> None:
        with self._record(name).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def dataset(self, name: str, ds: Dataset) -> None:
        save_csv(ds, self._record(name))

    def finish(self) -> None:
        digests = {
            name: hashlib.sha256(path.read_bytes()).hexdigest() for name, path in sorted(self.files.items())
        }
        doc = {**self.provenance, "files": digests}
        (self.dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _fmt(v) -> str:
    return repr(float(v))


def load_data(cfg: RunConfig):
    """Dataset plus ground truth (``None`` for CSV input)."""
    if cfg.input.source == "synthetic":
        return generate(cfg.synthetic, cfg.seed)
    path = Path(cfg.input.path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}", key="input.path")
    return load_csv(path, cfg.input.schema()), None


def prepare(cfg: RunConfig, out: Outputs | None, notice: bool = True):
    """Load data, report overlap, trim when configured."""
    if notice:
        print(PREFLIGHT, file=sys.stderr)
    ds, truth = load_data(cfg)
    lo, hi = cfg.input.trim if cfg.input.trim is not None else (0.05, 0.95)
    propensity = predict(fit_assignment_propensity(ds), ds.covariates)
    report = overlap_report(ds, propensity, lo, hi)
    if out is not None:
        out.json("overlap.json", {"lo": lo, "hi": hi, "trimmed": cfg.input.trim is not None, **report.to_dict()})
    if report.violated:
        log.info("overlap: %d units below %.3f, %d above %.3f", report.n_below_lo, lo, report.n_above_hi, hi)
    if cfg.input.trim is not None:
        keep = (propensity >= lo) & (propensity <= hi)
        ds = positivity_trim(ds, propensity, lo, hi)
        if truth is not None:
            truth = type(truth)(
                truth.true_cate[keep], truth.true_baseline[keep], truth.true_assignment_propensity[keep]
            )
    return ds, truth


def cmd_synth(cfg: RunConfig) -> None:
    if cfg.input.source != "synthetic":
        raise ConfigError("the synth command needs input.source = synthetic", key="input.source")
    out = Outputs(cfg, "synth")
    ds, truth = generate(cfg.synthetic, cfg.seed)
    out.dataset("dataset.csv", ds)
    out.csv(
        "truth.csv",
        ["unit_id", "true_cate", "true_baseline", "true_propensity"],
        (
            [int(i), _fmt(c), _fmt(b), _fmt(p)]
            for i, c, b, p in zip(
                ds.unit_ids, truth.true_cate, truth.true_baseline, truth.true_assignment_propensity
            )
        ),
    )
    out.finish()


def _write_run(out: Outputs, ds: Dataset, result) -> None:
    out.json("history.json", result.history_dict())
    out.csv("segments.csv", ["unit_id", "segment"], ([int(i), int(s)] for i, s in zip(ds.unit_ids, result.final_assignment.labels)))
    out.json("segments.json", result.final_assignment.to_dict())
    out.csv("cate.csv", ["unit_id", "cate"], ([int(i), _fmt(c)] for i, c in zip(ds.unit_ids, result.final_cate)))
    m = result.final_model
    models = {"kind": m.kind, "feature_degree": m.feature_degree, "n_segment_columns": m.n_segment_columns}
    if m.kind == "t_learner":
        models.update(control=m.control_model.to_dict(), treated=m.treated_model.to_dict())
    else:
        models.update(pooled=m.pooled_model.to_dict(), segment_interactions=m.segment_interactions)
    out.json("model.json", models)


def cmd_run(cfg: RunConfig) -> None:
    out = Outputs(cfg, "run")
    ds, _ = prepare(cfg, out)
    result = run_iterative_causal_segmentation(ds, cfg.loop)
    _write_run(out, ds, result)
    out.finish()
    sys.stdout.write(render_convergence_table(result.history))
    if not result.converged:
        log.warning("loop stopped without converging (%s)", result.stop_reason)


def cmd_simulate(cfg: RunConfig) -> None:
    out = Outputs(cfg, "simulate")
    ds, truth = prepare(cfg, out)
    result = run_iterative_causal_segmentation(ds, cfg.loop)
    purchase = predict(fit_propensity_outcome(ds), ds.covariates)
    curves = simulate_strategies(
        ds, truth, result.final_cate, purchase, cfg.eval.k_for_kmeans_strategy, cfg.eval.n_points, cfg.seed
    )
    rows = []
    for name, curve in curves.items():
        rows += [[name, _fmt(f), _fmt(v), "", ""] for f, v in zip(curve.fractions, curve.values)]
    out.csv("curves.csv", ["strategy", "fraction", "value", "lower", "upper"], rows)
    qini = qini_curve(ds.outcome, ds.treatment, result.final_cate, cfg.eval.n_points)
    summary = {
        "mode": "oracle" if truth is not None else "empirical_qini",
        "areas_over_random": {k: v["area_over_random"] for k, v in strategy_summary(curves).items()},
        "qini_coefficients": {"cate": qini_coefficient(qini)},
        "correlation": {"purchase_propensity_vs_cate": correlation(purchase, result.final_cate)},
        "loop": {"converged": result.converged, "iterations": len(result.history)},
    }
    if truth is not None:
        summary["correlation"]["purchase_propensity_vs_true_cate"] = correlation(purchase, truth.true_cate)
        summary["mean_true_cate"] = float(truth.true_cate.mean())
    out.json("summary.json", summary)
    out.finish()


def _load_scores(cfg: RunConfig, ds: Dataset) -> np.ndarray:
    path = Path(cfg.eval.score_path)
    if not path.exists():
        raise ConfigError(f"file not found: {path}", key="eval.score_path")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or cfg.eval.score_column not in reader.fieldnames:
            raise ConfigError(f"column {cfg.eval.score_column!r} not in {path}", key="eval.score_column")
        by_id = {}
        for i, row in enumerate(reader):
            try:
                by_id[int(row.get("unit_id", i))] = float(row[cfg.eval.score_column])
            except ValueError:
                raise ValidationError(f"{path} row {i}: non-numeric score") from None
    missing = [int(u) for u in ds.unit_ids if int(u) not in by_id]
    if missing:
        raise ValidationError(f"{len(missing)} units have no score in {path} (first: {missing[0]})")
    return np.array([by_id[int(u)] for u in ds.unit_ids])


def cmd_evaluate(cfg: RunConfig) -> None:
    out = Outputs(cfg, "evaluate")
    ds, _ = prepare(cfg, out)
    if cfg.eval.score_path:
        scores, name = _load_scores(cfg, ds), cfg.eval.score_column
    else:
        scores, name = run_iterative_causal_segmentation(ds, cfg.loop).final_cate, "cate"
    e = cfg.eval
    curve = qini_curve(ds.outcome, ds.treatment, scores, e.n_points)
    lower, upper = bootstrap_band(ds, scores, e.ci_level, e.n_boot, e.n_points, cfg.seed)
    baseline = curve.fractions * curve.values[-1]
    rows = [[name, _fmt(f), _fmt(v), _fmt(lo), _fmt(hi)] for f, v, lo, hi in zip(curve.fractions, curve.values, lower.values, upper.values)]
    rows += [["random", _fmt(f), _fmt(v), "", ""] for f, v in zip(curve.fractions, baseline)]
    out.csv("curves.csv", ["strategy", "fraction", "value", "lower", "upper"], rows)
    reps = bootstrap_curves(ds.outcome, ds.treatment, scores, e.n_boot, e.n_points, cfg.seed)
    coefs = np.array([qini_coefficient(UpliftCurve(curve.fractions, r)) for r in reps])
    alpha = (1 - e.ci_level) / 2
    out.json(
        "summary.json",
        {
            "score": name,
            "qini_coefficient": qini_coefficient(curve),
            "qini_coefficient_ci": [float(np.quantile(coefs, alpha)), float(np.quantile(coefs, 1 - alpha))],
            "ci_level": e.ci_level,
            "n_boot": e.n_boot,
            "lower_band_above_random_fraction": float(np.mean(lower.values[1:-1] > baseline[1:-1])),
            "control_term_convention": "zero while no control unit is in the prefix",
        },
    )
    out.finish()


def cmd_explain(cfg: RunConfig) -> None:
    out = Outputs(cfg, "explain")
    ds, _ = prepare(cfg, out)
    result = run_iterative_causal_segmentation(ds, cfg.loop)
    if cfg.explain.unit_ids is not None:
        pos = {int(u): i for i, u in enumerate(ds.unit_ids)}
        try:
            rows = np.array([pos[int(u)] for u in cfg.explain.unit_ids], dtype=np.int64)
        except KeyError as exc:
            raise ConfigError(f"unit id {exc.args[0]} not in dataset", key="explain.unit_ids") from None
    else:
        size = min(cfg.explain.sample_size, ds.n)
        rows = np.sort(rng.stream(cfg.seed, rng.SAMPLE).choice(ds.n, size=size, replace=False))
    model = result.final_model
    seg = None if result.final_segments is None else result.final_segments[rows]
    names = design_names(model, ds.feature_names)
    attr = shap_cate(model, ds.covariates[rows], seg, feature_names=names)
    cate = predict_cate(model, ds.covariates[rows], seg)
    out.csv(
        "shap.csv",
        ["unit_id", "feature", "contribution"],
        ([int(ds.unit_ids[r]), f, _fmt(attr.per_unit[i, j])] for i, r in enumerate(rows) for j, f in enumerate(names)),
    )
    out.json(
        "shap_meta.json",
        {
            "base_value": attr.base_value,
            "background": "training design means",
            "background_values": dict(zip(names, map(float, attr.background))),
            "space": attr.space,
            "model_kind": model.kind,
            "units": [int(ds.unit_ids[r]) for r in rows],
            "max_local_accuracy_error": float(np.max(np.abs(attr.totals() - cate))),
            "mean_abs_contribution": dict(zip(names, map(float, attr.mean_abs()))),
        },
    )
    out.finish()


COMMANDS = {
    "synth": cmd_synth,
    "run": cmd_run,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
}


def _parse_set(items) -> dict:
    overrides = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        overrides[key.strip()] = yaml.safe_load(raw)
    return overrides


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML run configuration")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a dotted config key")
    common.add_argument("--verbose", "-v", action="store_true")
    parser = argparse.ArgumentParser(prog="causeg", description="Iterative causal segmentation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synth": "write a synthetic dataset and its ground truth",
        "run": "run the iterative segmentation loop",
        "simulate": "compare targeting strategies on gain curves",
        "evaluate": "Qini curve and bootstrap band for a score",
        "explain": "SHAP attributions for the converged CATE model",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        cfg = load_config(args.config, overrides)
        COMMANDS[args.command](cfg)
    except CausegError as exc:
        kind = type(exc).__name__
        print(f"error [{args.command}] {kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
