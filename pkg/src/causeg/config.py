"""Declarative run configuration.

A YAML mapping with a few sections::

    seed: 7
    output_dir: out
    input:
      source: synthetic          # or csv
      path: data.csv             # csv only
      id: unit_id                # csv only, optional
      treatment: treatment
      outcome: outcome
      covariates: [x1, x2]       # optional, default all other columns
      trim: [0.05, 0.95]         # optional positivity trimming
    synthetic: {n_units: 20000, ...}   # SynthConfig fields
    loop: {k_segments: 3, ...}         # LoopConfig fields except seed
    eval: {n_boot: 200, ci_level: 0.9, n_points: 101, k_for_kmeans_strategy: 3,
           score_path: cate.csv, score_column: cate}
    explain: {sample_size: 100, unit_ids: [...]}

Unknown keys are rejected by name. The root seed feeds every component.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError, ValidationError
from .loop import LoopConfig
from .synth import SynthConfig


@dataclass(frozen=True)
class InputConfig:
    source: str
    path: str | None = None
    id: str | None = "unit_id"
    treatment: str = "treatment"
    outcome: str = "outcome"
    covariates: tuple | None = None
    trim: tuple | None = None

    def schema(self) -> dict:
        schema = {"id": self.id, "treatment": self.treatment, "outcome": self.outcome}
        if self.covariates is not None:
            schema["covariates"] = list(self.covariates)
        return schema


@dataclass(frozen=True)
class EvalConfig:
    n_boot: int = 200
    ci_level: float = 0.90
    n_points: int = 101
    k_for_kmeans_strategy: int = 3
    score_path: str | None = None
    score_column: str = "cate"


@dataclass(frozen=True)
class ExplainConfig:
    sample_size: int = 100
    unit_ids: tuple | None = None


@dataclass(frozen=True)
class RunConfig:
    seed: int
    input: InputConfig
    output_dir: str = "out"
    synthetic: SynthConfig = field(default_factory=SynthConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    explain: ExplainConfig = field(default_factory=ExplainConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        doc = self.to_dict()
        doc.pop("output_dir")
        blob = json.dumps(doc, sort_keys=True, default=list).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _build(cls, section: str, values, extra: dict | None = None):
    if values is None:
        values = {}
    if not isinstance(values, dict):
        raise ConfigError(f"section must be a mapping, got {type(values).__name__}", key=section)
    names = {f.name for f in dataclasses.fields(cls)}
    blocked = set(extra or {})
    for key in values:
        if key not in names or key in blocked:
            raise ConfigError("unknown key", key=f"{section}.{key}")
    kwargs = dict(values)
    for key, val in kwargs.items():
        if isinstance(val, list):
            kwargs[key] = tuple(val)
    kwargs.update(extra or {})
    try:
        return cls(**kwargs)
    except ValidationError as exc:
        raise ConfigError(str(exc), key=section) from None
    except TypeError as exc:
        raise ConfigError(str(exc), key=section) from None


def _set_dotted(doc: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = doc
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError("cannot set a key inside a scalar", key=dotted)
    node[parts[-1]] = value


def parse_config(doc: dict | None, overrides: dict | None = None) -> RunConfig:
    """Validate a raw mapping (plus dotted-key overrides, which win)."""
    doc = dict(doc or {})
    for key, val in (overrides or {}).items():
        _set_dotted(doc, key, val)
    allowed = {f.name for f in dataclasses.fields(RunConfig)}
    for key in doc:
        if key not in allowed:
            raise ConfigError("unknown key", key=key)
    if "seed" not in doc:
        raise ConfigError("missing required key", key="seed")
    seed = doc["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("must be a non-negative integer", key="seed")
    inp = doc.get("input")
    if not isinstance(inp, dict) or "source" not in inp:
        raise ConfigError("missing required key", key="input.source")
    if inp["source"] not in ("synthetic", "csv"):
        raise ConfigError("must be 'synthetic' or 'csv'", key="input.source")
    if inp["source"] == "csv" and not inp.get("path"):
        raise ConfigError("missing required key", key="input.path")
    input_cfg = _build(InputConfig, "input", inp)
    if input_cfg.trim is not None and len(input_cfg.trim) != 2:
        raise ConfigError("must be a [lo, hi] pair", key="input.trim")
    out = doc.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("must be a path string", key="output_dir")
    return RunConfig(
        seed=seed,
        input=input_cfg,
        output_dir=out,
        synthetic=_build(SynthConfig, "synthetic", doc.get("synthetic")),
        loop=_build(LoopConfig, "loop", doc.get("loop"), extra={"seed": seed}),
        eval=_build(EvalConfig, "eval", doc.get("eval")),
        explain=_build(ExplainConfig, "explain", doc.get("explain")),
    )


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", key=str(path)) from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping")
    return parse_config(doc, overrides)
