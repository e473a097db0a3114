"""Run configuration: TOML (or JSON) files with a versioned schema.

Example::

    schema_version = 1
    site = "advective"
    seed = 7

    [data.synth]          # or: [data] windpack = "site.wpk"
    kind = "advective"    #     [data] csv_dir = "hours/"  grid_file = "grid.json"
    hours = 3000
    grid_size = 13

    [abl]
    y0 = 0.0002
    y_ref = 50.0
    y_target = 100.0

    [sweep]
    T = [1, 3]
    S = [1, 3, 5]
    variants = ["cnn2d3d"]
    mode = "paper"

    [train]
    lr = 0.001
    batch_size = 32
    epochs = 50
    patience = 5

Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .calib import AblParams
from .errors import ValidationError
from .evalrun import R2_MODES
from .models import VARIANTS, TrainConfig
from .stats import DEFAULT_MAX_LAG
from .windgrid import REGIONS, VALID_S, VALID_T, GridSpec, SynthParams, WindFieldSeries, ingest_csv, read_windpack, synth_field

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "site", "seed", "out", "threads", "data", "abl", "sweep", "train", "max_lag"}
_SWEEP_KEYS = {"T", "S", "variants", "mode"}
_SYNTH_KEYS = {"kind", "hours", "seed", "weight", "grid_size", "region", "grid"}


@dataclass
class RunConfig:
    site: str = "site"
    data: dict = field(default_factory=dict)
    abl: AblParams | None = field(default_factory=AblParams)
    T_set: tuple[int, ...] = (1, 3)
    S_set: tuple[int, ...] = (1, 3)
    variants: tuple[str, ...] = ("cnn2d3d",)
    mode: str = "paper"
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    out: str | None = None
    threads: int = 1
    max_lag: int = DEFAULT_MAX_LAG
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "RunConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema_version {self.schema_version} (expected {SCHEMA_VERSION})")
        bad_t = [t for t in self.T_set if t not in VALID_T]
        bad_s = [s for s in self.S_set if s not in VALID_S]
        if bad_t or bad_s or not self.T_set or not self.S_set:
            raise ValidationError(f"T set must be within {VALID_T} and S set within {VALID_S}")
        if any(v not in VARIANTS for v in self.variants):
            raise ValidationError(f"variants must be within {VARIANTS}, got {list(self.variants)}")
        if self.mode not in R2_MODES:
            raise ValidationError(f"mode must be one of {R2_MODES}")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        for key in ("windpack", "csv_dir", "grid_file"):
            if key in self.data and not Path(self.data[key]).exists():
                raise ValidationError(f"data.{key} does not exist: {self.data[key]}")
        if not any(k in self.data for k in ("windpack", "csv_dir", "synth")):
            raise ValidationError("data must name a windpack, a csv_dir or a synth spec")
        if "synth" in self.data:
            extra = set(self.data["synth"]) - _SYNTH_KEYS
            if extra:
                raise ValidationError(f"unknown data.synth keys: {sorted(extra)}")
        return self

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version, "site": self.site, "seed": self.seed,
            "out": self.out, "threads": self.threads, "max_lag": self.max_lag,
            "data": self.data,
            "abl": asdict(self.abl) if self.abl is not None else {"enabled": False},
            "sweep": {"T": list(self.T_set), "S": list(self.S_set), "variants": list(self.variants),
                      "mode": self.mode},
            "train": asdict(self.train),
        }


def _resolve(base: Path, value: str) -> str:
    p = Path(value)
    return str(p if p.is_absolute() else (base / p).resolve())


def config_from_dict(d: dict, base: Path = Path(".")) -> RunConfig:
    unknown = set(d) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    data = dict(d.get("data", {}))
    for key in ("windpack", "csv_dir", "grid_file"):
        if key in data:
            data[key] = _resolve(base, data[key])
    abl_d = dict(d.get("abl", {}))
    enabled = abl_d.pop("enabled", True)
    sweep_d = d.get("sweep", {})
    if set(sweep_d) - _SWEEP_KEYS:
        raise ValidationError(f"unknown sweep keys: {sorted(set(sweep_d) - _SWEEP_KEYS)}")
    train_d = dict(d.get("train", {}))
    try:
        train = TrainConfig(**train_d)
        abl = AblParams(**abl_d) if enabled else None
    except TypeError as exc:
        raise ValidationError(f"bad config section: {exc}") from exc
    cfg = RunConfig(
        site=str(d.get("site", "site")), data=data, abl=abl,
        T_set=tuple(sweep_d.get("T", (1, 3))), S_set=tuple(sweep_d.get("S", (1, 3))),
        variants=tuple(sweep_d.get("variants", ("cnn2d3d",))), mode=sweep_d.get("mode", "paper"),
        train=train, seed=int(d.get("seed", 0)),
        out=_resolve(base, d["out"]) if d.get("out") else None,
        threads=int(d.get("threads", 1)), max_lag=int(d.get("max_lag", DEFAULT_MAX_LAG)),
        schema_version=int(d.get("schema_version", SCHEMA_VERSION)),
    )
    return cfg.validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    try:
        if path.suffix == ".json":
            d = json.loads(path.read_text())
        else:
            d = tomllib.loads(path.read_text())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ValidationError(f"{path}: cannot parse config: {exc}") from exc
    return config_from_dict(d, path.parent.resolve())


def grid_from_file(path) -> GridSpec:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"grid file not found: {path}")
    return GridSpec.from_dict(json.loads(path.read_text()))


def synth_grid(spec: dict) -> GridSpec:
    if "grid" in spec:
        return GridSpec.from_dict(spec["grid"])
    if "region" in spec:
        try:
            return REGIONS[spec["region"]]
        except KeyError:
            raise ValidationError(f"unknown region {spec['region']!r}; known: {sorted(REGIONS)}") from None
    return GridSpec.centered(int(spec.get("grid_size", 13)))


def load_series(data: dict, default_seed: int = 0) -> WindFieldSeries:
    if "windpack" in data:
        return read_windpack(data["windpack"])
    if "csv_dir" in data:
        if "grid_file" not in data:
            raise ValidationError("csv_dir needs grid_file")
        return ingest_csv(data["csv_dir"], grid_from_file(data["grid_file"]))
    spec = data["synth"]
    params = SynthParams(weight=float(spec.get("weight", SynthParams.weight)))
    return synth_field(spec.get("kind", "advective"), synth_grid(spec), int(spec.get("hours", 3000)),
                       int(spec.get("seed", default_seed)), params)
