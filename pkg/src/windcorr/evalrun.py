"""R^2 scoring, (T, S) sweeps and cross-site comparison."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .calib import AblParams, StandardizeStats, abl_calibrate, fit_standardize, standardize_samples
from .errors import DegenerateDataError, ShapeError, ValidationError, WindcorrError
from .models import ModelConfig, Network, TrainConfig, build_model, predict_samples, save_checkpoint, train
from .stats import CorrelationReport, learnability_rank
from .windgrid import DEFAULT_SPLITS, VALID_S, VALID_T, SampleSet, WindFieldSeries, make_samples

log = logging.getLogger(__name__)

R2_MODES = ("paper", "standard")


def r2(pred, truth, mode: str = "paper") -> float:
    """Coefficient of determination.

    paper:    sum (pred - mean(truth))^2 / sum (truth - mean(truth))^2
    standard: 1 - sum (truth - pred)^2 / sum (truth - mean(truth))^2
    The "paper" mode is an explained-variance ratio and can exceed 1.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"length mismatch: {len(pred)} vs {len(truth)}")
    if len(truth) < 2:
        raise ValidationError("r2 needs at least two points")
    ybar = truth.mean()
    sst = np.sum((truth - ybar) ** 2)
    if sst <= 0 or np.ptp(truth) == 0:
        raise DegenerateDataError("truth has zero variance")
    if mode == "paper":
        return float(np.sum((pred - ybar) ** 2) / sst)
    if mode == "standard":
        return float(1.0 - np.sum((truth - pred) ** 2) / sst)
    raise ValidationError(f"mode must be one of {R2_MODES}, got {mode!r}")


def evaluate(model: Network, samples: SampleSet, stats: StandardizeStats, split: str = "test",
             mode: str = "paper") -> tuple[float, float]:
    """(R^2_u, R^2_v) of de-standardized predictions against raw targets."""
    pred, truth = predict_samples(model, samples, stats, split)
    if len(truth) == 0:
        raise ValidationError(f"{split} split is empty")
    return r2(pred[:, 0], truth[:, 0], mode), r2(pred[:, 1], truth[:, 1], mode)


def prepare_samples(series: WindFieldSeries, T: int, S: int, abl: AblParams | None = AblParams(),
                    splits=DEFAULT_SPLITS, first_anchor: int | None = None):
    """Calibrate, window and standardize. Returns (raw samples, standardized samples, stats).

    Statistics are fitted on the hours up to the last training target only.
    """
    if abl is not None:
        series = abl_calibrate(series, abl)
    raw = make_samples(series, T, S, splits, first_anchor)
    stats = fit_standardize(series, raw.train_end)
    return raw, standardize_samples(raw, stats), stats


def cell_seed(master: int, variant: str, T: int, S: int) -> int:
    """First 8 bytes (big-endian) of sha256("master:variant:T:S"), as a 63-bit integer."""
    digest = hashlib.sha256(f"{master}:{variant}:{T}:{S}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class CellResult:
    T: int
    S: int
    seed: int
    r2_u: float
    r2_v: float
    r2_std_u: float
    r2_std_v: float
    epochs: int
    best_val_loss: float

    def value(self, component: str, mode: str) -> float:
        if mode == "paper":
            return self.r2_u if component == "u" else self.r2_v
        return self.r2_std_u if component == "u" else self.r2_std_v


@dataclass
class SweepResult:
    site: str
    variant: str
    entries: dict = field(default_factory=dict)     # (T, S) -> CellResult
    failures: dict = field(default_factory=dict)    # (T, S) -> reason
    metadata: dict = field(default_factory=dict)
    mode: str = "paper"

    def r2(self, T: int, S: int, mode: str | None = None) -> tuple[float, float]:
        c = self.entries[(T, S)]
        mode = mode or self.mode
        return c.value("u", mode), c.value("v", mode)

    def mean_r2(self, mode: str | None = None) -> float:
        mode = mode or self.mode
        vals = [c.value(k, mode) for c in self.entries.values() for k in ("u", "v")]
        return float(np.mean(vals)) if vals else float("nan")

    def caveats(self) -> list[str]:
        out = []
        for (T, S), c in sorted(self.entries.items()):
            if max(c.r2_u, c.r2_v) > 1.0:
                out.append(f"T={T} S={S}: explained-variance R^2 exceeds 1 "
                           f"(u={c.r2_u:.4f}, v={c.r2_v:.4f}); compare the standard form")
        return out

    def table_csv(self, component: str, mode: str | None = None) -> str:
        """Published grid layout: rows T in 1,3,6,12,24; columns 1x1 .. 13x13; blanks for cells not run."""
        mode = mode or self.mode
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T"] + [f"{s}x{s}" for s in VALID_S])
        for T in VALID_T:
            row = [T]
            for S in VALID_S:
                c = self.entries.get((T, S))
                row.append(f"{c.value(component, mode):.6f}" if c is not None else "")
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "site": self.site, "variant": self.variant, "mode": self.mode, "split": "test",
            "entries": [asdict(c) for _, c in sorted(self.entries.items())],
            "failures": [{"T": T, "S": S, "reason": r} for (T, S), r in sorted(self.failures.items())],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        entries = {(e["T"], e["S"]): CellResult(**e) for e in d["entries"]}
        failures = {(f["T"], f["S"]): f["reason"] for f in d.get("failures", [])}
        return cls(d["site"], d["variant"], entries, failures, d.get("metadata", {}), d.get("mode", "paper"))

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for comp in ("u", "v"):
            (directory / f"r2_{comp}.csv").write_text(self.table_csv(comp))
        with open(directory / "sweep.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "SweepResult":
        path = Path(path)
        if path.is_dir():
            path = path / "sweep.json"
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def run_cell(series: WindFieldSeries, variant: str, T: int, S: int, master_seed: int,
             train_config: TrainConfig = TrainConfig(), abl: AblParams | None = AblParams(),
             splits=DEFAULT_SPLITS, first_anchor: int | None = None, cell_dir=None,
             model_kwargs: dict | None = None):
    """Train and test one (variant, T, S) cell from scratch. Returns (CellResult, model, history, stats)."""
    seed = cell_seed(master_seed, variant, T, S)
    mconf = ModelConfig(variant, T, S, seed=seed, **(model_kwargs or {}))
    raw, std, stats = prepare_samples(series, T, S, abl, splits, first_anchor)
    model = build_model(mconf)
    tconf = TrainConfig(**{**asdict(train_config), "seed": seed})
    model, hist = train(model, std, tconf)
    pu, pv = evaluate(model, raw, stats, "test", "paper")
    su, sv = evaluate(model, raw, stats, "test", "standard")
    cell = CellResult(T, S, seed, pu, pv, su, sv, len(hist.epochs), hist.best_val_loss)
    if cell_dir is not None:
        cell_dir = Path(cell_dir)
        cell_dir.mkdir(parents=True, exist_ok=True)
        hist.to_csv(cell_dir / "history.csv")
        stats.save(cell_dir / "stats.json")
        save_checkpoint(model, cell_dir / "model.wck", stats, {"site_seed": master_seed, "stats_file": "stats.json"})
    return cell, model, hist, stats


def sweep(series: WindFieldSeries, site: str, variants: Sequence[str] = ("cnn2d3d",),
          T_set: Sequence[int] = VALID_T, S_set: Sequence[int] = VALID_S, seed: int = 0,
          train_config: TrainConfig = TrainConfig(), abl: AblParams | None = AblParams(),
          splits=DEFAULT_SPLITS, mode: str = "paper", threads: int = 1, run_dir=None,
          model_kwargs: dict | None = None) -> list[SweepResult]:
    """Train/test every (variant, T, S) cell; one SweepResult per variant.

    All cells share the same anchors (the first max(T_set) hours are never
    targets), hence identical test sets. Failures are recorded per cell.
    """
    if mode not in R2_MODES:
        raise ValidationError(f"mode must be one of {R2_MODES}, got {mode!r}")
    T_set, S_set = sorted(set(T_set)), sorted(set(S_set))
    first_anchor = max(T_set)
    if series.n_time <= first_anchor:
        raise ValidationError(f"series of {series.n_time} hours too short for T={first_anchor}")
    cells = [(v, T, S) for v in variants for T in T_set for S in S_set]

    def work(cell):
        v, T, S = cell
        cell_dir = Path(run_dir) / "cells" / f"{v}_T{T}_S{S}" if run_dir is not None else None
        try:
            return run_cell(series, v, T, S, seed, train_config, abl, splits, first_anchor, cell_dir,
                            model_kwargs)[0]
        except WindcorrError as exc:
            log.warning("cell %s T=%d S=%d failed: %s", v, T, S, exc)
            return str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, cells))
    else:
        outcomes = [work(c) for c in cells]

    meta = {
        "master_seed": seed, "T_set": T_set, "S_set": S_set, "first_anchor": first_anchor,
        "train": asdict(train_config), "abl": asdict(abl) if abl else None, "splits": list(splits),
        "n_time": series.n_time,
    }
    results = []
    for v in variants:
        res = SweepResult(site, v, mode=mode, metadata={**meta, "config_hash": config_hash({**meta, "variant": v})})
        for (cv, T, S), out in zip(cells, outcomes):
            if cv != v:
                continue
            if isinstance(out, CellResult):
                res.entries[(T, S)] = out
            else:
                res.failures[(T, S)] = out
        res.metadata["cell_seeds"] = {f"T{T}_S{S}": cell_seed(seed, v, T, S) for T in T_set for S in S_set}
        results.append(res)
    return results


@dataclass
class ComparisonSummary:
    rows: list[dict]
    learnability_order: list[str]
    performance_order: list[str]
    consistent: bool
    caveats: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def text(self) -> str:
        lines = [f"{'site':<16}{'max_std_u':>11}{'max_std_v':>11}{'mean_R2':>10}"]
        for r in self.rows:
            lines.append(f"{r['site']:<16}{r['max_std_u']:>11.4f}{r['max_std_v']:>11.4f}{r['mean_r2']:>10.4f}")
        lines.append(f"learnability order (ascending max sigma): {', '.join(self.learnability_order)}")
        lines.append(f"performance order (descending mean R^2):  {', '.join(self.performance_order)}")
        lines.append(f"consistent: {str(self.consistent).lower()}")
        lines.extend(f"caveat: {c}" for c in self.caveats)
        return "\n".join(lines) + "\n"


def compare_sites(sweeps: Sequence[SweepResult], reports: Sequence[CorrelationReport],
                  mode: str | None = None) -> ComparisonSummary:
    """Join correlation reports with sweep results and test whether the max-sigma
    ordering predicts the R^2 ordering."""
    by_site: dict[str, list[SweepResult]] = {}
    for s in sweeps:
        by_site.setdefault(s.site, []).append(s)
    rep_by_site = {r.site: r for r in reports}
    if set(by_site) != set(rep_by_site):
        raise ValidationError(f"site mismatch: sweeps {sorted(by_site)} vs reports {sorted(rep_by_site)}")

    mean_r2 = {site: float(np.mean([s.mean_r2(mode) for s in group])) for site, group in by_site.items()}
    rows = [{"site": site, "max_std_u": rep_by_site[site].max_std_u, "max_std_v": rep_by_site[site].max_std_v,
             "mean_r2": mean_r2[site]} for site in sorted(by_site)]
    if len(rows) >= 2:
        learn = learnability_rank(list(rep_by_site.values()))
    else:
        learn = [r["site"] for r in rows]
    perf = sorted(mean_r2, key=lambda s: (-mean_r2[s], s))
    caveats = [f"{s.site}/{s.variant} {c}" for s in sweeps if (mode or s.mode) == "paper" for c in s.caveats()]
    return ComparisonSummary(rows, learn, perf, learn == perf, caveats)
