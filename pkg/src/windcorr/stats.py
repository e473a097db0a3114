"""Autocorrelation spread, Pearson heatmaps and the learnability ranking."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, ShapeError, ValidationError
from .windgrid import GridSpec, WindFieldSeries

DEFAULT_MAX_LAG = 24


@dataclass
class AccCurve:
    lags: np.ndarray
    acc: np.ndarray
    location: tuple[int, int] | None = None


@dataclass
class AccSpread:
    lags: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    min: np.ndarray
    max: np.ndarray
    skipped: list[tuple[int, int]] = field(default_factory=list)

    @property
    def max_std(self) -> float:
        return float(self.std.max())

    def to_dict(self) -> dict:
        return {
            "lags": self.lags.tolist(), "mean": self.mean.tolist(), "std": self.std.tolist(),
            "min": self.min.tolist(), "max": self.max.tolist(), "max_std": self.max_std,
            "skipped": [list(p) for p in self.skipped],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccSpread":
        return cls(np.asarray(d["lags"]), np.asarray(d["mean"], float), np.asarray(d["std"], float),
                   np.asarray(d["min"], float), np.asarray(d["max"], float),
                   [tuple(p) for p in d.get("skipped", [])])


def _acc_columns(y: np.ndarray, max_lag: int) -> np.ndarray:
    """ACC for each column of y [n][P]; columns with zero variance come back NaN."""
    d = y - y.mean(axis=0)
    den = np.einsum("tp,tp->p", d, d)
    den[np.ptp(y, axis=0) == 0] = 0.0  # exact constants; rounding in the mean leaves ~1e-32 otherwise
    out = np.empty((max_lag + 1, y.shape[1]))
    for k in range(max_lag + 1):
        out[k] = np.einsum("tp,tp->p", d[k:], d[:len(d) - k])
    with np.errstate(invalid="ignore", divide="ignore"):
        out = out / den
    out[:, den <= 0] = np.nan
    out[0, den > 0] = 1.0
    return out


def acc(series, max_lag: int = DEFAULT_MAX_LAG, location=None) -> AccCurve:
    """Autocorrelation r_k for k = 0..max_lag using one global mean and the full-length denominator."""
    y = np.asarray(series, dtype=np.float64).ravel()
    if max_lag < 0 or max_lag >= len(y):
        raise ValidationError(f"max_lag must be in [0, {len(y)}), got {max_lag}")
    r = _acc_columns(y[:, None], max_lag)[:, 0]
    if np.isnan(r[0]):
        raise DegenerateDataError("series has zero variance")
    return AccCurve(np.arange(max_lag + 1), r, location)


def acc_spread(series: WindFieldSeries, component: str, max_lag: int = DEFAULT_MAX_LAG) -> AccSpread:
    """Spatial mean / population std / range of the ACC at each lag."""
    data = series.component(component).astype(np.float64)
    n, n_lat, n_lon = data.shape
    if n_lat * n_lon < 2:
        raise ValidationError("acc_spread needs at least two grid points")
    if max_lag < 0 or max_lag >= n:
        raise ValidationError(f"max_lag must be in [0, {n}), got {max_lag}")
    r = _acc_columns(data.reshape(n, -1), max_lag)
    bad = np.isnan(r[0])
    skipped = [tuple(int(i) for i in divmod(p, n_lon)) for p in np.flatnonzero(bad)]
    good = r[:, ~bad]
    if good.shape[1] == 0:
        raise DegenerateDataError("every grid point has zero variance")
    return AccSpread(np.arange(max_lag + 1), good.mean(axis=1), good.std(axis=1),
                     good.min(axis=1), good.max(axis=1), skipped)


def pcc(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValidationError("pcc needs at least two points")
    da, db = a - a.mean(), b - b.mean()
    saa, sbb = np.dot(da, da), np.dot(db, db)
    if saa <= 0 or sbb <= 0 or np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DegenerateDataError("zero variance input to pcc")
    return float(np.dot(da, db) / (np.sqrt(saa) * np.sqrt(sbb)))


def _pcc_map(data: np.ndarray, point: tuple[int, int]) -> np.ndarray:
    n = data.shape[0]
    flat = data.reshape(n, -1)
    d = flat - flat.mean(axis=0)
    ref = d[:, point[0] * data.shape[2] + point[1]]
    norms = np.sqrt(np.einsum("tp,tp->p", d, d))
    norms[np.ptp(flat, axis=0) == 0] = 0.0
    sref = norms[point[0] * data.shape[2] + point[1]]
    if sref <= 0:
        raise DegenerateDataError("prediction point series has zero variance")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (ref @ d) / (sref * norms)
    out[norms <= 0] = np.nan
    out = np.clip(out, -1.0, 1.0)
    out[point[0] * data.shape[2] + point[1]] = 1.0
    return out.reshape(data.shape[1:])


@dataclass
class PccHeatmap:
    grid: GridSpec
    pcc_u: np.ndarray
    pcc_v: np.ndarray
    avg_by_gridsize: dict[int, tuple[float, float]]
    skipped: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "avg_by_gridsize": {str(s): list(v) for s, v in self.avg_by_gridsize.items()},
            "skipped": [list(p) for p in self.skipped],
        }


def crop_average(heat: np.ndarray, grid: GridSpec, S: int) -> float:
    """Mean of the centered S x S crop, prediction point excluded, NaNs ignored."""
    rs, cs = grid.crop_slices(S)
    block = heat[rs, cs].copy()
    block[S // 2, S // 2] = np.nan
    vals = block[np.isfinite(block)]
    return float(vals.mean()) if vals.size else float("nan")


def pcc_heatmap(series: WindFieldSeries) -> PccHeatmap:
    if series.n_time < 2:
        raise ValidationError("pcc_heatmap needs at least two time steps")
    g = series.grid
    pu = _pcc_map(series.u.astype(np.float64), g.prediction_point)
    pv = _pcc_map(series.v.astype(np.float64), g.prediction_point)
    skipped = sorted({tuple(int(i) for i in p) for p in np.argwhere(np.isnan(pu) | np.isnan(pv))})
    avg = {S: (crop_average(pu, g, S), crop_average(pv, g, S)) for S in range(3, g.max_crop() + 1, 2)}
    return PccHeatmap(g, pu, pv, avg, skipped)


@dataclass
class CorrelationReport:
    site: str
    acc_u: AccSpread | None = None
    acc_v: AccSpread | None = None
    heatmap: PccHeatmap | None = None
    max_std_override: tuple[float, float] | None = None
    pcc3_override: float | None = None

    @classmethod
    def from_max_std(cls, site: str, max_std_u: float, max_std_v: float,
                     mean_pcc3: float | None = None) -> "CorrelationReport":
        """Summary-only report, e.g. for published max-sigma values."""
        return cls(site, max_std_override=(float(max_std_u), float(max_std_v)), pcc3_override=mean_pcc3)

    @property
    def max_std_u(self) -> float:
        return self.max_std_override[0] if self.max_std_override else self.acc_u.max_std

    @property
    def max_std_v(self) -> float:
        return self.max_std_override[1] if self.max_std_override else self.acc_v.max_std

    @property
    def score(self) -> float:
        """Ranking scalar: arithmetic mean of the u and v max sigma."""
        return 0.5 * (self.max_std_u + self.max_std_v)

    @property
    def mean_pcc3(self) -> float:
        if self.pcc3_override is not None:
            return self.pcc3_override
        if self.heatmap is None or 3 not in self.heatmap.avg_by_gridsize:
            return float("nan")
        return float(np.mean(self.heatmap.avg_by_gridsize[3]))

    def table_row(self) -> str:
        return f"{self.site}: max sigma_ACC u={self.max_std_u:.3f} v={self.max_std_v:.3f}"

    def to_dict(self) -> dict:
        d = {"site": self.site, "max_std_u": self.max_std_u, "max_std_v": self.max_std_v}
        if self.acc_u is not None:
            d["acc_u"] = self.acc_u.to_dict()
            d["acc_v"] = self.acc_v.to_dict()
        if self.heatmap is not None:
            d["pcc"] = self.heatmap.to_dict()
        if self.pcc3_override is not None:
            d["mean_pcc3"] = self.pcc3_override
        return d

    def save(self, directory) -> None:
        """report.json plus CSV matrices (pcc_u.csv, pcc_v.csv, acc_u.csv, acc_v.csv)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "report.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        if self.heatmap is not None:
            for name, arr in (("pcc_u", self.heatmap.pcc_u), ("pcc_v", self.heatmap.pcc_v)):
                np.savetxt(directory / f"{name}.csv", arr, delimiter=",", fmt="%.6f")
        for name, spread in (("acc_u", self.acc_u), ("acc_v", self.acc_v)):
            if spread is None:
                continue
            with open(directory / f"{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["lag", "mean", "std", "min", "max"])
                for row in zip(spread.lags, spread.mean, spread.std, spread.min, spread.max):
                    w.writerow([int(row[0])] + [f"{x:.6f}" for x in row[1:]])

    @classmethod
    def load(cls, path) -> "CorrelationReport":
        path = Path(path)
        if path.is_dir():
            path = path / "report.json"
        with open(path) as fh:
            d = json.load(fh)
        if "acc_u" not in d:
            return cls.from_max_std(d["site"], d["max_std_u"], d["max_std_v"], d.get("mean_pcc3"))
        rep = cls(d["site"], AccSpread.from_dict(d["acc_u"]), AccSpread.from_dict(d["acc_v"]))
        if "pcc" in d:
            p = d["pcc"]
            avg = {int(s): tuple(v) for s, v in p["avg_by_gridsize"].items()}
            rep.pcc3_override = float(np.mean(avg[3])) if 3 in avg else None
        return rep


def analyze(series: WindFieldSeries, site: str, max_lag: int = DEFAULT_MAX_LAG) -> CorrelationReport:
    return CorrelationReport(site, acc_spread(series, "u", max_lag), acc_spread(series, "v", max_lag),
                             pcc_heatmap(series))


def learnability_rank(reports: list[CorrelationReport]) -> list[str]:
    """Sites ordered from most to least learnable.

    Ascending mean of the u/v max sigma; ties go to the higher mean 3x3 PCC,
    then to the site name.
    """
    if len(reports) < 2:
        raise ValidationError("learnability_rank needs at least two reports")

    def key(rep):
        pcc3 = rep.mean_pcc3
        # rounding keeps float noise (0.1 + 0.2 vs 0.15 + 0.15) from breaking ties
        return (round(rep.score, 12), -pcc3 if np.isfinite(pcc3) else np.inf, rep.site)

    return [r.site for r in sorted(reports, key=key)]
