"""Log-law height calibration and per-component standardization."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateDataError, ValidationError
from .windgrid import SampleSet, WindFieldSeries


@dataclass(frozen=True)
class AblParams:
    y0: float = 0.0002     # roughness length over open sea [m]
    y_ref: float = 50.0
    y_target: float = 100.0

    def __post_init__(self):
        if min(self.y0, self.y_ref, self.y_target) <= 0:
            raise ValidationError(f"heights must be positive: {self}")

    @property
    def factor(self) -> float:
        return abl_factor(self.y_target, self.y_ref, self.y0)


def abl_factor(y: float, y_ref: float, y0: float) -> float:
    """Speed ratio u(y)/u(y_ref) under the neutral log law."""
    if min(y, y_ref, y0) <= 0:
        raise ValidationError("heights must be positive")
    return math.log((y + y0) / y0) / math.log((y_ref + y0) / y0)


def abl_calibrate(series: WindFieldSeries, params: AblParams = AblParams()) -> WindFieldSeries:
    """Rescale both components from `params.y_ref` to `params.y_target`.

    The factor is a positive scalar, so direction is untouched at every point.
    """
    if not math.isclose(series.altitude, params.y_ref, rel_tol=1e-9):
        raise ValidationError(
            f"series altitude {series.altitude} m does not match reference height {params.y_ref} m"
        )
    f = params.factor
    return series.replace(u=series.u.astype(np.float64) * f, v=series.v.astype(np.float64) * f,
                          altitude=params.y_target)


@dataclass(frozen=True)
class StandardizeStats:
    mu_u: float
    mu_v: float
    sigma_u: float
    sigma_v: float

    def __post_init__(self):
        if not (self.sigma_u > 0 and self.sigma_v > 0):
            raise DegenerateDataError(f"standard deviations must be positive: {self}")

    @property
    def mu(self) -> np.ndarray:
        return np.array([self.mu_u, self.mu_v])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([self.sigma_u, self.sigma_v])

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "StandardizeStats":
        with open(path) as fh:
            return cls(**json.load(fh))


def fit_standardize(series: WindFieldSeries, train_end: int | None = None) -> StandardizeStats:
    """Mean and population std of u and v over the whole grid and hours [0, train_end)."""
    end = series.n_time if train_end is None else int(train_end)
    if end < 1:
        raise ValidationError("training range is empty")
    u = series.u[:end].astype(np.float64)
    v = series.v[:end].astype(np.float64)
    su, sv = u.std(), v.std()
    if not (su > 0 and sv > 0) or np.ptp(u) == 0 or np.ptp(v) == 0:
        raise DegenerateDataError(f"zero variance in training range (sigma_u={su}, sigma_v={sv})")
    return StandardizeStats(float(u.mean()), float(v.mean()), float(su), float(sv))


def apply_standardize(series: WindFieldSeries, stats: StandardizeStats) -> WindFieldSeries:
    return series.replace(u=(series.u - stats.mu_u) / stats.sigma_u,
                          v=(series.v - stats.mu_v) / stats.sigma_v)


def invert_standardize(values, stats: StandardizeStats) -> np.ndarray:
    """Map standardized (u, v) pairs, shape [..., 2], back to m/s."""
    values = np.asarray(values, dtype=np.float64)
    return values * stats.sigma + stats.mu


def standardize_pairs(values, stats: StandardizeStats) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return (values - stats.mu) / stats.sigma


def standardize_samples(samples: SampleSet, stats: StandardizeStats) -> SampleSet:
    """Standardized copy of a raw SampleSet (inputs along the channel axis, targets per column)."""
    if samples.standardized:
        raise ValidationError("sample set is already standardized")
    shape = (1, 2) + (1,) * (samples.inputs.ndim - 2)
    inputs = (samples.inputs - stats.mu.reshape(shape)) / stats.sigma.reshape(shape)
    return samples.with_arrays(inputs, standardize_pairs(samples.targets, stats), standardized=True)
