"""Gridded wind fields: data model, windpack I/O, CSV ingestion, synthetic
generators and spatiotemporal windowing."""
from __future__ import annotations

import csv
import json
import math
import re
import struct
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import (
    CoordinateError,
    FormatError,
    NonFiniteError,
    ShapeError,
    SizeMismatchError,
    ValidationError,
)

VALID_T = (1, 3, 6, 12, 24)
VALID_S = (1, 3, 5, 7, 9, 11, 13)
DEFAULT_SPLITS = (0.6, 0.2, 0.2)
SPLIT_NAMES = ("train", "val", "test")

WINDPACK_MAGIC = b"WNDPACK1"
_HEADER_KEYS = (
    "lat_min", "lat_max", "lon_min", "lon_max", "d_lat", "d_lon",
    "n_lat", "n_lon", "n_time", "start_time", "step_seconds",
    "altitude_m", "prediction_point",
)
_EPOCH = datetime(2012, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class GridSpec:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    d_lat: float = 0.5
    d_lon: float = 0.625
    prediction_point: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.d_lat <= 0 or self.d_lon <= 0:
            raise ValidationError("grid increments must be positive")
        if self.lat_max < self.lat_min or self.lon_max < self.lon_min:
            raise ValidationError("grid bounds are inverted")
        object.__setattr__(self, "prediction_point", tuple(int(i) for i in self.prediction_point))
        r, c = self.prediction_point
        if not (0 <= r < self.n_lat and 0 <= c < self.n_lon):
            raise ValidationError(
                f"prediction point {self.prediction_point} outside grid {self.n_lat}x{self.n_lon}"
            )

    @property
    def n_lat(self) -> int:
        return int(round((self.lat_max - self.lat_min) / self.d_lat)) + 1

    @property
    def n_lon(self) -> int:
        return int(round((self.lon_max - self.lon_min) / self.d_lon)) + 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_lat, self.n_lon

    @property
    def lats(self) -> np.ndarray:
        return self.lat_min + self.d_lat * np.arange(self.n_lat)

    @property
    def lons(self) -> np.ndarray:
        return self.lon_min + self.d_lon * np.arange(self.n_lon)

    @classmethod
    def centered(cls, n_lat: int, n_lon: int | None = None, lat0: float = 0.0, lon0: float = 0.0,
                 d_lat: float = 0.5, d_lon: float = 0.625) -> "GridSpec":
        """Grid of n_lat x n_lon points whose prediction point is the middle cell."""
        n_lon = n_lat if n_lon is None else n_lon
        return cls(lat0, lat0 + d_lat * (n_lat - 1), lon0, lon0 + d_lon * (n_lon - 1),
                   d_lat, d_lon, (n_lat // 2, n_lon // 2))

    @classmethod
    def from_latlon(cls, lat_min, lat_max, lon_min, lon_max, point_lat, point_lon,
                    d_lat=0.5, d_lon=0.625) -> "GridSpec":
        """Snap a geographic prediction point onto the nearest grid index."""
        row = int(round((point_lat - lat_min) / d_lat))
        col = int(round((point_lon - lon_min) / d_lon))
        return cls(lat_min, lat_max, lon_min, lon_max, d_lat, d_lon, (row, col))

    def crop_slices(self, S: int) -> tuple[slice, slice]:
        """Row/col slices of the S x S square centered on the prediction point."""
        if S < 1 or S % 2 == 0:
            raise ValidationError(f"grid size S must be a positive odd integer, got {S}")
        h = S // 2
        r, c = self.prediction_point
        if r - h < 0 or c - h < 0 or r + h >= self.n_lat or c + h >= self.n_lon:
            raise ValidationError(
                f"{S}x{S} crop around {self.prediction_point} exceeds grid {self.n_lat}x{self.n_lon}"
            )
        return slice(r - h, r + h + 1), slice(c - h, c + h + 1)

    def max_crop(self) -> int:
        r, c = self.prediction_point
        h = min(r, c, self.n_lat - 1 - r, self.n_lon - 1 - c)
        return 2 * h + 1

    def to_dict(self) -> dict:
        return {
            "lat_min": self.lat_min, "lat_max": self.lat_max,
            "lon_min": self.lon_min, "lon_max": self.lon_max,
            "d_lat": self.d_lat, "d_lon": self.d_lon,
            "prediction_point": list(self.prediction_point),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        try:
            if "prediction_latlon" in d:
                lat, lon = d["prediction_latlon"]
                return cls.from_latlon(d["lat_min"], d["lat_max"], d["lon_min"], d["lon_max"],
                                       lat, lon, d.get("d_lat", 0.5), d.get("d_lon", 0.625))
            return cls(float(d["lat_min"]), float(d["lat_max"]), float(d["lon_min"]),
                       float(d["lon_max"]), float(d.get("d_lat", 0.5)), float(d.get("d_lon", 0.625)),
                       tuple(d["prediction_point"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"incomplete grid description: {exc}") from exc


# Published study regions and prediction points (west longitudes negative).
REGIONS = {
    "korea": GridSpec.from_latlon(20.5, 54.0, 105.0, 149.4, 37.5, 126.3),
    "uk": GridSpec.from_latlon(39.5, 68.5, -21.9, 16.3, 54.0, 1.9),
    "usa": GridSpec.from_latlon(35.0, 49.0, -79.4, -63.8, 41.0, -70.6),
}


@dataclass
class WindFieldSeries:
    grid: GridSpec
    start_time: datetime
    u: np.ndarray
    v: np.ndarray
    altitude: float = 50.0
    step: timedelta = timedelta(hours=1)

    def __post_init__(self):
        self.u = np.asarray(self.u)
        self.v = np.asarray(self.v)
        if self.start_time.tzinfo is None:
            self.start_time = self.start_time.replace(tzinfo=timezone.utc)
        if self.u.shape != self.v.shape:
            raise ShapeError(f"u shape {self.u.shape} != v shape {self.v.shape}")
        if self.u.ndim != 3 or self.u.shape[1:] != self.grid.shape:
            raise ShapeError(f"expected [time][{self.grid.n_lat}][{self.grid.n_lon}], got {self.u.shape}")
        if self.u.shape[0] < 1:
            raise ShapeError("time dimension must be >= 1")
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise NonFiniteError("wind field contains NaN or Inf")

    @property
    def n_time(self) -> int:
        return self.u.shape[0]

    def component(self, name: str) -> np.ndarray:
        if name not in ("u", "v"):
            raise ValidationError(f"component must be 'u' or 'v', got {name!r}")
        return self.u if name == "u" else self.v

    def time_at(self, index: int) -> datetime:
        return self.start_time + index * self.step

    def replace(self, **changes) -> "WindFieldSeries":
        kw = dict(grid=self.grid, start_time=self.start_time, u=self.u, v=self.v,
                  altitude=self.altitude, step=self.step)
        kw.update(changes)
        return WindFieldSeries(**kw)


# ---------------------------------------------------------------- windpack


def _iso(t: datetime) -> str:
    return t.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_windpack(series: WindFieldSeries, path) -> None:
    """Write `series` as a windpack file.

    Values are stored as float32; a series whose arrays are already float32
    (as produced by ingestion and the synthetic generators) round-trips exactly.
    """
    if series.n_time < 1:
        raise ShapeError("refusing to write an empty series")
    g = series.grid
    header = dict(g.to_dict())
    header.update(
        n_lat=g.n_lat, n_lon=g.n_lon, n_time=series.n_time,
        start_time=_iso(series.start_time),
        step_seconds=int(series.step.total_seconds()),
        altitude_m=float(series.altitude),
    )
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = np.stack([series.u, series.v], axis=1).astype("<f4", copy=False)
    with open(path, "wb") as fh:
        fh.write(WINDPACK_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(payload).tobytes())


def read_windpack_header(path) -> dict:
    with open(path, "rb") as fh:
        return _read_header(fh, path)


def _read_header(fh, path) -> dict:
    magic = fh.read(len(WINDPACK_MAGIC))
    if magic != WINDPACK_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {WINDPACK_MAGIC!r}")
    raw = fh.read(4)
    if len(raw) != 4:
        raise FormatError(f"{path}: truncated header length")
    (n,) = struct.unpack("<I", raw)
    blob = fh.read(n)
    if len(blob) != n:
        raise FormatError(f"{path}: header truncated ({len(blob)} of {n} bytes)")
    try:
        header = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: header is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header must be a JSON object")
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"{path}: header missing keys {missing}")
    return header


def read_windpack(path) -> WindFieldSeries:
    with open(path, "rb") as fh:
        h = _read_header(fh, path)
        payload = fh.read()
    try:
        grid = GridSpec.from_dict(h)
        start = datetime.strptime(h["start_time"], "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
        n_time, n_lat, n_lon = int(h["n_time"]), int(h["n_lat"]), int(h["n_lon"])
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{path}: invalid header value: {exc}") from exc
    if (n_lat, n_lon) != grid.shape:
        raise FormatError(f"{path}: n_lat/n_lon {n_lat}x{n_lon} disagree with bounds {grid.shape}")
    if n_time < 1:
        raise FormatError(f"{path}: n_time must be >= 1")
    expected = n_time * 2 * n_lat * n_lon * 4
    if len(payload) != expected:
        raise SizeMismatchError(f"{path}: payload has {len(payload)} bytes, header implies {expected}")
    data = np.frombuffer(payload, dtype="<f4").reshape(n_time, 2, n_lat, n_lon)
    if not np.isfinite(data).all():
        raise NonFiniteError(f"{path}: payload contains NaN or Inf")
    data = data.astype(np.float32)
    return WindFieldSeries(grid, start, data[:, 0].copy(), data[:, 1].copy(),
                           altitude=float(h["altitude_m"]), step=timedelta(seconds=int(h["step_seconds"])))


# ---------------------------------------------------------------- CSV ingestion

_CSV_NAME = re.compile(r"^(\d{8}T\d{2})\.csv$")


def ingest_csv(directory, grid: GridSpec, altitude: float = 50.0, tol: float = 1e-6) -> WindFieldSeries:
    """Assemble hourly `YYYYMMDDTHH.csv` files (columns lat,lon,u,v) into a series."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"not a directory: {directory}")
    stamped = []
    for p in directory.iterdir():
        m = _CSV_NAME.match(p.name)
        if m:
            t = datetime.strptime(m.group(1), "%Y%m%dT%H").replace(tzinfo=timezone.utc)
            stamped.append((t, p))
    if not stamped:
        raise ValidationError(f"no YYYYMMDDTHH.csv files in {directory}")
    stamped.sort()
    for (t0, _), (t1, p1) in zip(stamped, stamped[1:]):
        if t1 - t0 != timedelta(hours=1):
            raise ValidationError(f"missing hour between {_iso(t0)} and {_iso(t1)} ({p1.name})")

    n_lat, n_lon = grid.shape
    u = np.empty((len(stamped), n_lat, n_lon), dtype=np.float32)
    v = np.empty_like(u)
    for ti, (_, p) in enumerate(stamped):
        u[ti], v[ti] = _read_hour(p, grid, tol)
    return WindFieldSeries(grid, stamped[0][0], u, v, altitude=altitude)


def _read_hour(path: Path, grid: GridSpec, tol: float):
    n_lat, n_lon = grid.shape
    u = np.full((n_lat, n_lon), np.nan, dtype=np.float32)
    v = np.full_like(u, np.nan)
    seen = np.zeros((n_lat, n_lon), dtype=bool)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["lat", "lon", "u", "v"]:
            raise ValidationError(f"{path.name}: header must be 'lat,lon,u,v'")
        for row in reader:
            lat, lon = float(row["lat"]), float(row["lon"])
            i = int(round((lat - grid.lat_min) / grid.d_lat))
            j = int(round((lon - grid.lon_min) / grid.d_lon))
            if (not (0 <= i < n_lat and 0 <= j < n_lon)
                    or abs(grid.lat_min + i * grid.d_lat - lat) > tol
                    or abs(grid.lon_min + j * grid.d_lon - lon) > tol):
                raise CoordinateError(f"{path.name}: unknown coordinate lat={lat} lon={lon}")
            if seen[i, j]:
                raise CoordinateError(f"{path.name}: duplicate coordinate lat={lat} lon={lon}")
            seen[i, j] = True
            u[i, j], v[i, j] = float(row["u"]), float(row["v"])
    if not seen.all():
        i, j = np.argwhere(~seen)[0]
        raise CoordinateError(
            f"{path.name}: missing coordinate lat={grid.lats[i]:g} lon={grid.lons[j]:g}"
        )
    return u, v


def write_csv_hours(series: WindFieldSeries, directory) -> list[Path]:
    """Inverse of ingest_csv; handy for fixtures and data exchange."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lats, lons = series.grid.lats, series.grid.lons
    out = []
    for t in range(series.n_time):
        p = directory / (series.time_at(t).strftime("%Y%m%dT%H") + ".csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lat", "lon", "u", "v"])
            for i, lat in enumerate(lats):
                for j, lon in enumerate(lons):
                    w.writerow([repr(float(lat)), repr(float(lon)),
                                repr(float(series.u[t, i, j])), repr(float(series.v[t, i, j]))])
        out.append(p)
    return out


# ---------------------------------------------------------------- synthetic fields


@dataclass(frozen=True)
class SynthParams:
    """Recipe constants for the synthetic generators.

    advective: `n_waves` traveling plane waves per component with wavelengths
    in `wavelength_cells` and periods in `period_hours`, a spatially uniform
    diurnal cycle, a slow seasonal amplitude modulation, and small-scale
    gusts (white noise smoothed over `gust_corr_cells`) carried eastward by
    one grid cell per hour.
    noise: per-point AR(1) processes whose coefficients are drawn from
    `noise_phi` and whose innovations are white noise smoothed over
    `noise_corr_cells` grid cells.
    mixture: (1 - weight) * advective + weight * noise.
    """

    weight: float = 0.7
    mean_u: float = 5.0
    mean_v: float = 1.0
    n_waves: int = 4
    wave_amplitude: float = 2.0
    wavelength_cells: tuple[float, float] = (16.0, 48.0)
    period_hours: tuple[float, float] = (18.0, 96.0)
    diurnal_amplitude: float = 2.0
    seasonal_period_hours: float = 24.0 * 91.0
    seasonal_depth: float = 0.3
    gust_amplitude: float = 0.7
    gust_corr_cells: float = 0.7
    jitter_std: float = 0.02
    noise_std: float = 3.0
    noise_phi: tuple[float, float] = (0.05, 0.95)
    noise_corr_cells: float = 1.0


def synth_field(kind: str, grid: GridSpec, hours: int, seed: int,
                params: SynthParams | None = None, start_time: datetime = _EPOCH,
                altitude: float = 50.0) -> WindFieldSeries:
    """Deterministic synthetic (u, v) series of `kind` advective, noise or mixture."""
    params = params or SynthParams()
    if kind not in ("advective", "noise", "mixture"):
        raise ValidationError(f"unknown synthetic kind {kind!r}")
    if not 0.0 <= params.weight <= 1.0:
        raise ValidationError(f"mixture weight must lie in [0, 1], got {params.weight}")
    if hours < 1:
        raise ValidationError("hours must be >= 1")
    adv_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    if kind == "advective":
        u, v = _advective(grid, hours, adv_seed, params)
    elif kind == "noise":
        u, v = _noise(grid, hours, noise_seed, params)
    else:
        au, av = _advective(grid, hours, adv_seed, params)
        nu, nv = _noise(grid, hours, noise_seed, params)
        w = params.weight
        u, v = (1 - w) * au + w * nu, (1 - w) * av + w * nv
    return WindFieldSeries(grid, start_time, u.astype(np.float32), v.astype(np.float32), altitude=altitude)


def _advective(grid, hours, seed_seq, p: SynthParams):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    t = np.arange(hours, dtype=np.float64)[:, None, None]
    rows = np.arange(grid.n_lat, dtype=np.float64)[None, :, None]
    cols = np.arange(grid.n_lon, dtype=np.float64)[None, None, :]
    season = 1.0 + p.seasonal_depth * np.sin(2 * np.pi * t / p.seasonal_period_hours)
    out = []
    for mean in (p.mean_u, p.mean_v):
        field = np.zeros((hours, grid.n_lat, grid.n_lon))
        for _ in range(p.n_waves):
            wavelength = rng.uniform(*p.wavelength_cells)
            heading = rng.uniform(0, 2 * np.pi)
            kr, kc = 2 * np.pi / wavelength * np.sin(heading), 2 * np.pi / wavelength * np.cos(heading)
            omega = 2 * np.pi / rng.uniform(*p.period_hours)
            amp = p.wave_amplitude * rng.uniform(0.5, 1.0)
            field += amp * np.sin(kr * rows + kc * cols - omega * t + rng.uniform(0, 2 * np.pi))
        field += p.diurnal_amplitude * np.sin(2 * np.pi * t / 24.0 + rng.uniform(0, 2 * np.pi))
        field = mean + season * field
        field += p.gust_amplitude * _gusts(grid, hours, rng, p.gust_corr_cells)
        field += p.jitter_std * rng.standard_normal(field.shape)
        out.append(field)
    return out


def _gusts(grid, hours, rng, corr_cells):
    # frozen pattern on an extended strip; column c at hour t shows strip column c - t
    strip = rng.standard_normal((grid.n_lat, grid.n_lon + hours))
    if corr_cells > 0:
        strip = gaussian_filter(strip, corr_cells)
    strip /= strip.std()
    cols = np.arange(grid.n_lon)[None, :] - np.arange(hours)[:, None] + hours
    return strip[:, cols].transpose(1, 0, 2)


def _noise(grid, hours, seed_seq, p: SynthParams):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    out = []
    for mean in (p.mean_u, p.mean_v):
        phi = rng.uniform(*p.noise_phi, size=grid.shape)
        eps = rng.standard_normal((hours, grid.n_lat, grid.n_lon))
        if p.noise_corr_cells > 0:
            eps = gaussian_filter(eps, sigma=(0, p.noise_corr_cells, p.noise_corr_cells))
            eps /= eps.std()
        scale = np.sqrt(1.0 - phi ** 2)
        x = np.empty_like(eps)
        x[0] = eps[0]
        for k in range(1, hours):
            x[k] = phi * x[k - 1] + scale * eps[k]
        out.append(mean + p.noise_std * x)
    return out


# ---------------------------------------------------------------- windowing


@dataclass
class SampleWindow:
    input: np.ndarray          # [2][T][S][S]
    target: tuple[float, float]
    anchor_time: datetime


@dataclass
class SampleSet:
    """Windowed examples stored as stacked arrays.

    inputs: [N][2][T][S][S]; targets: [N][2]; anchors: time index of each
    target in the source series; split: 0/1/2 for train/val/test.
    """

    inputs: np.ndarray
    targets: np.ndarray
    anchors: np.ndarray
    split: np.ndarray
    T: int
    S: int
    start_time: datetime
    step: timedelta = timedelta(hours=1)
    standardized: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, i) -> SampleWindow:
        return SampleWindow(self.inputs[i], (float(self.targets[i, 0]), float(self.targets[i, 1])),
                            self.anchor_time(i))

    def __iter__(self) -> Iterator[SampleWindow]:
        return (self[i] for i in range(len(self)))

    @property
    def samples(self) -> list[SampleWindow]:
        return list(self)

    @property
    def labels(self) -> list[str]:
        return [SPLIT_NAMES[s] for s in self.split]

    def anchor_time(self, i) -> datetime:
        return self.start_time + int(self.anchors[i]) * self.step

    def indices(self, split: str) -> np.ndarray:
        return np.flatnonzero(self.split == SPLIT_NAMES.index(split))

    def part(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.indices(split)
        return self.inputs[idx], self.targets[idx]

    @property
    def train_end(self) -> int:
        """One past the last series hour used by a training target."""
        idx = self.indices("train")
        return int(self.anchors[idx].max()) + 1 if len(idx) else 0

    def check_no_leakage(self) -> None:
        last = -1
        for k in range(3):
            a = self.anchors[self.split == k]
            if len(a) == 0:
                continue
            if a.min() <= last:
                raise ValidationError(f"split {SPLIT_NAMES[k]} overlaps an earlier split")
            last = a.max()
        if np.any(np.diff(self.split) < 0):
            raise ValidationError("splits are not contiguous")

    def with_arrays(self, inputs, targets, standardized: bool) -> "SampleSet":
        return SampleSet(inputs, targets, self.anchors, self.split, self.T, self.S,
                         self.start_time, self.step, standardized, dict(self.meta))


def split_counts(n: int, splits: Sequence[float] = DEFAULT_SPLITS) -> tuple[int, int, int]:
    if len(splits) != 3 or any(f < 0 for f in splits) or not math.isclose(sum(splits), 1.0):
        raise ValidationError(f"splits must be three non-negative fractions summing to 1, got {splits}")
    b1 = int(round(n * splits[0]))
    b2 = int(round(n * (splits[0] + splits[1])))
    return b1, b2 - b1, n - b2


def make_samples(series: WindFieldSeries, T: int, S: int, splits: Sequence[float] = DEFAULT_SPLITS,
                 first_anchor: int | None = None) -> SampleSet:
    """Cut (input window, next-hour target) pairs centered on the prediction point.

    The target at hour index a uses inputs from hours a-T .. a-1. Anchors
    start at `first_anchor` (default T, the first fully observed window);
    passing a larger value lets runs with different T share one test set.
    """
    if T not in VALID_T:
        raise ValidationError(f"T must be one of {VALID_T}, got {T}")
    if S not in VALID_S:
        raise ValidationError(f"S must be one of {VALID_S}, got {S}")
    rs, cs = series.grid.crop_slices(S)
    L = series.n_time
    first = T if first_anchor is None else int(first_anchor)
    if first < T:
        raise ValidationError(f"first_anchor {first} < T={T}")
    if L < T + 1 or first >= L:
        raise ValidationError(f"series of length {L} too short for T={T} (first anchor {first})")

    anchors = np.arange(first, L)
    stacked = np.stack([series.u[:, rs, cs], series.v[:, rs, cs]], axis=1).astype(np.float64)
    # windows[a] covers hours a .. a+T-1; anchor a needs window starting at a-T
    win = np.lib.stride_tricks.sliding_window_view(stacked, T, axis=0)  # [L-T+1][2][S][S][T]
    inputs = np.ascontiguousarray(win[anchors - T].transpose(0, 1, 4, 2, 3))
    r, c = series.grid.prediction_point
    targets = np.stack([series.u[anchors, r, c], series.v[anchors, r, c]], axis=1).astype(np.float64)

    n_tr, n_va, _ = split_counts(len(anchors), splits)
    split = np.full(len(anchors), 2, dtype=np.int8)
    split[:n_tr] = 0
    split[n_tr:n_tr + n_va] = 1
    out = SampleSet(inputs, targets, anchors, split, T, S, series.start_time, series.step)
    out.check_no_leakage()
    return out
