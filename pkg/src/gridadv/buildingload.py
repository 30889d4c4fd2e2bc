"""Synthetic year of 10-minute building telemetry and electrical load.

Feature schema (fixed order, F = 2 + zones + ... see FEATURE_NAMES):
  0 outdoor temperature [C]
  1 solar radiation [0..1]
  2 occupancy fraction [0..1]
  3..3+zones-1 zone setpoints [C]
  last two: hour-of-day phase (sin, cos)

Load [kW] = base + hvac_gain * |temp - mean setpoint| * (schedule + 0.2)
          + plug_gain * schedule + noise,

where schedule is the true occupancy: a 24/7 staffing floor plus weekday
daytime ramps, all scaled by a per-day business factor that drifts through
the day. The occupancy feature is a noisy sensor reading of the schedule,
so the forecaster has to denoise the sensor to track current demand.

The simulator trades thermodynamic fidelity for transparency: every
coefficient is a documented parameter and the whole year is a pure function
of (params, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError
from .tensor import RandomSource, as_tensor, seeded_shuffle
from .train import Dataset

STEPS_PER_DAY = 144  # 10-minute resolution
CSV_HEADER = "# gridadv-bld v1 F={n_features}"


@dataclass
class BuildingParams:
    steps: int = 52_560  # one year at 10-minute resolution
    zones: int = 4
    annual_mean_temp: float = 10.0
    annual_swing: float = 6.0
    diurnal_swing: float = 4.0
    temp_noise_sigma: float = 0.2
    occupied_peak: float = 0.95
    weekend_peak: float = 0.55  # reduced weekend operations
    night_occupancy: float = 0.35  # 24/7 baseline staffing fraction
    occupancy_noise_sigma: float = 0.005  # sensor noise on the occupancy column
    # per-day business multiplier; breaks pure time-of-day predictability so
    # the forecaster has to read the occupancy channel itself
    day_factor_range: tuple[float, float] = (0.75, 1.15)
    # intra-day drift of the business multiplier (random walk per 10-min step);
    # makes the most recent occupancy readings the informative ones
    walk_sigma: float = 0.004
    setpoint_base: float = 22.0
    zone_offset_max: float = 0.5
    # independent per-zone daily setpoint adjustment; decorrelates the zone
    # columns so each zone's (small) load coefficient is identifiable
    setpoint_jitter: float = 0.7
    base_load: float = 150.0  # kW
    hvac_gain: float = 10.0  # kW per degree C of setpoint-temperature gap
    plug_gain: float = 1600.0  # kW at full occupancy
    load_noise_sigma: float = 3.0

    def validate(self) -> None:
        if self.steps < 1 or self.zones < 1:
            raise ConfigError("steps and zones must be positive")
        if self.base_load <= 0:
            raise ConfigError("base load must be positive")

    @property
    def n_features(self) -> int:
        return 3 + self.zones + 2

    def feature_names(self) -> list[str]:
        return (
            ["temp_c", "solar", "occupancy"]
            + [f"setpoint_{z}_c" for z in range(self.zones)]
            + ["hod_sin", "hod_cos"]
        )

    def attackable_columns(self) -> list[int]:
        """Occupancy and setpoint columns: what a BMS intruder can falsify."""
        return [2] + [3 + z for z in range(self.zones)]


def _daily_shape(hod: np.ndarray) -> np.ndarray:
    """Fraction of the day-peak extra staffing: ramp up 06:00-09:00, hold
    until 17:00, ramp down 17:00-20:00, zero overnight."""
    shape = np.zeros_like(hod)
    shape = np.where((hod >= 6) & (hod < 9), (hod - 6) / 3.0, shape)
    shape = np.where((hod >= 9) & (hod < 17), 1.0, shape)
    shape = np.where((hod >= 17) & (hod < 20), (20 - hod) / 3.0, shape)
    return shape


def simulate_year(params: BuildingParams, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Returns (features[N x F], load[N]). Week structure starts on Monday."""
    params.validate()
    root = RandomSource(seed)
    n = params.steps
    step = np.arange(n)
    hod = (step % STEPS_PER_DAY) * 24.0 / STEPS_PER_DAY
    day = step // STEPS_PER_DAY
    weekend = (day % 7) >= 5  # days 0..4 Mon-Fri

    year_phase = 2.0 * np.pi * step / 52_560.0
    # coldest around day ~15, warmest mid-year
    temp = (
        params.annual_mean_temp
        - params.annual_swing * np.cos(year_phase)
        + params.diurnal_swing * 0.5 * np.sin(2.0 * np.pi * (hod - 9.0) / 24.0)
        + root.child("temp-noise").normal(0.0, params.temp_noise_sigma, n)
    )

    solar_clear = np.maximum(0.0, np.sin(np.pi * (hod - 6.0) / 12.0))
    season = 0.75 + 0.25 * -np.cos(year_phase)
    cloud = np.clip(
        1.0 - np.abs(root.child("cloud").normal(0.0, 0.2, n)), 0.0, 1.0
    )
    solar = np.clip(solar_clear * season * cloud, 0.0, 1.0)

    n_days = int(np.ceil(n / STEPS_PER_DAY))
    factor_rng = root.child("day-factor")
    day_factor = factor_rng.uniform(
        params.day_factor_range[0], params.day_factor_range[1], n_days
    )
    # business multiplier: re-drawn each day, drifting through the day as a
    # random walk so only recent occupancy readings pin down current demand
    steps_in_day = step % STEPS_PER_DAY
    drift = np.cumsum(factor_rng.normal(0.0, params.walk_sigma, n))
    day_start = step - steps_in_day
    drift -= drift[day_start]  # restart the walk at each midnight
    business = np.clip(day_factor[day] + drift, 0.5, 1.3)
    peak = np.where(weekend, params.weekend_peak, params.occupied_peak)
    occ_sched = (
        params.night_occupancy
        + (peak - params.night_occupancy) * _daily_shape(hod)
    ) * business
    # The occupancy column is a noisy sensor reading; demand follows the
    # schedule itself, so the forecaster has to denoise the sensor by
    # filtering it over the window.
    occ_noise = root.child("occupancy-noise").normal(
        0.0, params.occupancy_noise_sigma, n
    )
    occupancy = np.clip(occ_sched + occ_noise, 0.0, 1.0)

    zone_rng = root.child("zone-offsets")
    offsets = zone_rng.uniform(-params.zone_offset_max, params.zone_offset_max, params.zones)
    jitter = root.child("setpoint-jitter").uniform(
        -params.setpoint_jitter, params.setpoint_jitter, (n_days, params.zones)
    )
    setpoints = params.setpoint_base + offsets[None, :] + jitter[day]

    hod_sin = np.sin(2.0 * np.pi * hod / 24.0)
    hod_cos = np.cos(2.0 * np.pi * hod / 24.0)

    features = np.column_stack([temp, solar, occupancy, setpoints, hod_sin, hod_cos])

    mean_sp = setpoints.mean(axis=1)
    load = (
        params.base_load
        + params.hvac_gain * np.abs(temp - mean_sp) * (occ_sched + 0.2)
        + params.plug_gain * occ_sched
        + root.child("load-noise").normal(0.0, params.load_noise_sigma, n)
    )
    return features, load


@dataclass
class Normalization:
    """Per-feature and target min-max maps fitted on a training portion."""

    feat_min: np.ndarray
    feat_max: np.ndarray
    target_min: float
    target_max: float

    @classmethod
    def fit(cls, windows: np.ndarray, targets: np.ndarray) -> "Normalization":
        flat = windows.reshape(-1, windows.shape[-1])
        return cls(
            feat_min=flat.min(axis=0),
            feat_max=flat.max(axis=0),
            target_min=float(targets.min()),
            target_max=float(targets.max()),
        )

    def _span(self) -> np.ndarray:
        span = self.feat_max - self.feat_min
        return np.where(span == 0.0, 1.0, span)

    def normalize(self, windows: np.ndarray) -> np.ndarray:
        return (windows - self.feat_min) / self._span()

    def denormalize(self, windows: np.ndarray) -> np.ndarray:
        return windows * self._span() + self.feat_min

    def normalize_target(self, y):
        span = self.target_max - self.target_min or 1.0
        return (y - self.target_min) / span

    def denormalize_target(self, y):
        span = self.target_max - self.target_min or 1.0
        return y * span + self.target_min

    def to_dict(self) -> dict:
        return {
            "feat_min": self.feat_min.tolist(),
            "feat_max": self.feat_max.tolist(),
            "target_min": self.target_min,
            "target_max": self.target_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Normalization":
        return cls(
            feat_min=np.asarray(d["feat_min"], dtype=np.float64),
            feat_max=np.asarray(d["feat_max"], dtype=np.float64),
            target_min=float(d["target_min"]),
            target_max=float(d["target_max"]),
        )


@dataclass
class SequenceDataset:
    """(window, next-step load) pairs in physical units plus their
    normalization record. windows: N x T x F; targets: N."""

    windows: np.ndarray
    targets: np.ndarray
    norm: Normalization

    def __len__(self) -> int:
        return len(self.windows)

    def to_dataset(self) -> Dataset:
        """Normalized view suitable for fit()."""
        return Dataset(
            self.norm.normalize(self.windows),
            self.norm.normalize_target(self.targets),
        )


def make_windows(
    table: np.ndarray, loads: np.ndarray, memory: int, fit_norm: bool = True
) -> SequenceDataset:
    """Sliding windows of `memory` steps, stride 1; target is the load at the
    step just past the window. Normalization is fitted over the given data
    (refit on the train side after holdout_split)."""
    table = as_tensor(table)
    loads = as_tensor(loads)
    n = len(table)
    if n <= memory:
        raise ConfigError(f"need more than {memory} steps, got {n}")
    count = n - memory
    windows = np.ascontiguousarray(
        np.lib.stride_tricks.sliding_window_view(table, memory, axis=0)[
            :count
        ].transpose(0, 2, 1)
    )
    targets = loads[memory:]
    norm = Normalization.fit(windows, targets) if fit_norm else Normalization(
        feat_min=np.zeros(table.shape[1]),
        feat_max=np.ones(table.shape[1]),
        target_min=0.0,
        target_max=1.0,
    )
    return SequenceDataset(windows, targets, norm)


def holdout_split(
    ds: SequenceDataset, test_fraction: float, seed: int
) -> tuple[SequenceDataset, SequenceDataset]:
    """Shuffled window split; normalization refitted on the train side and
    shared with the test side."""
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test fraction must be in (0, 1), got {test_fraction}")
    n = len(ds)
    perm = seeded_shuffle(n, RandomSource(seed))
    n_test = int(np.floor(n * test_fraction))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    norm = Normalization.fit(ds.windows[train_idx], ds.targets[train_idx])
    return (
        SequenceDataset(ds.windows[train_idx], ds.targets[train_idx], norm),
        SequenceDataset(ds.windows[test_idx], ds.targets[test_idx], norm),
    )


def write_csv(table: np.ndarray, loads: np.ndarray, path) -> None:
    """`step,feat_0,...,load` rows under a schema-version header."""
    n_features = table.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER.format(n_features=n_features) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["step"] + [f"feat_{i}" for i in range(n_features)] + ["load"])
        for i, (row, load) in enumerate(zip(table, loads)):
            writer.writerow([i] + [repr(float(v)) for v in row] + [repr(float(load))])


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3:
        raise ParseError(f"{path}: missing header or data")
    if not lines[0].startswith("# gridadv-bld v1 F="):
        raise ParseError(f"{path}:1: bad header {lines[0]!r}")
    try:
        n_features = int(lines[0].split("F=")[1])
    except (IndexError, ValueError):
        raise ParseError(f"{path}:1: malformed header {lines[0]!r}")
    table, loads = [], []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != n_features + 2:
            raise ParseError(
                f"{path}:{lineno}: expected {n_features + 2} fields, got {len(parts)}"
            )
        try:
            table.append([float(p) for p in parts[1 : 1 + n_features]])
            loads.append(float(parts[-1]))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}")
    return np.asarray(table), np.asarray(loads)
