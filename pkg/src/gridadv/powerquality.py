"""Synthetic voltage-waveform dataset: normal, sag, impulse, distortion.

Waveform models (amplitudes in per-unit):
  normal:     A sin(2 pi n / cycle + phi) + noise
  sag:        normal scaled by (1 - alpha) inside a 0.5-2 cycle window
  impulse:    normal plus 1-3 random-sign spikes of 1-3 samples
  distortion: normal plus odd harmonics (orders 3, 5, 7) with random
              coefficients

All draws come from the supplied RandomSource, so generation is a pure
function of (class, params, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, ParseError
from .tensor import RandomSource
from .train import Dataset

CSV_HEADER = "# gridadv-pq v1 L={length}"


class SignalClass(Enum):
    NORMAL = 0
    SAG = 1
    IMPULSE = 2
    DISTORTION = 3


LABEL_NAMES = [c.name.lower() for c in SignalClass]


@dataclass
class SignalParams:
    length: int = 256  # samples per signal
    cycle: int = 64  # samples per fundamental cycle
    amplitude_range: tuple[float, float] = (0.95, 1.05)
    noise_sigma: float = 0.03
    sag_depth_range: tuple[float, float] = (0.3, 0.8)
    sag_duration_cycles: tuple[float, float] = (0.5, 2.0)
    impulse_count_range: tuple[int, int] = (4, 7)
    impulse_magnitude_range: tuple[float, float] = (1.2, 2.0)
    impulse_width_range: tuple[int, int] = (3, 8)
    harmonic_orders: tuple[int, ...] = (3, 5, 7)
    harmonic_coeff_range: tuple[float, float] = (0.03, 0.10)

    def validate(self) -> None:
        if self.length <= 0 or self.cycle <= 0 or self.length % self.cycle != 0:
            raise ConfigError(
                f"signal length {self.length} must be a positive multiple of "
                f"the cycle length {self.cycle}"
            )
        for name in (
            "amplitude_range",
            "sag_depth_range",
            "sag_duration_cycles",
            "impulse_magnitude_range",
            "harmonic_coeff_range",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} has lo > hi: ({lo}, {hi})")
        if self.sag_depth_range[1] >= 1.0:
            raise ConfigError("sag depth must stay below 1")
        if self.noise_sigma < 0:
            raise ConfigError("noise sigma must be >= 0")


def gen_signal(
    cls: SignalClass, params: SignalParams, rng: RandomSource
) -> np.ndarray:
    params.validate()
    n = np.arange(params.length)
    amp = rng.uniform(*params.amplitude_range)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    v = amp * np.sin(2.0 * np.pi * n / params.cycle + phase)

    if cls is SignalClass.SAG:
        alpha = rng.uniform(*params.sag_depth_range)
        duration = int(round(rng.uniform(*params.sag_duration_cycles) * params.cycle))
        duration = max(1, min(duration, params.length))
        start = rng.integers(0, params.length - duration + 1)
        envelope = np.ones(params.length)
        envelope[start : start + duration] = 1.0 - alpha
        v = v * envelope
    elif cls is SignalClass.IMPULSE:
        count = rng.integers(
            params.impulse_count_range[0], params.impulse_count_range[1] + 1
        )
        for _ in range(count):
            mag = rng.uniform(*params.impulse_magnitude_range)
            width = rng.integers(
                params.impulse_width_range[0], params.impulse_width_range[1] + 1
            )
            pos = rng.integers(0, params.length - width + 1)
            v[pos : pos + width] += float(rng.choice_sign()) * mag
    elif cls is SignalClass.DISTORTION:
        for order in params.harmonic_orders:
            coeff = rng.uniform(*params.harmonic_coeff_range)
            h_phase = rng.uniform(0.0, 2.0 * np.pi)
            v = v + coeff * np.sin(2.0 * np.pi * order * n / params.cycle + h_phase)

    if params.noise_sigma > 0:
        v = v + rng.normal(0.0, params.noise_sigma, params.length)
    return v


def gen_dataset(n_per_class: int, params: SignalParams, seed: int) -> Dataset:
    """Balanced 4-class dataset, class-major generation order, seed-determined."""
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    params.validate()
    root = RandomSource(seed)
    n_classes = len(SignalClass)
    inputs = np.empty((n_classes * n_per_class, params.length))
    targets = np.zeros((n_classes * n_per_class, n_classes))
    row = 0
    for cls in SignalClass:
        for i in range(n_per_class):
            rng = root.child(f"{cls.name}:{i}")
            inputs[row] = gen_signal(cls, params, rng)
            targets[row, cls.value] = 1.0
            row += 1
    return Dataset(inputs, targets, LABEL_NAMES)


def write_csv(ds: Dataset, path) -> None:
    """Rows `label_index,v_0,...` after a `# gridadv-pq v1 L=...` header.

    Floats are written with repr, which round-trips 64-bit values exactly.
    """
    length = ds.inputs.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER.format(length=length) + "\n")
        writer = csv.writer(fh)
        for x, y in zip(ds.inputs, ds.targets):
            label = int(np.argmax(y))
            writer.writerow([label] + [repr(float(v)) for v in x])


def read_csv(path) -> Dataset:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    header = lines[0]
    if not header.startswith("# gridadv-pq v1 L="):
        raise ParseError(f"{path}:1: bad header {header!r}")
    try:
        length = int(header.split("L=")[1])
    except (IndexError, ValueError):
        raise ParseError(f"{path}:1: malformed header {header!r}")
    rows = []
    labels = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != length + 1:
            raise ParseError(
                f"{path}:{lineno}: expected {length + 1} fields, got {len(parts)}"
            )
        try:
            labels.append(int(parts[0]))
            rows.append([float(p) for p in parts[1:]])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    n_classes = len(SignalClass)
    targets = np.zeros((len(rows), n_classes))
    for i, label in enumerate(labels):
        if not (0 <= label < n_classes):
            raise ParseError(f"{path}:{i + 2}: label {label} out of range")
        targets[i, label] = 1.0
    return Dataset(np.asarray(rows), targets, LABEL_NAMES)
