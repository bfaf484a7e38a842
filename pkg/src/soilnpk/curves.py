"""V-I sweep ingestion and the two electrical features.

A sweep is a voltage ramp from 0 V in 50 mV steps with the measured current
at every step. Two scalar features are derived from it: the average power
(area under the current-voltage curve) and the mean conductivity of the cell.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .composition import SolutionComposition
from .errors import InsufficientDataError, ParseError, ValidationError

VOLTAGE_STEP = 0.05
STEP_TOLERANCE = 1e-9
CANONICAL_SAMPLES = 101
MIN_SAMPLES = 4


@dataclass(frozen=True)
class CellGeometry:
    """Electrode separation ``l`` (m) and immersed electrode area ``A`` (m^2)."""

    electrode_separation_l: float = 0.045
    electrode_area_A: float = 1.26e-4

    def __post_init__(self):
        if not (self.electrode_separation_l > 0 and self.electrode_area_A > 0):
            raise ValidationError("cell geometry must be strictly positive")

    @property
    def cell_constant(self):
        """l / A in 1/m."""
        return self.electrode_separation_l / self.electrode_area_A


@dataclass(frozen=True)
class CurveLabel:
    composition: SolutionComposition
    ph: float


@dataclass(frozen=True)
class VICurve:
    voltages: np.ndarray
    currents: np.ndarray
    label: CurveLabel | None = None
    step: float = field(default=VOLTAGE_STEP, repr=False)

    def __post_init__(self):
        v = np.array(self.voltages, dtype=float)
        i = np.array(self.currents, dtype=float)
        if v.ndim != 1 or i.ndim != 1 or v.shape != i.shape:
            raise ValidationError("voltages and currents must be 1-D arrays of equal length")
        if v.size < 2:
            raise InsufficientDataError(f"a sweep needs at least 2 samples, got {v.size}")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(i)):
            raise ValidationError("sweep contains non-finite values")
        if abs(v[0]) > STEP_TOLERANCE:
            raise ValidationError(f"sweep must start at 0 V, starts at {v[0]}")
        dv = np.diff(v)
        if np.any(dv <= 0):
            raise ValidationError("voltages must be strictly increasing")
        if np.any(np.abs(dv - self.step) > STEP_TOLERANCE):
            raise ValidationError(f"voltage steps must be {self.step} V")
        v.setflags(write=False)
        i.setflags(write=False)
        object.__setattr__(self, "voltages", v)
        object.__setattr__(self, "currents", i)

    def __len__(self):
        return self.voltages.size

    @property
    def n_intervals(self):
        return self.voltages.size - 1


def canonical_grid(n_samples=CANONICAL_SAMPLES, step=VOLTAGE_STEP):
    return np.arange(n_samples) * step


def parse_label(stem):
    """Return the label encoded in a ``<N>-<P>-<K>-<pH>`` stem, or None.

    Tokens are taken from the right so stems with extra leading dashes still
    resolve; any non-numeric or negative token makes the stem unlabeled.
    """
    parts = stem.rsplit("-", 3)
    if len(parts) != 4:
        return None
    try:
        n, p, k, ph = (float(t) for t in parts)
    except ValueError:
        return None
    if not all(math.isfinite(x) and x >= 0 for x in (n, p, k, ph)):
        return None
    return CurveLabel(SolutionComposition(n, p, k), ph)


def parse_curve_file(path, contents=None, current_scale=1.0):
    """Parse a headerless ``voltage,current`` CSV into a :class:`VICurve`.

    ``contents`` may be given to parse text that is not on disk; ``path`` is
    then only used for the label and error messages. ``current_scale``
    converts file units to amperes (1e-3 for files written in mA).
    """
    path = Path(path)
    if contents is None:
        contents = path.read_text()
    voltages, currents = [], []
    for row_no, row in enumerate(csv.reader(io.StringIO(contents)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", path, row_no)
        try:
            v, i = float(row[0]), float(row[1])
        except ValueError:
            raise ParseError(f"non-numeric value in {row!r}", path, row_no) from None
        voltages.append(v)
        currents.append(i * current_scale)
    if not voltages:
        raise ParseError("file contains no data rows", path)
    return VICurve(np.array(voltages), np.array(currents), parse_label(path.stem))


def format_curve(curve):
    """Serialize a curve in the same headerless CSV layout that is parsed."""
    return "".join(f"{v!r},{i!r}\n" for v, i in zip(curve.voltages.tolist(), curve.currents.tolist()))


def simpson(y, h):
    """Composite Simpson quadrature of uniformly spaced samples.

    Triplets of intervals use the 3/8 rule; when the interval count is not a
    multiple of three the tail is closed with one or two 1/3-rule pairs so
    that the result stays exact for cubics. A lone interval (two samples)
    falls back to the trapezoid.
    """
    y = np.asarray(y, dtype=float)
    n = y.size - 1
    if n < 1:
        raise InsufficientDataError("need at least two samples to integrate")
    if n == 1:
        return 0.5 * h * (y[0] + y[1])
    # 3k, 3k+2 = 3k + one pair, 3k+1 = 3(k-1) + two pairs
    n_pairs = {0: 0, 1: 2, 2: 1}[n % 3]
    n38 = n - 2 * n_pairs
    total = 0.0
    if n38:
        a = y[0:n38:3]
        b = y[1:n38:3]
        c = y[2:n38:3]
        d = y[3:n38 + 1:3]
        total += 3.0 * h / 8.0 * float(np.sum(a + 3.0 * b + 3.0 * c + d))
    if n_pairs:
        tail = y[n38:]
        total += h / 3.0 * float(np.sum(tail[0:-1:2] + 4.0 * tail[1::2] + tail[2::2]))
    return total


def average_power(curve):
    """Area under the I-V curve, integral of I dV over the sweep (W)."""
    if len(curve) < MIN_SAMPLES:
        raise InsufficientDataError(f"average power needs at least {MIN_SAMPLES} samples, got {len(curve)}")
    return simpson(curve.currents, curve.step)


def conductivity(curve, geometry=CellGeometry()):
    """Mean of the per-interval conductivities (dI/dV) * l / A, in S/m."""
    if len(curve) < 2:
        raise InsufficientDataError("conductivity needs at least 2 samples")
    slopes = np.diff(curve.currents) / np.diff(curve.voltages)
    return float(np.mean(slopes)) * geometry.cell_constant


def per_interval_coefficient(geometry=CellGeometry(), step=VOLTAGE_STEP, n_intervals=CANONICAL_SAMPLES - 1):
    """Weight applied to each current increment when averaging conductivity."""
    return geometry.cell_constant / (step * n_intervals)


def extract_features(curve, geometry=CellGeometry()):
    return average_power(curve), conductivity(curve, geometry)
