"""From predicted mmol/L of KOH / H3PO4 to kg/ha of K2O / P2O5.

Chain per nutrient:

    mmol/L compound  x scaling factor
                     / 2                       (2 KOH -> K2O, 2 H3PO4 -> P2O5)
                     x oxide molar mass        -> mg/L (ppm)
                     x rho * d * area / 1e6    -> kg/ha (2.25 at the defaults)

Nitrogen is not converted; there is no lab reference for it.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (CalibrationDegenerateError, CalibrationMissingError, ParseError,
                     ValidationError)
from .kvconfig import float_values, format_kv, read_kv

# compound -> (oxide, index in the model's target vector)
NUTRIENTS = {"H3PO4": ("P2O5", 1), "KOH": ("K2O", 2)}
OXIDE_OF = {"KOH": "K2O", "H3PO4": "P2O5"}


@dataclass(frozen=True)
class ConversionConstants:
    bulk_density_g_cm3: float = 1.5
    depth_m: float = 0.15
    area_ha: float = 1.0
    molar_mass: dict = field(default_factory=lambda: {
        "HNO3": 63.0, "H3PO4": 98.0, "KOH": 56.1, "K2O": 94.2, "P2O5": 141.94})

    def __post_init__(self):
        if not (self.bulk_density_g_cm3 > 0 and self.depth_m > 0 and self.area_ha > 0):
            raise ValidationError("conversion constants must be positive")
        if any(not m > 0 for m in self.molar_mass.values()):
            raise ValidationError("molar masses must be positive")

    def soil_mass_kg(self):
        """Mass of the soil layer: rho (kg/m^3) * depth (m) * area (m^2)."""
        return self.bulk_density_g_cm3 * 1000.0 * self.depth_m * self.area_ha * 1e4

    def ppm_factor(self):
        """kg/ha per mg/L: one mg per kg of soil scaled by the layer mass."""
        return self.soil_mass_kg() / 1e6 / self.area_ha


def mmol_to_ppm(conc_mmol, molar_mass):
    """mmol/L * g/mol = mg/L."""
    if np.any(np.asarray(conc_mmol) < 0):
        raise ValidationError("concentration must be >= 0")
    return conc_mmol * molar_mass


def ppm_to_kg_per_ha(conc_ppm, constants=ConversionConstants()):
    if np.any(np.asarray(conc_ppm) < 0):
        raise ValidationError("concentration must be >= 0")
    return conc_ppm * constants.ppm_factor()


def compound_to_oxide(conc_mmol, compound):
    if compound not in OXIDE_OF:
        raise ValidationError(f"no oxide conversion for {compound!r}; expected KOH or H3PO4")
    if np.any(np.asarray(conc_mmol) < 0):
        raise ValidationError("concentration must be >= 0")
    return conc_mmol / 2.0


def compound_to_kg_per_ha(conc_mmol, compound, constants=ConversionConstants()):
    oxide = OXIDE_OF.get(compound)
    ox = compound_to_oxide(conc_mmol, compound)
    return ppm_to_kg_per_ha(mmol_to_ppm(ox, constants.molar_mass[oxide]), constants)


# ---------------------------------------------------------------- soil samples


@dataclass(frozen=True)
class SoilSample:
    sample_id: str
    ph: float
    conductivity: float
    avg_power: float
    lab_p2o5: float | None = None
    lab_k2o: float | None = None

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.ph, self.conductivity, self.avg_power)):
            raise ValidationError(f"sample {self.sample_id}: physical values must be finite")
        for v in (self.lab_p2o5, self.lab_k2o):
            if v is not None and not v > 0:
                raise ValidationError(f"sample {self.sample_id}: lab values must be > 0")

    @property
    def features(self):
        return (self.ph, self.conductivity, self.avg_power)

    def lab(self, compound):
        return self.lab_p2o5 if compound == "H3PO4" else self.lab_k2o

    @property
    def has_lab(self):
        return self.lab_p2o5 is not None and self.lab_k2o is not None


SOIL_COLUMNS = ("sample_id", "ph", "conductivity_s_per_m", "avg_power_w")
LAB_COLUMNS = ("lab_p2o5_kg_ha", "lab_k2o_kg_ha")


def read_soil_samples(path):
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    if not rows:
        raise ParseError("empty soil-sample file", path)
    header = tuple(h.strip() for h in rows[0])
    if header not in (SOIL_COLUMNS, SOIL_COLUMNS + LAB_COLUMNS):
        raise ParseError(f"unexpected header {header}", path, 1)
    samples = []
    for row_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", path, row_no)
        try:
            phys = [float(v) for v in row[1:4]]
            lab = [float(v) if v.strip() else None for v in row[4:]]
        except ValueError:
            raise ParseError("non-numeric value", path, row_no) from None
        samples.append(SoilSample(row[0].strip(), *phys, *lab))
    return samples


def soil_samples_csv(samples, with_lab=None):
    if with_lab is None:
        with_lab = any(s.lab_p2o5 is not None or s.lab_k2o is not None for s in samples)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SOIL_COLUMNS + (LAB_COLUMNS if with_lab else ()))
    for s in samples:
        row = [s.sample_id, *(repr(float(v)) for v in s.features)]
        if with_lab:
            row += ["" if v is None else repr(float(v)) for v in (s.lab_p2o5, s.lab_k2o)]
        w.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class CalibrationSet:
    """Scaling factors keyed ``(model_kind, compound)``, e.g. ``("mlp", "KOH")``."""

    factors: dict
    sample_ids: tuple = ()

    def __post_init__(self):
        for key, f in self.factors.items():
            if not f > 0:
                raise ValidationError(f"scaling factor for {key} must be > 0")

    def factor(self, model, compound):
        try:
            return self.factors[(model, compound)]
        except KeyError:
            raise CalibrationMissingError(f"no scaling factor for {model}.{compound.lower()}") from None

    def to_text(self):
        return format_kv({f"{m}.{c.lower()}": float(v) for (m, c), v in sorted(self.factors.items())})

    @classmethod
    def from_file(cls, path):
        values = float_values(read_kv(path), path)
        factors = {}
        for key, v in values.items():
            model, _, compound = key.rpartition(".")
            if not model or compound.upper() not in ("HNO3", "H3PO4", "KOH"):
                raise ParseError(f"calibration key must look like 'model.compound', got {key!r}", path)
            factors[(model, compound.upper())] = v
        return cls(factors)


def identity_calibration(model):
    return CalibrationSet({(model, c): 1.0 for c in NUTRIENTS})


REFERENCE_FACTORS = CalibrationSet({("mlp", "H3PO4"): 0.054, ("mlp", "KOH"): 0.234,
                                     ("forest", "H3PO4"): 0.093, ("forest", "KOH"): 0.123})


def predict_soil(pipeline, samples, calibration, constants=ConversionConstants(), model_name=None):
    """Per-sample ``{"P2O5": kg/ha, "K2O": kg/ha}`` for a fitted pipeline.

    Negative model outputs are clipped to 0 before conversion.
    """
    name = model_name or pipeline.kind
    factors = {c: calibration.factor(name, c) for c in NUTRIENTS}
    if not samples:
        return []
    raw = pipeline.predict(np.array([s.features for s in samples]))
    out = []
    for row in np.clip(raw, 0.0, None):
        out.append({OXIDE_OF[c]: float(compound_to_kg_per_ha(row[idx] * factors[c], c, constants))
                    for c, (_, idx) in NUTRIENTS.items()})
    return out


def calibrate(predictions, samples, model, n_calibration=5, ratio_of_means=False):
    """Scaling factors from the first ``n_calibration`` samples.

    ``predictions`` are uncalibrated kg/ha dicts (factor 1). The default
    factor is the mean of per-sample lab/prediction ratios; ``ratio_of_means``
    switches to sum(lab) / sum(prediction).
    """
    if n_calibration < 1:
        raise ValidationError("need at least one calibration sample")
    if len(samples) < n_calibration or len(predictions) < n_calibration:
        raise ValidationError(f"need {n_calibration} calibration samples, got {len(samples)}")
    cal = samples[:n_calibration]
    factors = {}
    for compound, (oxide, _) in NUTRIENTS.items():
        lab = np.array([s.lab(compound) if s.lab(compound) is not None else np.nan for s in cal])
        if np.any(np.isnan(lab)):
            raise ValidationError(f"calibration samples lack lab {oxide} values")
        pred = np.array([p[oxide] for p in predictions[:n_calibration]])
        if np.any(pred == 0):
            raise CalibrationDegenerateError(f"uncalibrated {oxide} prediction is zero; cannot scale")
        factors[(model, compound)] = float(lab.sum() / pred.sum()) if ratio_of_means else float(np.mean(lab / pred))
    return CalibrationSet(factors, tuple(s.sample_id for s in cal))


def percentage_error(predictions, lab, denominator="lab"):
    """Mean absolute percentage error, in percent.

    ``denominator="lab"`` divides each absolute error by the lab value (the
    usual MAPE). ``"prediction"`` divides by the predicted value instead.
    """
    pred = np.asarray(predictions, dtype=float)
    lab = np.asarray(lab, dtype=float)
    if pred.shape != lab.shape:
        raise ValidationError("predictions and lab values differ in length")
    if denominator not in ("lab", "prediction"):
        raise ValidationError(f"denominator must be 'lab' or 'prediction', got {denominator!r}")
    base = lab if denominator == "lab" else pred
    if np.any(base <= 0):
        raise ValidationError(f"{denominator} values must be > 0 for percentage error")
    return float(np.mean(np.abs(pred - lab) / base) * 100.0)
