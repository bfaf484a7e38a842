"""Synthetic acid-base phantom dataset.

Covers the bench arithmetic used to prepare the three stock solutions, the
enumeration of fixed-volume mixtures, and a forward model that turns a
mixture into pH, conductivity and a V-I sweep.

Forward chemistry: HNO3 and KOH dissociate fully, H3PO4 only through its
first step (Ka1), water through Kw. pH comes from the charge balance

    [H+] + [K+] = [OH-] + [NO3-] + [H2PO4-]

and the cell conductivity is the sum of limiting molar conductivities
weighted by the free-ion concentrations. The cell is treated as ohmic.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import curves
from .composition import SolutionComposition
from .curves import CellGeometry, VICurve
from .dataset import FeatureTable
from .errors import InfeasibleDilutionError, ValidationError
from .kvconfig import float_values, read_kv
from .seeding import rng_for

COMPOUNDS = ("HNO3", "H3PO4", "KOH")
MOLAR_MASS = {"HNO3": 63.0, "H3PO4": 98.0, "KOH": 56.1}

__all__ = [
    "SolutionComposition", "StockSolution", "IonModel", "DEFAULT_STOCKS",
    "dilute", "koh_molarity", "stock_molarity_from_density", "enumerate_mixtures",
    "ion_concentrations", "forward_ph", "model_conductivity", "forward_sweep",
    "generate_sweeps", "generate_dataset",
]


@dataclass(frozen=True)
class StockSolution:
    compound: str
    molarity: float  # mol/L
    volume: float = 210.0  # mL

    def __post_init__(self):
        if self.compound not in COMPOUNDS:
            raise ValidationError(f"unknown compound {self.compound!r}; expected one of {COMPOUNDS}")
        if not self.molarity > 0:
            raise ValidationError("stock molarity must be > 0")
        if not self.volume > 0:
            raise ValidationError("stock volume must be > 0")


DEFAULT_STOCKS = (
    StockSolution("HNO3", 0.08),
    StockSolution("H3PO4", 0.005),
    StockSolution("KOH", 0.535),
)


@dataclass(frozen=True)
class IonModel:
    """Limiting molar conductivities (S cm^2/mol) and equilibrium constants."""

    lambda_h: float = 349.8
    lambda_oh: float = 198.0
    lambda_k: float = 73.5
    lambda_no3: float = 71.4
    lambda_h2po4: float = 33.0
    ka1: float = 7.1e-3
    kw: float = 1e-14

    def __post_init__(self):
        for f in fields(self):
            if f.name.startswith("lambda_") and not getattr(self, f.name) > 0:
                raise ValidationError(f"{f.name} must be > 0")
        if not 0 < self.ka1 < 1:
            raise ValidationError("ka1 must lie in (0, 1)")
        if not 1e-15 <= self.kw <= 1e-13:
            raise ValidationError(f"kw should be close to 1e-14, got {self.kw}")

    @classmethod
    def from_file(cls, path):
        values = float_values(read_kv(path), Path(path))
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValidationError(f"unknown ion-model keys: {', '.join(unknown)}")
        return cls(**values)


# ---------------------------------------------------------------- preparation


def dilute(stock, target_molarity, target_volume):
    """Stock volume (mL) needed for ``target_volume`` mL at ``target_molarity``: V1 = M2 V2 / M1."""
    if not target_volume > 0:
        raise ValidationError("target volume must be > 0")
    if target_molarity < 0:
        raise ValidationError("target molarity must be >= 0")
    if target_molarity >= stock.molarity:
        raise InfeasibleDilutionError(
            f"cannot reach {target_molarity} M from a {stock.molarity} M stock by dilution")
    return target_molarity * target_volume / stock.molarity


def stock_molarity_from_density(density_g_per_ml, molar_mass):
    """Molarity of a neat reagent from its label density."""
    return density_g_per_ml * 1000.0 / molar_mass


def koh_molarity(mass_g, final_volume_mL):
    if mass_g < 0:
        raise ValidationError("mass must be >= 0")
    if not final_volume_mL > 0:
        raise ValidationError("final volume must be > 0")
    return mass_g / (MOLAR_MASS["KOH"] * final_volume_mL) * 1000.0


def _ordered_stocks(stocks):
    by_name = {s.compound: s for s in stocks}
    if len(stocks) != 3 or set(by_name) != set(COMPOUNDS):
        raise ValidationError("need exactly one stock each of HNO3, H3PO4 and KOH")
    return tuple(by_name[c] for c in COMPOUNDS)


def mixture_volumes(step_mL=2.0, total_mL=40.0):
    """All (v_hno3, v_h3po4, v_koh) in multiples of ``step_mL`` summing to ``total_mL``."""
    if not (step_mL > 0 and total_mL > 0):
        raise ValidationError("step and total must be > 0")
    ratio = total_mL / step_mL
    n = round(ratio)
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValidationError(f"total {total_mL} mL is not divisible by step {step_mL} mL")
    return [(a * step_mL, b * step_mL, (n - a - b) * step_mL)
            for a in range(n + 1) for b in range(n + 1 - a)]


def enumerate_mixtures(step_mL=2.0, total_mL=40.0, stocks=DEFAULT_STOCKS):
    """Fixed-volume mixtures of the three stocks; C(total/step + 2, 2) of them.

    Concentrations are returned in mmol/L.
    """
    ordered = _ordered_stocks(stocks)
    out = []
    for vols in mixture_volumes(step_mL, total_mL):
        c = [s.molarity * v / total_mL * 1000.0 for s, v in zip(ordered, vols)]
        out.append(SolutionComposition(*c, total_volume=total_mL))
    return out


# ---------------------------------------------------------------- forward model


def _charge_residual(log_h, k, n, p, ions):
    h = 10.0 ** log_h
    return h + k - ions.kw / h - n - p * ions.ka1 / (ions.ka1 + h)


def _solve_log_h(comp, ions, tol=1e-10):
    n, p, k = (c / 1000.0 for c in comp.as_tuple())
    lo, hi = -16.0, 2.0
    # residual is strictly increasing in [H+]; widen until the root is bracketed
    while _charge_residual(lo, k, n, p, ions) > 0:
        lo -= 4.0
    while _charge_residual(hi, k, n, p, ions) < 0:
        hi += 4.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _charge_residual(mid, k, n, p, ions) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ion_concentrations(comp, ions=IonModel()):
    """Free-ion molar concentrations (mol/L) at equilibrium."""
    h = 10.0 ** _solve_log_h(comp, ions)
    p = comp.c_h3po4 / 1000.0
    return {
        "h": h,
        "oh": ions.kw / h,
        "k": comp.c_koh / 1000.0,
        "no3": comp.c_hno3 / 1000.0,
        "h2po4": p * ions.ka1 / (ions.ka1 + h),
    }


def forward_ph(comp, ions=IonModel()):
    return -_solve_log_h(comp, ions)


def model_conductivity(comp, ions=IonModel()):
    """Cell conductivity in S/m from the free-ion concentrations."""
    conc = ion_concentrations(comp, ions)
    # S cm^2/mol * mol/L = 1e-3 S/cm = 0.1 S/m
    return 0.1 * sum(getattr(ions, f"lambda_{name}") * c for name, c in conc.items())


def forward_sweep(comp, ions=IonModel(), geometry=CellGeometry(), noise_sd=0.01, seed=0, rng=None):
    """Simulated V-I sweep on the canonical 101-point grid.

    I(V) = sigma * (A / l) * V, each sample multiplied by (1 + noise_sd * N(0, 1)).
    ``rng`` overrides ``seed`` when given.
    """
    if noise_sd < 0:
        raise ValidationError("noise_sd must be >= 0")
    v = curves.canonical_grid()
    current = model_conductivity(comp, ions) / geometry.cell_constant * v
    if noise_sd > 0:
        if rng is None:
            rng = np.random.default_rng(seed)
        current = current * (1.0 + noise_sd * rng.standard_normal(v.size))
    return VICurve(v, current, curves.CurveLabel(comp, forward_ph(comp, ions)))


def generate_sweeps(stocks=DEFAULT_STOCKS, ions=IonModel(), geometry=CellGeometry(),
                    noise_sd=0.01, seed=0, step_mL=2.0, total_mL=40.0):
    """Yield one labeled sweep per mixture.

    Each mixture draws noise from its own stream derived from ``(seed, index)``
    so any subset can be regenerated independently.
    """
    for index, comp in enumerate(enumerate_mixtures(step_mL, total_mL, stocks)):
        yield forward_sweep(comp, ions, geometry, noise_sd, rng=rng_for(seed, "phantom", index))


def generate_dataset(stocks=DEFAULT_STOCKS, ions=IonModel(), geometry=CellGeometry(),
                     noise_sd=0.01, seed=0, step_mL=2.0, total_mL=40.0):
    """Feature table (pH, conductivity, average power) -> concentrations (mmol/L)."""
    X, Y = [], []
    for sweep in generate_sweeps(stocks, ions, geometry, noise_sd, seed, step_mL, total_mL):
        X.append((sweep.label.ph, curves.conductivity(sweep, geometry), curves.average_power(sweep)))
        Y.append(sweep.label.composition.as_tuple())
    return FeatureTable(np.array(X), np.array(Y))


def curve_filename(curve, digits=6):
    """``<N>-<P>-<K>-<pH>.csv`` stem understood by :func:`curves.parse_label`."""
    c = curve.label.composition

    def fmt(x):
        s = f"{x:.{digits}f}".rstrip("0").rstrip(".")
        return s or "0"

    return "-".join(fmt(x) for x in (*c.as_tuple(), curve.label.ph)) + ".csv"

