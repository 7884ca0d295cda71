"""Synthetic ground-truth charge sessions from a 1-RC equivalent circuit.

Stands in for vehicle field data: the strategy only consumes v_max,
current, temperatures and mode, so a monotone OCV plus the usual charge
taper is enough.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import kernels
from .baseline import SECONDS_PER_HOUR
from .profile import DEFAULT_V_100, BmsMode, ChargeProfile, ChargeSample

# 11 knots, 0..100 % in 10 % steps
DEFAULT_OCV = (
    (0.0, 3.00),
    (10.0, 3.45),
    (20.0, 3.55),
    (30.0, 3.62),
    (40.0, 3.68),
    (50.0, 3.75),
    (60.0, 3.84),
    (70.0, 3.93),
    (80.0, 4.02),
    (90.0, 4.10),
    (100.0, 4.20),
)

TempTrace = Callable[[float], tuple[float, float]]


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EcmCell:
    capacity_ah: float = 100.0
    ocv_curve: tuple[tuple[float, float], ...] = DEFAULT_OCV
    r0: float = 0.0006
    r1: float = 0.0004
    c1: float = 50_000.0
    soc_true: float = 20.0
    v_rc: float = 0.0
    temp_c: float = 25.0

    def __post_init__(self):
        curve = tuple((float(s), float(v)) for s, v in self.ocv_curve)
        object.__setattr__(self, "ocv_curve", curve)
        if len(curve) < 2:
            raise ValueError("OCV curve needs at least two knots")
        for (s0, v0), (s1, v1) in zip(curve, curve[1:]):
            if not (s1 > s0 and v1 > v0):
                raise ValueError("OCV curve must be strictly increasing in SOC and voltage")
        if not 0.0 <= self.soc_true <= 100.0:
            raise ValueError(f"soc_true must be in [0, 100], got {self.soc_true}")
        if min(self.r0, self.r1, self.c1) <= 0 or self.capacity_ah <= 0:
            raise ValueError("r0, r1, c1 and capacity_ah must be positive")

    @property
    def ocv_soc(self) -> np.ndarray:
        return np.array([s for s, _ in self.ocv_curve], dtype=np.float64)

    @property
    def ocv_v(self) -> np.ndarray:
        return np.array([v for _, v in self.ocv_curve], dtype=np.float64)

    def ocv(self, soc: float) -> float:
        return float(np.interp(soc, self.ocv_soc, self.ocv_v))


class ChargerKind(enum.Enum):
    AC_CC_CV = "ac"
    DC_MULTI_STEP = "dc"

    @property
    def mode(self) -> BmsMode:
        return BmsMode.AC_CHARGE if self is ChargerKind.AC_CC_CV else BmsMode.DC_CHARGE


@dataclass(frozen=True)
class ChargerSpec:
    """CC schedule by SOC band, capped by a CV setpoint.

    ``bands`` holds ``(soc_upper, current)`` pairs; the current applies
    while the cell SOC is below ``soc_upper``, the last band applies to
    the end. An AC CC-CV charger is a single band.
    """

    kind: ChargerKind
    bands: tuple[tuple[float, float], ...]
    cv_voltage_v: float = DEFAULT_V_100
    cutoff_current_a: float = 1.0

    def __post_init__(self):
        bands = tuple((float(u), float(i)) for u, i in self.bands)
        object.__setattr__(self, "bands", bands)
        if not bands:
            raise ValueError("charger needs at least one current band")
        if any(i <= 0 for _, i in bands):
            raise ValueError("band currents must be positive")
        if any(b[0] <= a[0] for a, b in zip(bands, bands[1:])):
            raise ValueError("band SOC edges must be strictly increasing")
        if not self.cutoff_current_a > 0:
            raise ValueError("cutoff_current_a must be positive")

    @classmethod
    def ac(cls, current_a: float, cv_voltage_v: float = DEFAULT_V_100, cutoff_current_a: float = 1.0):
        return cls(ChargerKind.AC_CC_CV, ((100.0, current_a),), cv_voltage_v, cutoff_current_a)

    @classmethod
    def dc(cls, bands, cv_voltage_v: float = DEFAULT_V_100, cutoff_current_a: float = 1.0):
        return cls(ChargerKind.DC_MULTI_STEP, tuple(bands), cv_voltage_v, cutoff_current_a)

    @property
    def cc_current_a(self) -> float:
        return max(i for _, i in self.bands)


def step_cell(cell: EcmCell, current: float, dt: float) -> tuple[EcmCell, float]:
    """Hold `current` for `dt` seconds; returns the new cell and terminal voltage."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    soc = cell.soc_true + 100.0 * current * dt / (SECONDS_PER_HOUR * cell.capacity_ah)
    soc = min(100.0, max(0.0, soc))
    a = math.exp(-dt / (cell.r1 * cell.c1))
    v_rc = a * cell.v_rc + cell.r1 * (1.0 - a) * current
    new = replace(cell, soc_true=soc, v_rc=v_rc)
    return new, new.ocv(soc) + v_rc + cell.r0 * current


def _constant_temps(t: float) -> tuple[float, float]:
    return (25.0, 25.0)


def generate_profile(
    cell: EcmCell,
    charger: ChargerSpec,
    dt: float = 2.0,
    temp_trace: Optional[TempTrace] = None,
    *,
    v_100: float = DEFAULT_V_100,
    imbalance_v: float = 0.0,
    max_steps: int = 500_000,
    name: str = "sim",
) -> tuple[ChargeProfile, np.ndarray]:
    """Charge `cell` until the CV setpoint is held at or below the cutoff current.

    Returns the telemetry profile and the true SOC at every sample. v_max
    is the cell terminal voltage plus `imbalance_v`.
    """
    if not cell.soc_true < 100.0:
        raise ValueError("initial SOC must be below 100%")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if charger.cv_voltage_v < v_100:
        raise ValueError(f"CV setpoint {charger.cv_voltage_v} V below V_100 {v_100} V")
    temp_trace = temp_trace or _constant_temps
    try:
        t, cur, v, soc, _, _ = kernels.simulate_charge(
            cell.ocv_soc,
            cell.ocv_v,
            cell.capacity_ah,
            cell.r0,
            cell.r1,
            cell.c1,
            cell.soc_true,
            cell.v_rc,
            float(dt),
            np.array([u for u, _ in charger.bands], dtype=np.float64),
            np.array([i for _, i in charger.bands], dtype=np.float64),
            charger.cv_voltage_v,
            charger.cutoff_current_a,
            int(max_steps),
        )
    except kernels.SimulationError as exc:
        raise SimulationError(f"{name}: {exc}") from None
    mode = charger.kind.mode
    samples = []
    for k in range(len(t)):
        t_lo, t_hi = temp_trace(float(t[k]))
        samples.append(ChargeSample(float(t[k]), float(cur[k]), float(v[k]) + imbalance_v, t_lo, t_hi, mode))
    return ChargeProfile(samples, capacity_ah=cell.capacity_ah, v_100=v_100, name=name), soc
