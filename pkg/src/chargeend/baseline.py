"""Coulomb-counting baseline estimator with snap-to-100% at V_100%."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .profile import ChargeSample

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class BaselineState:
    soc: float
    capacity_ah: float
    coulombic_efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.soc <= 100.0:
            raise ValueError(f"soc must be in [0, 100], got {self.soc}")
        if not self.capacity_ah > 0:
            raise ValueError(f"capacity_ah must be positive, got {self.capacity_ah}")
        if not 0.0 < self.coulombic_efficiency <= 1.0:
            raise ValueError(f"coulombic efficiency must be in (0, 1], got {self.coulombic_efficiency}")


def init_baseline(soc0: float, capacity_ah: float, eta: float = 1.0) -> BaselineState:
    return BaselineState(soc0, capacity_ah, eta)


def soc_increment(current: float, dt: float, capacity_ah: float, eta: float = 1.0) -> float:
    """SOC change in percent for `current` held over `dt` seconds."""
    gain = eta if current > 0 else 1.0
    return 100.0 * gain * current * dt / (SECONDS_PER_HOUR * capacity_ah)


def step_baseline(
    state: BaselineState,
    sample: ChargeSample,
    dt: float,
    v_100: float,
    snap: bool = True,
) -> BaselineState:
    """Integrate ``sample.current`` over the `dt` seconds ending at the sample.

    With `snap` the estimate jumps to 100 once ``sample.v_max >= v_100``.
    ``snap=False`` gives the pure integrator used to measure residual error.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    soc = state.soc + soc_increment(sample.current, dt, state.capacity_ah, state.coulombic_efficiency)
    soc = min(100.0, max(0.0, soc))
    if snap and sample.v_max >= v_100:
        soc = 100.0
    return replace(state, soc=soc)
