"""Charge-end detector: mode gating, temperature-mapped threshold, debounce."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from .profile import BmsMode, ChargeSample

if TYPE_CHECKING:
    from .corrector import StrategyParams


@dataclass(frozen=True)
class ThresholdMap:
    """Affine voltage threshold ``c0 + c1*t_min + c2*t_max``."""

    c0: float
    c1: float = 0.0
    c2: float = 0.0

    def __call__(self, t_min: float, t_max: float) -> float:
        v = self.c0 + self.c1 * t_min + self.c2 * t_max
        if not math.isfinite(v):
            raise ValueError(f"threshold map {self} produced non-finite voltage")
        return v

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c0, self.c1, self.c2)


@dataclass(frozen=True)
class DetectorState:
    above_since: Optional[float] = None
    active: bool = False
    mode: Optional[BmsMode] = None  # mode at the previous step; a change resets the timer


def threshold_for(
    map_ac: ThresholdMap, map_dc: ThresholdMap, mode: BmsMode, t_min: float, t_max: float
) -> Optional[float]:
    """Threshold voltage for a charging mode, ``None`` otherwise."""
    if mode == BmsMode.DC_CHARGE:
        return map_dc(t_min, t_max)
    if mode == BmsMode.AC_CHARGE:
        return map_ac(t_min, t_max)
    return None


def step_detector(
    state: DetectorState, sample: ChargeSample, params: "StrategyParams", now: float
) -> DetectorState:
    v_thr = threshold_for(params.map_ac, params.map_dc, sample.mode, sample.t_min, sample.t_max)
    if v_thr is None:
        return DetectorState(None, False, sample.mode)
    if not sample.v_max > v_thr:
        return DetectorState(None, False, sample.mode)
    above_since = state.above_since
    if above_since is None or state.mode != sample.mode:
        above_since = now
    return DetectorState(above_since, now - above_since >= params.t_debounce, sample.mode)
