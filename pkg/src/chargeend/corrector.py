"""Voltage-based SOC estimator, SOC mixer, and the composed strategy step."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .calibration import AlphaCurve, alpha_at
from .detector import DetectorState, ThresholdMap, step_detector
from .profile import BmsMode, ChargeSample, StepOutput, c_rate

DEFAULT_ALPHA_AC = AlphaCurve(((0.02, 1.0), (0.1, 0.9995), (0.3, 0.99), (0.5, 0.95)))
DEFAULT_ALPHA_DC = AlphaCurve(((0.05, 1.0), (0.2, 0.999), (0.5, 0.99), (1.0, 0.95), (2.0, 0.8)))


@dataclass(frozen=True)
class StrategyParams:
    v_100: float = 4.20
    gamma: float = 1.0
    t_debounce: float = 30.0
    map_ac: ThresholdMap = field(default_factory=lambda: ThresholdMap(4.10))
    map_dc: ThresholdMap = field(default_factory=lambda: ThresholdMap(4.12))
    alpha_ac: AlphaCurve = DEFAULT_ALPHA_AC
    alpha_dc: AlphaCurve = DEFAULT_ALPHA_DC
    capacity_ah: float = 100.0
    denom_epsilon: float = 1e-6

    def __post_init__(self):
        if not self.gamma >= 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not self.v_100 > 0:
            raise ValueError(f"v_100 must be positive, got {self.v_100}")
        if not self.t_debounce >= 0:
            raise ValueError(f"t_debounce must be >= 0, got {self.t_debounce}")
        if not self.capacity_ah > 0:
            raise ValueError(f"capacity_ah must be positive, got {self.capacity_ah}")

    def alpha_curve(self, mode: BmsMode) -> AlphaCurve:
        return self.alpha_dc if mode == BmsMode.DC_CHARGE else self.alpha_ac


@dataclass(frozen=True)
class CorrectorState:
    detector: DetectorState = field(default_factory=DetectorState)
    prev_v_max: Optional[float] = None
    prev_soc_corr: Optional[float] = None
    was_active: bool = False


def soc_vb(
    prev_soc_corr: float,
    prev_v_max: float,
    v_max: float,
    v_100: float,
    gamma: float = 1.0,
    denom_epsilon: float = 1e-6,
) -> float:
    """Interpolate SOC toward 100% as v_max approaches v_100, clamped to [0, 100]."""
    d = v_100 - prev_v_max
    # both forms of the guard, since they can disagree by one rounding step
    if d <= denom_epsilon or prev_v_max >= v_100 - denom_epsilon:
        return 100.0
    raw = prev_soc_corr + gamma * ((v_max - prev_v_max) / d) * (100.0 - prev_soc_corr)
    return min(100.0, max(0.0, raw))


def mix(soc_vb: float, soc_baseline: float, alpha: float) -> float:
    """Blend toward the voltage-based estimate; never below the baseline."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if soc_vb > soc_baseline:
        return alpha * soc_vb + (1.0 - alpha) * soc_baseline
    return soc_baseline


def step_corrector(
    state: CorrectorState,
    sample: ChargeSample,
    soc_baseline: float,
    params: StrategyParams,
    now: float,
) -> tuple[CorrectorState, StepOutput]:
    det = step_detector(state.detector, sample, params, now)
    if not det.active:
        return CorrectorState(det), StepOutput(now, soc_baseline, math.nan, soc_baseline, False)
    if not state.was_active:
        # activation edge: seed the recursion with the baseline estimate
        new = CorrectorState(det, sample.v_max, soc_baseline, True)
        return new, StepOutput(now, soc_baseline, soc_baseline, soc_baseline, True)
    vb = soc_vb(
        state.prev_soc_corr, state.prev_v_max, sample.v_max, params.v_100, params.gamma, params.denom_epsilon
    )
    alpha = alpha_at(params.alpha_curve(sample.mode), c_rate(sample.current, params.capacity_ah))
    corr = mix(vb, soc_baseline, alpha)
    return CorrectorState(det, sample.v_max, corr, True), StepOutput(now, soc_baseline, vb, corr, True)
