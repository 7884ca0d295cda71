"""Charge-end SOC correction for battery packs.

A coulomb-counting baseline is corrected near the end of charge by a
voltage-interpolated estimate, blended in with a C-rate dependent weight
once a debounced, temperature-mapped voltage threshold is crossed.
"""

from .baseline import BaselineState, init_baseline, step_baseline
from .calibration import (
    AlphaCurve,
    SocThreshold,
    TtcThreshold,
    alpha_at,
    anchor_point,
    backward_soc,
    fit_threshold_map,
)
from .cellsim import ChargerKind, ChargerSpec, EcmCell, generate_profile, step_cell
from .corrector import CorrectorState, StrategyParams, mix, soc_vb, step_corrector
from .detector import DetectorState, ThresholdMap, step_detector, threshold_for
from .kernels import BACKEND
from .pipeline import run_strategy
from .profile import (
    BmsMode,
    ChargeProfile,
    ChargeSample,
    StepOutput,
    c_rate,
    load_profile_csv,
    write_trace_csv,
)

__version__ = "0.1.0"
