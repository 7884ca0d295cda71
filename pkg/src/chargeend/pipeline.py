"""Baseline and charge-end strategy run in lockstep over a profile."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .baseline import init_baseline, step_baseline
from .corrector import CorrectorState, StrategyParams, step_corrector
from .profile import ChargeProfile, StepOutput, trace_rows


@dataclass
class PipelineTrace:
    t: np.ndarray
    soc_baseline: np.ndarray
    soc_vb: np.ndarray
    soc_corr: np.ndarray
    active: np.ndarray

    def rows(self, t_offset: float = 0.0) -> list[StepOutput]:
        return trace_rows(self.t - t_offset, self.soc_baseline, self.soc_vb, self.soc_corr, self.active)


def run_strategy(
    profile: ChargeProfile,
    soc0: float,
    params: StrategyParams,
    *,
    eta: float = 1.0,
    snap: bool = True,
    backend=None,
) -> PipelineTrace:
    """Feed every sample through the baseline and the corrector.

    `backend` selects a kernel module explicitly (see
    :func:`kernels.available_backends`); default is the import-time choice.
    """
    init_baseline(soc0, profile.capacity_ah, eta)  # validates inputs
    a = profile.arrays()
    impl = backend or kernels
    b, vb, corr, active = impl.run_pipeline(
        a["t"],
        a["current"],
        a["v_max"],
        a["t_min"],
        a["t_max"],
        a["mode"],
        float(soc0),
        profile.capacity_ah,
        float(eta),
        bool(snap),
        params.v_100,
        params.gamma,
        params.t_debounce,
        params.denom_epsilon,
        params.map_ac.as_tuple(),
        params.map_dc.as_tuple(),
        params.alpha_ac.rates,
        params.alpha_ac.alphas,
        params.alpha_dc.rates,
        params.alpha_dc.alphas,
        params.capacity_ah,
    )
    return PipelineTrace(a["t"], b, vb, corr, active)


def run_strategy_reference(
    profile: ChargeProfile,
    soc0: float,
    params: StrategyParams,
    *,
    eta: float = 1.0,
    snap: bool = True,
) -> PipelineTrace:
    """Same as :func:`run_strategy`, composed from the per-step functions.

    Slow; exists to cross-check the kernels.
    """
    state = init_baseline(soc0, profile.capacity_ah, eta)
    cstate = CorrectorState()
    outs = []
    prev_t = None
    for s in profile.samples:
        if prev_t is None:
            if snap and s.v_max >= params.v_100:
                state = init_baseline(100.0, profile.capacity_ah, eta)
        else:
            state = step_baseline(state, s, s.t - prev_t, params.v_100, snap=snap)
        prev_t = s.t
        cstate, out = step_corrector(cstate, s, state.soc, params, s.t)
        outs.append(out)
    return PipelineTrace(
        np.array([o.t for o in outs]),
        np.array([o.soc_baseline for o in outs]),
        np.array([o.soc_vb for o in outs]),
        np.array([o.soc_corr for o in outs]),
        np.array([o.active for o in outs], dtype=bool),
    )
