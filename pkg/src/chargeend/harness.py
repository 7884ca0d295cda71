"""Experiment orchestration: profiles in, traces, summaries and plots out.

Times in every output are re-based so the charge-complete sample is t = 0
and earlier samples are negative.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .calibration import AnchorRule, backward_soc, collect_anchors, fit_threshold_map
from .cellsim import ChargerSpec, EcmCell, generate_profile
from .config import ExperimentConfig, ProfileSource, update_threshold_map
from .corrector import StrategyParams
from .detector import ThresholdMap
from .pipeline import PipelineTrace, run_strategy
from .profile import BmsMode, ChargeProfile, load_profile_csv, read_trace_csv, write_profile_csv, write_trace_csv
from .svg import Series, line_chart

log = logging.getLogger(__name__)

SUMMARY_HEADER = (
    "profile_id",
    "injected_error_pct",
    "final_corrected_error_pct",
    "final_baseline_nosnap_error_pct",
    "activation_time_s",
    "max_active_jump_pct",
    "gamma",
)
TRACE_NAME = re.compile(r"^(?P<pid>.+)__inj(?P<inj>[-+]?[0-9.]+)__g(?P<gamma>[0-9.]+)$")


class HarnessError(RuntimeError):
    pass


@dataclass
class LoadedProfile:
    """A profile already in memory, with its ground-truth SOC."""

    id: str
    profile: ChargeProfile
    truth: np.ndarray


@dataclass(frozen=True)
class RunSummary:
    profile_id: str
    injected_error: float
    final_corrected_error: float
    final_baseline_nosnap_error: float
    activation_time: float  # nan when the strategy never activated
    max_active_jump: float
    gamma: float = 1.0

    def row(self) -> list:
        return [
            self.profile_id,
            f"{self.injected_error:.6f}",
            f"{self.final_corrected_error:.6f}",
            f"{self.final_baseline_nosnap_error:.6f}",
            "nan" if math.isnan(self.activation_time) else f"{self.activation_time:.6f}",
            f"{self.max_active_jump:.6f}",
            f"{self.gamma:g}",
        ]


@dataclass
class RunResult:
    profile_id: str
    injection: float
    gamma: float
    t_rel: np.ndarray
    truth: np.ndarray
    trace: PipelineTrace
    baseline_nosnap: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return self.trace.soc_corr - self.truth

    @property
    def activation_index(self) -> Optional[int]:
        idx = np.flatnonzero(self.trace.active)
        return int(idx[0]) if len(idx) else None

    @property
    def max_active_jump(self) -> float:
        active = self.trace.active
        steps = np.abs(np.diff(self.trace.soc_corr))[active[1:]]
        return float(steps.max()) if len(steps) else 0.0

    @property
    def snap_jump(self) -> float:
        """Largest single-step rise of the snapping baseline."""
        d = np.diff(self.trace.soc_baseline)
        return float(d.max()) if len(d) else 0.0

    def first_time_error_removed(self, fraction: float = 0.5) -> float:
        """Re-based time at which `fraction` of the activation-time error is gone."""
        k0 = self.activation_index
        if k0 is None:
            return math.nan
        err = self.error
        target = (1.0 - fraction) * err[k0]
        if err[k0] >= 0:
            hits = np.flatnonzero(err[k0:] <= target)
        else:
            hits = np.flatnonzero(err[k0:] >= target)
        return float(self.t_rel[k0 + hits[0]]) if len(hits) else math.nan

    def summary(self) -> RunSummary:
        k0 = self.activation_index
        return RunSummary(
            self.profile_id,
            self.injection,
            float(self.trace.soc_corr[-1] - self.truth[-1]),
            float(self.baseline_nosnap[-1] - self.truth[-1]),
            float(self.t_rel[k0]) if k0 is not None else math.nan,
            self.max_active_jump,
            self.gamma,
        )


@dataclass
class ExperimentSpec:
    profiles: list[Union[ProfileSource, LoadedProfile]]
    error_injections: Sequence[float] = (-5.0, -15.0, -25.0, -35.0)
    params: StrategyParams = field(default_factory=StrategyParams)
    gamma_variants: Sequence[float] = (1.0,)
    outputs: Optional[Path] = None
    cell: EcmCell = field(default_factory=EcmCell)
    chargers: dict[str, ChargerSpec] = field(default_factory=dict)
    dt: float = 2.0
    imbalance_v: float = 0.0
    eta: float = 1.0

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, outputs: Optional[Path] = None) -> "ExperimentSpec":
        return cls(
            profiles=list(cfg.profiles),
            error_injections=tuple(cfg.injections),
            params=cfg.params,
            gamma_variants=tuple(cfg.gammas),
            outputs=Path(outputs) if outputs is not None else None,
            cell=cfg.cell,
            chargers=dict(cfg.chargers),
            dt=cfg.dt,
            imbalance_v=cfg.imbalance_v,
            eta=cfg.eta,
        )


def is_full_charge(profile: ChargeProfile, v_100: float) -> bool:
    return profile.samples[-1].v_max >= v_100


def simulate_source(
    src: ProfileSource,
    cell: EcmCell,
    chargers: dict[str, ChargerSpec],
    dt: float,
    v_100: float,
    imbalance_v: float = 0.0,
) -> LoadedProfile:
    try:
        charger = chargers[src.charger]
    except KeyError:
        raise HarnessError(f"profile {src.id}: unknown charger {src.charger!r}") from None
    temps = (src.t_min, src.t_max)
    profile, truth = generate_profile(
        replace(cell, soc_true=src.soc0, **dict(src.cell_overrides)),
        charger,
        src.dt if src.dt is not None else dt,
        lambda _t: temps,
        v_100=v_100,
        imbalance_v=imbalance_v,
        name=src.id,
    )
    return LoadedProfile(src.id, profile, truth)


def resolve_profile(src: Union[ProfileSource, LoadedProfile], spec: ExperimentSpec) -> LoadedProfile:
    if isinstance(src, LoadedProfile):
        return src
    if src.simulated:
        return simulate_source(src, spec.cell, spec.chargers, spec.dt, spec.params.v_100, spec.imbalance_v)
    try:
        profile = load_profile_csv(src.source)
    except OSError as exc:
        raise HarnessError(f"profile {src.id}: cannot read {src.source}: {exc}") from None
    if not is_full_charge(profile, spec.params.v_100):
        raise HarnessError(
            f"profile {src.id}: final v_max {profile.samples[-1].v_max} V below V_100 "
            f"{spec.params.v_100} V; not a full-charge session, no ground truth"
        )
    return LoadedProfile(src.id, profile, backward_soc(profile))


def run_single(
    loaded: LoadedProfile,
    injection: float,
    params: StrategyParams,
    eta: float = 1.0,
) -> RunResult:
    soc0 = min(100.0, max(0.0, float(loaded.truth[0]) + injection))
    params = replace(params, capacity_ah=loaded.profile.capacity_ah)
    trace = run_strategy(loaded.profile, soc0, params, eta=eta)
    nosnap = run_strategy(loaded.profile, soc0, params, eta=eta, snap=False).soc_baseline
    t = trace.t
    return RunResult(loaded.id, injection, params.gamma, t - t[-1], np.asarray(loaded.truth), trace, nosnap)


def trace_filename(pid: str, injection: float, gamma: float) -> str:
    return f"{pid}__inj{injection:+g}__g{gamma:g}.csv"


def _write_truth(path: Path, t_rel: np.ndarray, truth: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("time_s", "soc_true_pct"))
        for a, b in zip(t_rel, truth):
            w.writerow((f"{a:.6f}", f"{b:.6f}"))


def _read_truth(path: Path) -> np.ndarray:
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)


def write_summary_csv(path: Path, summaries: Sequence[RunSummary]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summaries:
            w.writerow(s.row())


def run_grid(spec: ExperimentSpec) -> list[RunResult]:
    """All (profile x injection x gamma) runs, in memory."""
    results = []
    for src in spec.profiles:
        loaded = resolve_profile(src, spec)
        for gamma in spec.gamma_variants:
            params = replace(spec.params, gamma=float(gamma))
            for inj in spec.error_injections:
                results.append(run_single(loaded, float(inj), params, spec.eta))
    return results


def run_experiment(spec: ExperimentSpec) -> list[RunSummary]:
    """Run the grid; with ``spec.outputs`` set, write traces, truth and summary."""
    results = run_grid(spec)
    summaries = [r.summary() for r in results]
    if spec.outputs is not None:
        out = Path(spec.outputs)
        (out / "traces" / "truth").mkdir(parents=True, exist_ok=True)
        written = set()
        for r in results:
            write_trace_csv(out / "traces" / trace_filename(r.profile_id, r.injection, r.gamma), r.trace.rows(r.trace.t[-1]))
            if r.profile_id not in written:
                _write_truth(out / "traces" / "truth" / f"{r.profile_id}.csv", r.t_rel, r.truth)
                written.add(r.profile_id)
        write_summary_csv(out / "summary.csv", summaries)
    return summaries


def simulate_profiles(cfg: ExperimentConfig, out_dir: Path) -> list[Path]:
    """Generate every simulated profile in `cfg` as CSV, with truth alongside."""
    out_dir = Path(out_dir)
    (out_dir / "truth").mkdir(parents=True, exist_ok=True)
    paths = []
    for src in cfg.profiles:
        if not src.simulated:
            continue
        loaded = simulate_source(src, cfg.cell, cfg.chargers, cfg.dt, cfg.params.v_100, cfg.imbalance_v)
        path = out_dir / f"{src.id}.csv"
        write_profile_csv(path, loaded.profile)
        t = loaded.profile.arrays()["t"]
        _write_truth(out_dir / "truth" / f"{src.id}.csv", t - t[-1], loaded.truth)
        paths.append(path)
    return paths


def profile_mode(profile: ChargeProfile) -> Optional[BmsMode]:
    """The single charging mode of a session, or None if absent or mixed."""
    modes = {s.mode for s in profile.samples if s.mode.is_charging}
    return modes.pop() if len(modes) == 1 else None


def run_calibration(
    profile_dir: str | Path,
    rule: AnchorRule,
    mode: BmsMode,
    out_config: Optional[str | Path] = None,
    v_100: Optional[float] = None,
) -> ThresholdMap:
    """Fit the threshold map for `mode` from the full-charge CSVs in `profile_dir`."""
    profile_dir = Path(profile_dir)
    if not profile_dir.is_dir():
        raise HarnessError(f"{profile_dir} is not a directory")
    usable = []
    for path in sorted(profile_dir.glob("*.csv")):
        try:
            p = load_profile_csv(path)
        except Exception as exc:
            log.warning("skipping %s: %s", path.name, exc)
            continue
        if profile_mode(p) != mode:
            continue
        if not is_full_charge(p, v_100 if v_100 is not None else p.v_100):
            log.warning("skipping %s: not a full-charge session", path.name)
            continue
        usable.append(p)
    anchors = collect_anchors(usable, rule)
    if not anchors:
        raise HarnessError(f"no usable {mode.name} full-charge profiles in {profile_dir}")
    tmap = fit_threshold_map(anchors)
    log.info("fitted %s threshold map from %d profiles: %s", mode.name, len(anchors), tmap)
    if out_config is not None:
        key = "map_dc" if mode == BmsMode.DC_CHARGE else "map_ac"
        update_threshold_map(out_config, key, tmap)
    return tmap


def emit_plots(trace_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """One SVG per trace, plus one error overlay per (profile, gamma) group."""
    trace_dir, out_dir = Path(trace_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(trace_dir.glob("*.csv"))
    if not files:
        raise HarnessError(f"no trace files in {trace_dir}")
    groups: dict[tuple[str, str], list[tuple[float, np.ndarray, np.ndarray]]] = {}
    written = []
    truth_cache: dict[str, Optional[np.ndarray]] = {}
    for f in files:
        rows = read_trace_csv(f)
        t = np.array([r.t for r in rows])
        base = np.array([r.soc_baseline for r in rows])
        corr = np.array([r.soc_corr for r in rows])
        m = TRACE_NAME.match(f.stem)
        pid = m["pid"] if m else f.stem
        if pid not in truth_cache:
            tp = trace_dir / "truth" / f"{pid}.csv"
            truth_cache[pid] = _read_truth(tp)[:, 1] if tp.exists() else None
        truth = truth_cache[pid]
        if truth is not None and len(truth) != len(t):
            raise HarnessError(f"{f.name}: truth has {len(truth)} rows, trace has {len(t)}")
        series = [Series("baseline", t, base), Series("corrected", t, corr)]
        if truth is not None:
            series.append(Series("true SOC", t, truth, dashed=True))
        svg = line_chart(series, f.stem, "time to charge end [s]", "SOC [%]")
        path = out_dir / f"{f.stem}.svg"
        path.write_text(svg)
        written.append(path)
        if m:
            y = corr - truth if truth is not None else corr
            groups.setdefault((pid, m["gamma"]), []).append((float(m["inj"]), t, y))
    for (pid, gamma), runs in sorted(groups.items()):
        runs.sort(key=lambda r: -r[0])
        series = [Series(f"injected {inj:+g}%", t, y) for inj, t, y in runs]
        has_truth = truth_cache.get(pid) is not None
        svg = line_chart(
            series,
            f"{pid} corrected SOC{' error' if has_truth else ''} (gamma={gamma})",
            "time to charge end [s]",
            "SOC error [%]" if has_truth else "SOC [%]",
        )
        path = out_dir / f"{pid}__g{gamma}__overlay.svg"
        path.write_text(svg)
        written.append(path)
    return written
