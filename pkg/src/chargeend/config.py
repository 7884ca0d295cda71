"""Experiment configuration file (INI).

Sections::

    [strategy]      v_100, gamma, t_debounce, capacity_ah, denom_epsilon,
                    map_ac / map_dc = c0, c1, c2
                    alpha_ac / alpha_dc = rate:alpha, rate:alpha, ...
    [cell]          capacity_ah, r0, r1, c1, ocv = soc:volts, ..., imbalance_v, dt
    [charger.NAME]  kind = ac|dc, bands = soc_upper:amps, ..., cv_voltage_v, cutoff_current_a
    [profile.ID]    charger = NAME, soc0, t_min, t_max   (simulated; optional
                    per-profile capacity_ah, r0, r1, c1, dt)
                    or source = path/to/profile.csv      (imported)
    [experiment]    injections = -5, -15, ..., gammas = 1, 2, eta
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .calibration import AlphaCurve
from .cellsim import DEFAULT_OCV, ChargerKind, ChargerSpec, EcmCell
from .corrector import StrategyParams
from .detector import ThresholdMap


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileSource:
    id: str
    charger: Optional[str] = None
    soc0: float = 45.0
    t_min: float = 25.0
    t_max: float = 25.0
    source: Optional[Path] = None
    cell_overrides: tuple[tuple[str, float], ...] = ()
    dt: Optional[float] = None

    @property
    def simulated(self) -> bool:
        return self.source is None


@dataclass
class ExperimentConfig:
    params: StrategyParams = field(default_factory=StrategyParams)
    cell: EcmCell = field(default_factory=EcmCell)
    dt: float = 2.0
    imbalance_v: float = 0.0
    chargers: dict[str, ChargerSpec] = field(default_factory=dict)
    profiles: list[ProfileSource] = field(default_factory=list)
    injections: tuple[float, ...] = (-5.0, -15.0, -25.0, -35.0)
    gammas: tuple[float, ...] = (1.0,)
    eta: float = 1.0


_CELL_KEYS = ("capacity_ah", "r0", "r1", "c1")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _pairs(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        a, sep, b = item.partition(":")
        if not sep:
            raise ConfigError(f"expected x:y pair, got {item!r}")
        out.append((float(a), float(b)))
    return tuple(out)


def _fmt_pairs(pairs) -> str:
    return ", ".join(f"{a!r}:{b!r}" for a, b in pairs)


def _fmt_map(m: ThresholdMap) -> str:
    return f"{m.c0!r}, {m.c1!r}, {m.c2!r}"


def _map(text: str) -> ThresholdMap:
    vals = _floats(text)
    if len(vals) == 1:
        return ThresholdMap(vals[0])
    if len(vals) != 3:
        raise ConfigError(f"threshold map needs 1 or 3 coefficients, got {text!r}")
    return ThresholdMap(*vals)


def default_config() -> ExperimentConfig:
    """Nine synthetic sessions, AC CC-CV and DC multi-step, across temperatures."""
    chargers = {
        "ac_slow": ChargerSpec.ac(16.0, cutoff_current_a=0.5),
        "ac": ChargerSpec.ac(20.0, cutoff_current_a=0.5),
        "dc": ChargerSpec.dc(((50.0, 100.0), (75.0, 60.0), (100.0, 30.0)), cutoff_current_a=0.5),
        "dc_fast": ChargerSpec.dc(((60.0, 150.0), (80.0, 80.0), (100.0, 35.0)), cutoff_current_a=0.5),
    }
    P = ProfileSource
    profiles = [
        P("ac_01", "ac", 45.0, 18.0, 22.0),
        P("ac_02", "ac", 55.0, 25.0, 29.0, cell_overrides=(("r0", 0.0009), ("r1", 0.0005))),
        P("ac_03", "ac_slow", 50.0, 8.0, 12.0, cell_overrides=(("capacity_ah", 90.0),), dt=5.0),
        P("ac_04", "ac_slow", 60.0, 30.0, 34.0, cell_overrides=(("r0", 0.0005), ("c1", 80_000.0))),
        P("dc_01", "dc", 45.0, 20.0, 26.0),
        P("dc_02", "dc", 50.0, 10.0, 15.0, cell_overrides=(("r0", 0.0008), ("r1", 0.0006)), dt=1.0),
        P("dc_03", "dc_fast", 40.0, 28.0, 35.0),
        P("dc_04", "dc_fast", 55.0, 15.0, 19.0, cell_overrides=(("capacity_ah", 110.0), ("c1", 30_000.0))),
        P("dc_05", "dc", 60.0, 32.0, 38.0, cell_overrides=(("r0", 0.0005), ("r1", 0.0003)), dt=5.0),
    ]
    return ExperimentConfig(chargers=chargers, profiles=profiles)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    cp = configparser.ConfigParser()
    try:
        with path.open() as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return _from_parser(cp, path.parent)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _from_parser(cp: configparser.ConfigParser, base: Path) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if cp.has_section("strategy"):
        s = cp["strategy"]
        p = cfg.params
        kwargs = {}
        for key in ("v_100", "gamma", "t_debounce", "capacity_ah", "denom_epsilon"):
            if key in s:
                kwargs[key] = s.getfloat(key)
        for key in ("map_ac", "map_dc"):
            if key in s:
                kwargs[key] = _map(s[key])
        for key in ("alpha_ac", "alpha_dc"):
            if key in s:
                kwargs[key] = AlphaCurve(_pairs(s[key]))
        cfg.params = replace(p, **kwargs)
    if cp.has_section("cell"):
        c = cp["cell"]
        kwargs = {k: c.getfloat(k) for k in ("capacity_ah", "r0", "r1", "c1") if k in c}
        if "ocv" in c:
            kwargs["ocv_curve"] = _pairs(c["ocv"])
        cfg.cell = replace(cfg.cell, **kwargs)
        cfg.dt = c.getfloat("dt", cfg.dt)
        cfg.imbalance_v = c.getfloat("imbalance_v", cfg.imbalance_v)
    for sec in cp.sections():
        if sec.startswith("charger."):
            ch = cp[sec]
            kind = ChargerKind(ch.get("kind", "ac").strip().lower())
            cfg.chargers[sec[len("charger."):]] = ChargerSpec(
                kind,
                _pairs(ch["bands"]),
                ch.getfloat("cv_voltage_v", cfg.params.v_100),
                ch.getfloat("cutoff_current_a", 1.0),
            )
    for sec in cp.sections():
        if sec.startswith("profile."):
            pr = cp[sec]
            src = pr.get("source")
            charger = pr.get("charger")
            if src is None and charger not in cfg.chargers:
                raise ConfigError(f"[{sec}] refers to unknown charger {charger!r}")
            overrides = tuple((k, pr.getfloat(k)) for k in _CELL_KEYS if k in pr)
            cfg.profiles.append(
                ProfileSource(
                    sec[len("profile."):],
                    charger,
                    pr.getfloat("soc0", 45.0),
                    pr.getfloat("t_min", 25.0),
                    pr.getfloat("t_max", 25.0),
                    (base / src) if src else None,
                    overrides,
                    pr.getfloat("dt") if "dt" in pr else None,
                )
            )
    if cp.has_section("experiment"):
        e = cp["experiment"]
        if "injections" in e:
            cfg.injections = _floats(e["injections"])
        if "gammas" in e:
            cfg.gammas = _floats(e["gammas"])
        cfg.eta = e.getfloat("eta", cfg.eta)
    return cfg


def to_parser(cfg: ExperimentConfig) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    p = cfg.params
    cp["strategy"] = {
        "v_100": repr(p.v_100),
        "gamma": repr(p.gamma),
        "t_debounce": repr(p.t_debounce),
        "capacity_ah": repr(p.capacity_ah),
        "denom_epsilon": repr(p.denom_epsilon),
        "map_ac": _fmt_map(p.map_ac),
        "map_dc": _fmt_map(p.map_dc),
        "alpha_ac": _fmt_pairs(p.alpha_ac.knots),
        "alpha_dc": _fmt_pairs(p.alpha_dc.knots),
    }
    c = cfg.cell
    cp["cell"] = {
        "capacity_ah": repr(c.capacity_ah),
        "r0": repr(c.r0),
        "r1": repr(c.r1),
        "c1": repr(c.c1),
        "ocv": _fmt_pairs(c.ocv_curve),
        "dt": repr(cfg.dt),
        "imbalance_v": repr(cfg.imbalance_v),
    }
    for name, ch in cfg.chargers.items():
        cp[f"charger.{name}"] = {
            "kind": ch.kind.value,
            "bands": _fmt_pairs(ch.bands),
            "cv_voltage_v": repr(ch.cv_voltage_v),
            "cutoff_current_a": repr(ch.cutoff_current_a),
        }
    for ps in cfg.profiles:
        if ps.simulated:
            sec = {
                "charger": ps.charger,
                "soc0": repr(ps.soc0),
                "t_min": repr(ps.t_min),
                "t_max": repr(ps.t_max),
            }
            sec.update({k: repr(v) for k, v in ps.cell_overrides})
            if ps.dt is not None:
                sec["dt"] = repr(ps.dt)
            cp[f"profile.{ps.id}"] = sec
        else:
            cp[f"profile.{ps.id}"] = {"source": str(ps.source)}
    cp["experiment"] = {
        "injections": ", ".join(repr(x) for x in cfg.injections),
        "gammas": ", ".join(repr(x) for x in cfg.gammas),
        "eta": repr(cfg.eta),
    }
    return cp


def save_config(path: str | Path, cfg: ExperimentConfig) -> None:
    with Path(path).open("w") as fh:
        to_parser(cfg).write(fh)


def update_threshold_map(path: str | Path, key: str, tmap: ThresholdMap) -> None:
    """Set ``[strategy] <key>`` in an existing config, or create a minimal one."""
    path = Path(path)
    cp = configparser.ConfigParser()
    if path.exists():
        cp.read(path)
    if not cp.has_section("strategy"):
        cp.add_section("strategy")
    cp["strategy"][key] = _fmt_map(tmap)
    with path.open("w") as fh:
        cp.write(fh)


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ProfileSource",
    "default_config",
    "load_config",
    "save_config",
    "update_threshold_map",
    "DEFAULT_OCV",
]
