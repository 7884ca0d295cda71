"""Threshold-map training from full-charge profiles, and mixing curves.

Training runs coulomb counting backward from the charge-complete sample
(taken as 100%), picks each profile's anchor sample by an SOC or
time-to-charge rule, and regresses the anchor voltages on temperature.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .baseline import SECONDS_PER_HOUR
from .detector import ThresholdMap
from .profile import ChargeProfile

log = logging.getLogger(__name__)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class SocThreshold:
    soc_threshold: float

    def __post_init__(self):
        if not 0.0 < self.soc_threshold < 100.0:
            raise ValueError(f"soc_threshold must be in (0, 100), got {self.soc_threshold}")


@dataclass(frozen=True)
class TtcThreshold:
    ttc_threshold: float

    def __post_init__(self):
        if not self.ttc_threshold > 0:
            raise ValueError(f"ttc_threshold must be positive, got {self.ttc_threshold}")


AnchorRule = Union[SocThreshold, TtcThreshold]


def parse_rule(text: str) -> AnchorRule:
    """Parse ``soc:<pct>`` or ``ttc:<seconds>``."""
    kind, _, value = text.partition(":")
    kind = kind.strip().lower()
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"bad anchor rule {text!r}; expected soc:<pct> or ttc:<seconds>") from None
    if kind == "soc":
        return SocThreshold(number)
    if kind == "ttc":
        return TtcThreshold(number)
    raise ValueError(f"bad anchor rule {text!r}; expected soc:<pct> or ttc:<seconds>")


@dataclass(frozen=True)
class AlphaCurve:
    """Mixing weight versus C-rate as a knot table."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        knots = tuple((float(c), float(a)) for c, a in self.knots)
        object.__setattr__(self, "knots", knots)
        if not knots:
            raise ValueError("alpha curve needs at least one knot")
        rates = [c for c, _ in knots]
        alphas = [a for _, a in knots]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError(f"alpha curve C-rates must be strictly increasing: {rates}")
        if any(b > a for a, b in zip(alphas, alphas[1:])):
            raise ValueError(f"alpha must be non-increasing in C-rate: {alphas}")
        if any(not 0.0 <= a <= 1.0 for a in alphas):
            raise ValueError(f"alpha values must lie in [0, 1]: {alphas}")

    @property
    def rates(self) -> np.ndarray:
        return np.array([c for c, _ in self.knots], dtype=np.float64)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([a for _, a in self.knots], dtype=np.float64)


def alpha_at(curve: AlphaCurve, c_rate: float) -> float:
    # np.interp clamps to the end values outside the knot range
    return float(np.interp(c_rate, curve.rates, curve.alphas))


def backward_soc(profile: ChargeProfile) -> np.ndarray:
    """SOC per sample, integrating backward from 100% at the last sample.

    Sample ``k`` carries the current that flowed over ``(t[k-1], t[k]]``,
    the same convention the forward baseline uses, so running the baseline
    forward from ``result[0]`` reproduces this trace.
    """
    a = profile.arrays()
    t, cur = a["t"], a["current"]
    n = len(t)
    if n == 0:
        raise CalibrationError("empty profile")
    scale = 100.0 / (SECONDS_PER_HOUR * profile.capacity_ah)
    soc = np.empty(n)
    soc[-1] = 100.0
    for k in range(n - 2, -1, -1):
        soc[k] = soc[k + 1] - scale * cur[k + 1] * (t[k + 1] - t[k])
    return soc


def anchor_index(profile: ChargeProfile, rule: AnchorRule) -> int:
    if isinstance(rule, SocThreshold):
        soc = backward_soc(profile)
        hits = np.nonzero(soc >= rule.soc_threshold)[0]
        if len(hits) == 0:
            raise CalibrationError(f"{profile.name}: backward SOC never reaches {rule.soc_threshold}%")
        return int(hits[0])
    if isinstance(rule, TtcThreshold):
        t = profile.arrays()["t"]
        target = t[-1] - rule.ttc_threshold
        if target < t[0]:
            raise CalibrationError(
                f"{profile.name}: duration {t[-1] - t[0]:.1f} s shorter than TTC threshold {rule.ttc_threshold} s"
            )
        return int(np.searchsorted(t, target, side="right") - 1)
    raise TypeError(f"unknown anchor rule {rule!r}")


def anchor_point(profile: ChargeProfile, rule: AnchorRule) -> tuple[float, float, float]:
    s = profile.samples[anchor_index(profile, rule)]
    return (s.v_max, s.t_min, s.t_max)


def collect_anchors(
    profiles: Iterable[ChargeProfile], rule: AnchorRule
) -> list[tuple[float, float, float]]:
    """Anchors for every usable profile; failures are logged and skipped."""
    anchors = []
    for p in profiles:
        try:
            anchors.append(anchor_point(p, rule))
        except CalibrationError as exc:
            log.warning("skipping profile: %s", exc)
    return anchors


def fit_threshold_map(anchors: Sequence[tuple[float, float, float]]) -> ThresholdMap:
    """Least-squares affine map of v_max on (1, t_min, t_max).

    Falls back to a fixed threshold at the mean anchor voltage when there
    are fewer than three anchors or the temperatures do not span a plane.
    """
    if len(anchors) == 0:
        raise CalibrationError("no anchors to fit")
    arr = np.asarray(anchors, dtype=np.float64)
    v = arr[:, 0]
    X = np.column_stack([np.ones(len(arr)), arr[:, 1], arr[:, 2]])
    if len(arr) >= 3:
        coef, _, rank, _ = np.linalg.lstsq(X, v, rcond=None)
        if rank == 3:
            return ThresholdMap(float(coef[0]), float(coef[1]), float(coef[2]))
    return ThresholdMap(float(v.mean()), 0.0, 0.0)
