"""Telemetry data model and CSV ingestion/emission.

Units throughout the package: seconds, amperes (positive = charging),
volts, degrees Celsius, ampere-hours, and SOC in percent [0, 100].
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PROFILE_HEADER = ("time_s", "current_a", "v_max_v", "t_min_c", "t_max_c", "mode")
TRACE_HEADER = ("time_s", "soc_baseline_pct", "soc_vb_pct", "soc_corr_pct", "active")

DEFAULT_CAPACITY_AH = 100.0
DEFAULT_V_100 = 4.20


class ProfileError(ValueError):
    """Raised for malformed or inconsistent telemetry."""


class BmsMode(enum.IntEnum):
    IDLE = 0
    AC_CHARGE = 1
    DC_CHARGE = 2
    DISCHARGE = 3

    @property
    def is_charging(self) -> bool:
        return self in (BmsMode.AC_CHARGE, BmsMode.DC_CHARGE)

    @classmethod
    def parse(cls, token: str) -> "BmsMode":
        key = token.strip().upper()
        aliases = {"AC": "AC_CHARGE", "DC": "DC_CHARGE"}
        key = aliases.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise ProfileError(f"unknown BMS mode token {token!r}") from None


@dataclass(frozen=True)
class ChargeSample:
    t: float
    current: float
    v_max: float
    t_min: float
    t_max: float
    mode: BmsMode

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ProfileError(f"non-finite timestamp {self.t}")
        if not self.v_max > 0:
            raise ProfileError(f"v_max must be positive, got {self.v_max}")
        if self.t_min > self.t_max:
            raise ProfileError(f"t_min {self.t_min} exceeds t_max {self.t_max}")


@dataclass(frozen=True)
class ChargeProfile:
    samples: tuple[ChargeSample, ...]
    capacity_ah: float = DEFAULT_CAPACITY_AH
    v_100: float = DEFAULT_V_100
    name: str = field(default="profile", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ProfileError("profile has no samples")
        if not self.capacity_ah > 0:
            raise ProfileError(f"capacity_ah must be positive, got {self.capacity_ah}")
        if not self.v_100 > 0:
            raise ProfileError(f"v_100 must be positive, got {self.v_100}")
        for i in range(1, len(self.samples)):
            if not self.samples[i].t > self.samples[i - 1].t:
                raise ProfileError(
                    f"timestamps not strictly increasing at row {i + 1} "
                    f"({self.samples[i - 1].t} -> {self.samples[i].t})"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return self.samples[-1].t - self.samples[0].t

    def arrays(self) -> dict[str, np.ndarray]:
        """Column arrays for the numeric kernels."""
        s = self.samples
        return {
            "t": np.array([x.t for x in s], dtype=np.float64),
            "current": np.array([x.current for x in s], dtype=np.float64),
            "v_max": np.array([x.v_max for x in s], dtype=np.float64),
            "t_min": np.array([x.t_min for x in s], dtype=np.float64),
            "t_max": np.array([x.t_max for x in s], dtype=np.float64),
            "mode": np.array([int(x.mode) for x in s], dtype=np.int64),
        }

    def time_deltas(self) -> np.ndarray:
        return np.diff(self.arrays()["t"])


@dataclass(frozen=True)
class StepOutput:
    t: float
    soc_baseline: float
    soc_vb: float  # nan while the charge-end strategy is inactive
    soc_corr: float
    active: bool


def c_rate(current: float, capacity_ah: float) -> float:
    if not capacity_ah > 0:
        raise ValueError(f"capacity_ah must be positive, got {capacity_ah}")
    return abs(current) / capacity_ah


def _read_metadata(line: str, meta: dict[str, float]) -> None:
    body = line.lstrip("#").strip()
    if "=" not in body:
        return
    key, _, value = body.partition("=")
    key = key.strip()
    if key in ("capacity_ah", "v_100"):
        meta[key] = float(value)


def load_profile_csv(
    path: str | Path,
    capacity_ah: float | None = None,
    v_100: float | None = None,
) -> ChargeProfile:
    """Parse a telemetry CSV into a :class:`ChargeProfile`.

    Leading ``# capacity_ah=...`` / ``# v_100=...`` comment lines carry pack
    metadata; explicit keyword arguments override them.
    """
    path = Path(path)
    meta: dict[str, float] = {}
    samples: list[ChargeSample] = []
    with path.open(newline="") as fh:
        lines = [ln for ln in fh]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            _read_metadata(ln, meta)
        elif ln.strip():
            body.append(ln)
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != PROFILE_HEADER:
        raise ProfileError(f"{path}: expected header {','.join(PROFILE_HEADER)}, got {header}")
    prev_t = None
    for row_no, row in enumerate(reader, start=1):
        if len(row) != len(PROFILE_HEADER):
            raise ProfileError(
                f"{path}: row {row_no}: expected {len(PROFILE_HEADER)} columns, got {len(row)}"
            )
        try:
            t, cur, v, tmin, tmax = (float(x) for x in row[:5])
            sample = ChargeSample(t, cur, v, tmin, tmax, BmsMode.parse(row[5]))
        except (ValueError, ProfileError) as exc:
            raise ProfileError(f"{path}: row {row_no}: {exc}") from None
        if prev_t is not None and not t > prev_t:
            raise ProfileError(
                f"{path}: row {row_no}: timestamps not strictly increasing ({prev_t} -> {t})"
            )
        prev_t = t
        samples.append(sample)
    if not samples:
        raise ProfileError(f"{path}: no data rows")
    return ChargeProfile(
        samples,
        capacity_ah=capacity_ah if capacity_ah is not None else meta.get("capacity_ah", DEFAULT_CAPACITY_AH),
        v_100=v_100 if v_100 is not None else meta.get("v_100", DEFAULT_V_100),
        name=path.stem,
    )


def write_profile_csv(path: str | Path, profile: ChargeProfile) -> None:
    """Write a profile with its metadata; floats keep full precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# capacity_ah={profile.capacity_ah!r}\n")
        fh.write(f"# v_100={profile.v_100!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_HEADER)
        for s in profile.samples:
            w.writerow([repr(s.t), repr(s.current), repr(s.v_max), repr(s.t_min), repr(s.t_max), s.mode.name])


def _fmt6(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


def write_trace_csv(path: str | Path, rows: Iterable[StepOutput]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in rows:
            w.writerow([_fmt6(r.t), _fmt6(r.soc_baseline), _fmt6(r.soc_vb), _fmt6(r.soc_corr), int(bool(r.active))])


def read_trace_csv(path: str | Path) -> list[StepOutput]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise ProfileError(f"{path}: not a trace file (header {header})")
        out = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(TRACE_HEADER):
                raise ProfileError(f"{path}: row {row_no}: expected {len(TRACE_HEADER)} columns")
            out.append(StepOutput(float(row[0]), float(row[1]), float(row[2]), float(row[3]), row[4] == "1"))
    return out


def trace_rows(t: Sequence[float], baseline, vb, corr, active) -> list[StepOutput]:
    return [
        StepOutput(float(t[i]), float(baseline[i]), float(vb[i]), float(corr[i]), bool(active[i]))
        for i in range(len(t))
    ]
