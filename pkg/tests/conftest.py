import pytest

from chargeend.cellsim import ChargerSpec, EcmCell, generate_profile
from chargeend.profile import BmsMode, ChargeProfile, ChargeSample


def make_profile(ts, currents=None, v_max=None, mode=BmsMode.DC_CHARGE, capacity_ah=100.0, temps=(25.0, 25.0)):
    n = len(ts)
    currents = currents if currents is not None else [10.0] * n
    v_max = v_max if v_max is not None else [3.9] * n
    modes = mode if isinstance(mode, (list, tuple)) else [mode] * n
    samples = [ChargeSample(float(t), float(i), float(v), temps[0], temps[1], m) for t, i, v, m in zip(ts, currents, v_max, modes)]
    return ChargeProfile(samples, capacity_ah=capacity_ah)


@pytest.fixture(scope="session")
def ac_charger():
    return ChargerSpec.ac(20.0, cutoff_current_a=0.5)


@pytest.fixture(scope="session")
def dc_charger():
    return ChargerSpec.dc(((50.0, 100.0), (75.0, 60.0), (100.0, 30.0)), cutoff_current_a=0.5)


@pytest.fixture(scope="session")
def ac_profile(ac_charger):
    return generate_profile(EcmCell(soc_true=45.0), ac_charger, dt=2.0, name="ac")


@pytest.fixture(scope="session")
def dc_profile(dc_charger):
    return generate_profile(EcmCell(soc_true=45.0), dc_charger, dt=2.0, name="dc")


PLANTED = (4.00, 0.002, 0.001)
PLANTED_TEMPS = ((0.0, 4.0), (10.0, 18.0), (20.0, 21.0), (30.0, 38.0), (-5.0, 5.0))


def planted_dc_profiles(out_dir, rule, temps=PLANTED_TEMPS, coef=PLANTED):
    """Write simulated DC profiles whose anchor v_max follows an affine temperature law.

    Each profile is shifted by a constant voltage offset; anchor selection by
    SOC or TTC is independent of voltage, so the offset fixes the anchor value.
    """
    from dataclasses import replace

    from chargeend.calibration import anchor_index
    from chargeend.profile import write_profile_csv

    charger = ChargerSpec.dc(((50.0, 100.0), (75.0, 60.0), (100.0, 30.0)), cutoff_current_a=0.5)
    paths = []
    for i, (lo, hi) in enumerate(temps):
        base, _ = generate_profile(EcmCell(soc_true=40.0 + 3 * i), charger, dt=2.0, temp_trace=lambda _t: (lo, hi))
        k = anchor_index(base, rule)
        offset = coef[0] + coef[1] * lo + coef[2] * hi - base.samples[k].v_max
        samples = [replace(s, v_max=s.v_max + offset) for s in base.samples]
        profile = ChargeProfile(samples, capacity_ah=base.capacity_ah, v_100=min(4.2, samples[-1].v_max), name=f"dc_{i}")
        path = out_dir / f"dc_{i}.csv"
        write_profile_csv(path, profile)
        paths.append(path)
    return paths


# Acceptance reporting: tests marked ``criterion(n, title)`` get one
# PASS/FAIL line each in the terminal summary.
_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    detail = getattr(item, "criterion_detail", "")
    if rep.when == "call" or rep.failed:
        _CRITERIA[n] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[n]
        line = f"{status} criterion {n}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
