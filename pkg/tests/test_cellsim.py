import numpy as np
import pytest

from chargeend.baseline import SECONDS_PER_HOUR
from chargeend.cellsim import ChargerSpec, EcmCell, SimulationError, generate_profile, step_cell
from chargeend.profile import BmsMode


def test_rest_terminal_equals_ocv():
    cell = EcmCell(soc_true=55.0)
    _, v = step_cell(cell, 0.0, 10.0)
    assert v == pytest.approx(cell.ocv(55.0), abs=1e-15)


def test_soc_increment_one_percent():
    cell, _ = step_cell(EcmCell(capacity_ah=100.0, soc_true=40.0), 100.0, 36.0)
    assert cell.soc_true == pytest.approx(41.0, abs=1e-12)


def test_full_cell_stays_full():
    cell, _ = step_cell(EcmCell(soc_true=100.0), 50.0, 60.0)
    assert cell.soc_true == 100.0


def test_rc_branch_exact_update():
    cell = EcmCell(r1=0.001, c1=10_000.0)
    v_rc = 0.0
    for _ in range(5):
        cell, _ = step_cell(cell, 20.0, 2.0)
    t = 10.0
    assert cell.v_rc == pytest.approx(0.001 * 20.0 * (1 - np.exp(-t / 10.0)), rel=1e-12)


def test_ocv_validation():
    with pytest.raises(ValueError):
        EcmCell(ocv_curve=((0, 3.0), (50, 3.0), (100, 4.2)))
    with pytest.raises(ValueError):
        EcmCell(r0=0.0)


def test_ac_profile_cc_then_decaying_cv(ac_profile, ac_charger):
    profile, _ = ac_profile
    a = profile.arrays()
    cur, v = a["current"][1:], a["v_max"][1:]
    in_cv = v >= ac_charger.cv_voltage_v
    k_cv = int(np.argmax(in_cv))
    assert k_cv > 0 and in_cv[k_cv:].all()
    assert np.all(cur[:k_cv] == ac_charger.cc_current_a)
    assert np.all(np.diff(cur[k_cv:]) <= 0)
    assert all(s.mode is BmsMode.AC_CHARGE for s in profile.samples)


@pytest.mark.parametrize("fixture", ["ac_profile", "dc_profile"])
def test_profile_termination_and_truth(request, fixture):
    profile, soc = request.getfixturevalue(fixture)
    charger = request.getfixturevalue(fixture.replace("profile", "charger"))
    a = profile.arrays()
    assert a["current"][-1] <= charger.cutoff_current_a
    assert a["v_max"][-1] >= charger.cv_voltage_v
    assert np.all(np.diff(soc) >= 0)
    assert soc[-1] >= 99.9
    assert len(soc) == len(profile)


@pytest.mark.parametrize("fixture", ["ac_profile", "dc_profile"])
def test_charge_bookkeeping(request, fixture):
    profile, soc = request.getfixturevalue(fixture)
    a = profile.arrays()
    # reference rectangular integrator: current of sample k over (t[k-1], t[k]]
    charge_as = float(np.sum(a["current"][1:] * np.diff(a["t"])))
    expected = 100.0 * charge_as / (SECONDS_PER_HOUR * profile.capacity_ah)
    assert soc[-1] - soc[0] == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("fixture", ["ac_profile", "dc_profile"])
def test_cv_voltage_band(request, fixture):
    profile, _ = request.getfixturevalue(fixture)
    charger = request.getfixturevalue(fixture.replace("profile", "charger"))
    a = profile.arrays()
    k_cv = int(np.argmax(a["v_max"] >= charger.cv_voltage_v))
    assert k_cv > 0
    assert np.all(np.abs(a["v_max"][k_cv:] - charger.cv_voltage_v) <= 5e-3)
    assert np.all(a["current"][k_cv + 1:] < charger.bands[-1][1])


@pytest.mark.parametrize("fixture", ["ac_profile", "dc_profile"])
def test_low_current_near_end(request, fixture):
    profile, _ = request.getfixturevalue(fixture)
    charger = request.getfixturevalue(fixture.replace("profile", "charger"))
    a = profile.arrays()
    t = a["t"]
    tail = t >= t[-1] - 0.1 * (t[-1] - t[0])
    assert np.all(a["current"][tail] < charger.cc_current_a)


def test_terminal_voltage_matches_step_cell(dc_profile):
    """Replaying the simulated currents through step_cell reproduces the kernel."""
    profile, soc = dc_profile
    a = profile.arrays()
    cell = EcmCell(soc_true=45.0)
    for k in range(1, len(profile)):
        cell, v = step_cell(cell, a["current"][k], a["t"][k] - a["t"][k - 1])
        assert cell.soc_true == pytest.approx(soc[k], abs=1e-9)
        assert v == pytest.approx(a["v_max"][k], abs=1e-9)


def test_dc_mode_and_band_currents(dc_profile, dc_charger):
    profile, soc = dc_profile
    a = profile.arrays()
    assert all(s.mode is BmsMode.DC_CHARGE for s in profile.samples)
    first_band = (soc[:-1] < 50.0) & (a["v_max"][1:] < dc_charger.cv_voltage_v)
    assert np.all(a["current"][1:][first_band] == 100.0)


def test_non_convergence_raises():
    with pytest.raises(SimulationError):
        generate_profile(EcmCell(soc_true=20.0), ChargerSpec.ac(10.0), dt=1.0, max_steps=100)


def test_rejects_full_start_and_low_cv():
    with pytest.raises(ValueError):
        generate_profile(EcmCell(soc_true=100.0), ChargerSpec.ac(10.0))
    with pytest.raises(ValueError):
        generate_profile(EcmCell(soc_true=50.0), ChargerSpec.ac(10.0, cv_voltage_v=4.1), v_100=4.2)


def test_imbalance_offset_shifts_vmax(ac_charger):
    p0, _ = generate_profile(EcmCell(soc_true=80.0), ac_charger, dt=5.0)
    p1, _ = generate_profile(EcmCell(soc_true=80.0), ac_charger, dt=5.0, imbalance_v=0.01)
    d = p1.arrays()["v_max"] - p0.arrays()["v_max"]
    assert np.allclose(d, 0.01, atol=1e-12)


def test_temperature_trace_recorded(ac_charger):
    p, _ = generate_profile(EcmCell(soc_true=85.0), ac_charger, dt=5.0, temp_trace=lambda t: (10 + t / 1e4, 12 + t / 1e4))
    s = p.samples[-1]
    assert s.t_min == pytest.approx(10 + s.t / 1e4)
    assert s.t_max - s.t_min == pytest.approx(2.0)
