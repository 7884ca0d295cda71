import math

import pytest
from hypothesis import given, strategies as st

from chargeend.profile import (
    BmsMode,
    ProfileError,
    StepOutput,
    c_rate,
    load_profile_csv,
    read_trace_csv,
    write_profile_csv,
    write_trace_csv,
)

from conftest import make_profile

HEADER = "time_s,current_a,v_max_v,t_min_c,t_max_c,mode\n"


def write(tmp_path, body, name="p.csv"):
    path = tmp_path / name
    path.write_text(HEADER + body)
    return path


def test_load_three_rows(tmp_path):
    path = write(tmp_path, "0,10,3.9,20,25,DC_CHARGE\n1,10,3.91,20,25,DC_CHARGE\n2,10,3.92,20,25,DC_CHARGE\n")
    p = load_profile_csv(path)
    assert [s.t for s in p.samples] == [0, 1, 2]
    assert p.samples[0].mode is BmsMode.DC_CHARGE
    assert p.samples[2].v_max == 3.92


def test_non_monotone_time_names_row(tmp_path):
    path = write(tmp_path, "0,1,3.9,20,25,AC_CHARGE\n5,1,3.9,20,25,AC_CHARGE\n3,1,3.9,20,25,AC_CHARGE\n")
    with pytest.raises(ProfileError, match="row 3"):
        load_profile_csv(path)


@pytest.mark.parametrize("token,mode", [("DC_CHARGE", BmsMode.DC_CHARGE), ("AC_CHARGE", BmsMode.AC_CHARGE),
                                        ("IDLE", BmsMode.IDLE), ("DISCHARGE", BmsMode.DISCHARGE)])
def test_mode_tokens(tmp_path, token, mode):
    p = load_profile_csv(write(tmp_path, f"0,1,3.9,20,25,{token}\n"))
    assert p.samples[0].mode is mode


@pytest.mark.parametrize("row", ["0,1,3.9,20,25\n", "0,abc,3.9,20,25,IDLE\n", "0,1,3.9,20,25,CHARGING\n", "0,1,3.9,30,25,IDLE\n"])
def test_malformed_row_reports_row_number(tmp_path, row):
    path = write(tmp_path, "0,1,3.9,20,25,IDLE\n1,1,3.9,20,25,IDLE\n" + row.replace("0,", "2,", 1))
    with pytest.raises(ProfileError, match="row 3"):
        load_profile_csv(path)


def test_bad_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("t,i\n0,1\n")
    with pytest.raises(ProfileError, match="header"):
        load_profile_csv(path)


def test_metadata_lines(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("# capacity_ah=57\n# v_100=3.65\n" + HEADER + "0,1,3.4,20,25,AC_CHARGE\n")
    p = load_profile_csv(path)
    assert (p.capacity_ah, p.v_100) == (57.0, 3.65)
    assert load_profile_csv(path, capacity_ah=80.0).capacity_ah == 80.0


def test_profile_csv_round_trip_is_exact(tmp_path, dc_profile):
    profile, _ = dc_profile
    path = tmp_path / "dc.csv"
    write_profile_csv(path, profile)
    back = load_profile_csv(path)
    assert back == profile


@pytest.mark.parametrize("current,cap,expected", [(50.0, 100.0, 0.5), (0.0, 100.0, 0.0), (-20.0, 80.0, 0.25)])
def test_c_rate(current, cap, expected):
    assert c_rate(current, cap) == expected


def test_c_rate_rejects_bad_capacity():
    with pytest.raises(ValueError):
        c_rate(1.0, 0.0)


@given(st.floats(-500, 500), st.floats(0.1, 10), st.floats(1, 500))
def test_c_rate_nonnegative_and_linear(i, k, cap):
    assert c_rate(i, cap) >= 0
    assert c_rate(k * i, cap) == pytest.approx(k * c_rate(i, cap), rel=1e-12, abs=1e-15)


def test_trace_empty_is_header_only(tmp_path):
    path = tmp_path / "t.csv"
    write_trace_csv(path, [])
    assert path.read_text() == "time_s,soc_baseline_pct,soc_vb_pct,soc_corr_pct,active\n"


def test_trace_two_rows(tmp_path):
    path = tmp_path / "t.csv"
    write_trace_csv(path, [StepOutput(-2, 50, math.nan, 50, False), StepOutput(0, 51, 60, 55, True)])
    assert len(path.read_text().splitlines()) == 3


finite = st.floats(-1e4, 1e4, allow_nan=False)
soc = st.floats(0, 100)


@given(st.lists(st.tuples(finite, soc, st.one_of(soc, st.just(math.nan)), soc, st.booleans()), max_size=20))
def test_trace_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("trace") / "t.csv"
    outs = [StepOutput(*r) for r in rows]
    write_trace_csv(path, outs)
    back = read_trace_csv(path)
    assert len(back) == len(outs)
    for a, b in zip(outs, back):
        assert b.t == pytest.approx(a.t, abs=1e-6)
        assert b.soc_baseline == pytest.approx(a.soc_baseline, abs=1e-6)
        assert b.soc_corr == pytest.approx(a.soc_corr, abs=1e-6)
        assert (math.isnan(a.soc_vb) and math.isnan(b.soc_vb)) or b.soc_vb == pytest.approx(a.soc_vb, abs=1e-6)
        assert b.active == a.active


def test_profile_invariants():
    with pytest.raises(ProfileError):
        make_profile([0, 1, 1])
    with pytest.raises(ProfileError):
        make_profile([])
    with pytest.raises(ProfileError):
        make_profile([0, 1], capacity_ah=0)
    assert all(d > 0 for d in make_profile([0, 0.5, 3]).time_deltas())
