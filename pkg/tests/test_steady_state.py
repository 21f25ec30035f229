import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vmcboost import steady_state as ss
from vmcboost.errors import ConfigurationError, InfeasibleTargetError, UnsupportedRegionError
from vmcboost.params import ConverterParams
from vmcboost.schedule import gate_schedule

duties = st.floats(0.5001, 0.9999)
v_ins = st.floats(0.1, 1000.0)


def gate_integrated_currents(params, n=200_000):
    """Oracle: integrate v_L / L on a fine grid driven by the gate signals.

    A conducting switch puts v_in across its inductor; otherwise the
    switch node sits at the switch stress.
    """
    s = gate_schedule(params.duty, params.f_sw)
    d = float(s.duty)
    T = s.period
    v_sw = params.v_in / (1 - d)
    ph = (np.arange(n) + 0.5) / n
    on1 = ph < d
    on2 = ((ph - 0.5) % 1.0) < d
    di1 = np.where(on1, params.v_in, params.v_in - v_sw) / params.l1 * T / n
    di2 = np.where(on2, params.v_in, params.v_in - v_sw) / params.l2 * T / n
    return np.cumsum(di1), np.cumsum(di1 + di2)


def test_reference_operating_point():
    op = ss.analytic_operating_point(ConverterParams())
    assert op.v_out == 480.0
    assert (op.v_c1, op.v_c2, op.v_c3, op.v_c4) == (240.0, 120.0, 120.0, 240.0)
    assert op.v_sw == 120.0
    assert op.v_d == 240.0
    assert op.i_out == 0.75
    assert op.i_l_avg == 6.0
    assert op.i_in_avg == 12.0
    assert op.p_out == 360.0


@pytest.mark.parametrize(
    "v_in,duty,expected", [(30, 0.75, 480.0), (30, 0.6, 300.0), (12, 0.75, 192.0)]
)
def test_output_voltage_examples(v_in, duty, expected):
    assert ss.output_voltage(v_in, duty) == pytest.approx(expected, rel=1e-15)


def test_stress_examples():
    assert ss.switch_stress(30, 0.875) == 240.0
    assert ss.diode_stress(10, 0.6) == pytest.approx(50.0, rel=1e-15)
    assert ss.capacitor_voltages(30, 0.5 + 1e-12) == pytest.approx((120, 60, 60, 120), rel=1e-9)


def test_inductor_current_examples():
    assert ss.avg_inductor_current(0.75, 0.75) == 6.0
    assert ss.avg_inductor_current(0.0, 0.6) == 0.0
    assert ss.avg_inductor_current(1.5, 0.75) == 12.0
    with pytest.raises(ConfigurationError):
        ss.avg_inductor_current(-1.0, 0.75)


def test_inductor_ripple_matches_gate_integration():
    p = ConverterParams()
    i1, _ = gate_integrated_currents(p)
    assert ss.inductor_ripple(30, 0.75, 120e-6, 100e3) == pytest.approx(1.875, rel=1e-12)
    assert ss.inductor_ripple(30, 0.75, 120e-6, 100e3) == pytest.approx(i1.max() - i1.min(), rel=1e-4)
    assert ss.inductor_ripple(30, 0.75, 240e-6, 100e3) == pytest.approx(0.9375, rel=1e-12)
    assert ss.inductor_ripple(30, 0.75, 1e12, 100e3) < 1e-12


def test_input_ripple_matches_gate_integration():
    p = ConverterParams()
    _, i_in = gate_integrated_currents(p)
    assert ss.input_ripple_estimate(p) == pytest.approx(1.25, rel=1e-12)
    assert ss.input_ripple_estimate(p) == pytest.approx(i_in.max() - i_in.min(), rel=1e-4)
    assert 1.0 <= ss.input_ripple_estimate(p) <= 2.0


@pytest.mark.parametrize("duty", [0.55, 0.6, 0.7, 0.8, 0.9])
def test_input_ripple_against_oracle_off_reference(duty):
    p = ConverterParams(duty=duty, l2=150e-6)
    _, i_in = gate_integrated_currents(p)
    assert ss.input_ripple_estimate(p) == pytest.approx(i_in.max() - i_in.min(), rel=1e-3)


def test_input_ripple_repeats_twice_per_period():
    # equal inductors: the input current is periodic in T/2
    p = ConverterParams()
    _, i_in = gate_integrated_currents(p, n=100_000)
    assert np.allclose(i_in[:50_000] - i_in[0], i_in[50_000:] - i_in[50_000], atol=1e-9)


def test_no_load_limit():
    op = ss.analytic_operating_point(ConverterParams(r_load=1e30))
    assert op.i_out < 1e-24 and op.i_l_avg < 1e-24
    assert op.v_out == 480.0


def test_solve_duty_examples():
    assert ss.solve_duty(30, 480) == 0.75
    assert ss.solve_duty(30, 960) == 0.875
    with pytest.raises(InfeasibleTargetError, match="gain above 8"):
        ss.solve_duty(30, 240)


@pytest.mark.parametrize("fn", [ss.output_voltage, ss.switch_stress, ss.diode_stress, ss.capacitor_voltages])
@pytest.mark.parametrize("duty", [0.5, 0.2, 1.0])
def test_region_errors(fn, duty):
    with pytest.raises(UnsupportedRegionError):
        fn(30, duty)


def test_design_reference_point():
    d = ss.design_for(ConverterParams(), 480.0)
    assert d.duty == 0.75
    assert d.ratings["switch"]["voltage"] == pytest.approx(150.0, rel=1e-15)
    assert d.ratings["diode"]["voltage"] == pytest.approx(300.0, rel=1e-15)
    assert d.ratings["switch"]["current"] == pytest.approx(1.25 * (6 + 1.875 / 2), rel=1e-15)
    assert d.operating_point.v_out == pytest.approx(480.0, rel=1e-15)
    with pytest.raises(ConfigurationError):
        ss.design_for(ConverterParams(), 480.0, margin=-0.1)


@given(v_in=v_ins, duty=duties)
def test_cross_identities(v_in, duty):
    c1, c2, c3, c4 = ss.capacitor_voltages(v_in, duty)
    v_sw = ss.switch_stress(v_in, duty)
    assert ss.diode_stress(v_in, duty) == 2 * v_sw
    assert c1 + c4 == ss.output_voltage(v_in, duty)
    assert c2 == c3 == v_sw
    assert c1 == c4 == 2 * c2


@given(v_in=v_ins, a=duties, b=duties)
def test_gain_monotone(v_in, a, b):
    if a < b:
        assert ss.output_voltage(v_in, a) < ss.output_voltage(v_in, b)


@given(v_in=v_ins, duty=duties, k=st.floats(0.01, 100.0))
def test_homogeneity(v_in, duty, k):
    assert ss.output_voltage(k * v_in, duty) == pytest.approx(k * ss.output_voltage(v_in, duty), rel=1e-13)
    assert ss.avg_inductor_current(k, duty) == pytest.approx(k * ss.avg_inductor_current(1.0, duty), rel=1e-13)


@given(v_in=v_ins, gain=st.floats(8.000001, 40.0))
def test_solve_duty_round_trip(v_in, gain):
    target = gain * v_in
    duty = ss.solve_duty(v_in, target)
    assert 0.5 < duty < 1
    assert abs(ss.output_voltage(v_in, duty) - target) <= 1e-12 * target


def test_boundary_rounding_rejected():
    # 8 * (1 + 2**-52) * 11 rounds to a duty of exactly 0.5
    with pytest.raises(InfeasibleTargetError):
        ss.solve_duty(11.0, 11.0 * 8.000000000000002)


@given(v_in=v_ins, gain=st.floats(0.0, 8.0))
def test_low_gain_rejected(v_in, gain):
    with pytest.raises(InfeasibleTargetError):
        ss.solve_duty(v_in, gain * v_in)


@given(r_load=st.floats(1.0, 1e6), duty=duties)
def test_operating_point_invariants(r_load, duty):
    op = ss.analytic_operating_point(ConverterParams(duty=duty, r_load=r_load))
    assert op.v_out == op.v_c1 + op.v_c4
    assert op.v_d == 2 * op.v_sw
    assert op.i_out == op.v_out / r_load
    assert op.p_out == op.v_out * op.i_out
