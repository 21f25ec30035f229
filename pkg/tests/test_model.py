import dataclasses

import numpy as np
import pytest

from vmcboost.errors import NumericalError
from vmcboost.model import MODE_TABLE, REQUIRED_OBSERVERS, build_proposed_converter, validate_model
from vmcboost.params import ConverterParams
from vmcboost.simulation import CSV_COLUMNS, step_mode


def rk4(dyn, x, v_in, v_f, dt, n):
    """Dense fixed-step classical Runge-Kutta oracle."""
    h = dt / n
    f0 = dyn.b * v_in + dyn.e * v_f
    for _ in range(n):
        k1 = dyn.A @ x + f0
        k2 = dyn.A @ (x + h / 2 * k1) + f0
        k3 = dyn.A @ (x + h / 2 * k2) + f0
        k4 = dyn.A @ (x + h * k3) + f0
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def test_default_model_structure(table1):
    m = build_proposed_converter(table1)
    assert m.state_names == ("iL1", "iL2", "vC1", "vC2", "vC3", "vC4")
    assert m.state_dim == 6
    assert set(m.modes) == {"I", "II", "III"}
    for mode, (switches, diodes) in MODE_TABLE.items():
        assert m.modes[mode].switch_set == switches
        assert m.modes[mode].conduction_set == diodes
    assert m.modes["I"].conduction_set == frozenset()


def test_output_capacitor_adds_state():
    m = build_proposed_converter(ConverterParams(c_out=10e-6))
    assert m.state_dim == 7
    assert m.state_names[-1] == "vCout"
    assert "iCout" in m.modes["I"].observers


def test_observers_cover_csv_contract(table1):
    m = build_proposed_converter(table1)
    for dyn in m.modes.values():
        assert set(CSV_COLUMNS[1:]) <= set(dyn.observers)


def test_validation_passes_for_default(table1):
    report = validate_model(build_proposed_converter(table1))
    assert report.ok, report.failures


def test_validation_flags_wrong_conduction_set(table1):
    m = build_proposed_converter(table1)
    bad = dataclasses.replace(m.modes["II"], conduction_set=frozenset({"D2", "D4"}))
    report = validate_model(dataclasses.replace(m, modes={**m.modes, "II": bad}))
    assert not report.ok
    assert [name for name, _ in report.failures] == ["mode_II_conduction"]


def test_validation_flags_missing_observer(table1):
    m = build_proposed_converter(table1)
    obs = {k: v for k, v in m.modes["I"].observers.items() if k != "vsw1"}
    bad = dataclasses.replace(m.modes["I"], observers=obs)
    report = validate_model(dataclasses.replace(m, modes={**m.modes, "I": bad}))
    names = [name for name, _ in report.failures]
    assert names == ["mode_I_observers"]
    assert "vsw1" in report.failures[0][1]


def test_validation_flags_missing_mode(table1):
    m = build_proposed_converter(table1)
    report = validate_model(dataclasses.replace(m, modes={k: v for k, v in m.modes.items() if k != "III"}))
    assert "three_modes" in [name for name, _ in report.failures]


def test_mode_one_charges_inductors_from_zero(table1):
    m = build_proposed_converter(table1)
    x = step_mode(m, "I", np.zeros(6), 30.0, 1e-6)
    # v_in / l = 30 / 120 uH = 0.25 A/us
    assert x[:2] == pytest.approx([0.25, 0.25], rel=1e-12)
    assert x[2:] == pytest.approx(np.zeros(4), abs=1e-15)


@pytest.mark.parametrize("mode", ["I", "II", "III"])
def test_zero_step_is_identity(table1, mode):
    m = build_proposed_converter(table1)
    x = np.array([5.0, 6.0, 240.0, 120.0, 120.0, 240.0])
    assert np.array_equal(step_mode(m, mode, x, 30.0, 0.0), x)


@pytest.mark.parametrize("mode", ["I", "II", "III"])
@pytest.mark.parametrize("lossy", [False, True])
def test_step_matches_dense_rk4(mode, lossy):
    params = ConverterParams.reference_design() if lossy else ConverterParams()
    m = build_proposed_converter(params)
    dyn = m.modes[mode]
    rng = np.random.default_rng(7)
    x = dyn.entry @ (np.array([6.0, 6.0, 240.0, 120.0, 120.0, 240.0]) + rng.normal(0, 1, 6))
    x = x + dyn.entry_u @ np.array([30.0, m.v_f])
    dt = 2.5e-6
    got = step_mode(m, mode, x, 30.0, dt)
    ref = rk4(dyn, x, 30.0, m.v_f, dt, 1000)
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-9


def test_step_rejects_non_finite(table1):
    m = build_proposed_converter(table1)
    with pytest.raises(NumericalError) as err:
        step_mode(m, "II", np.array([np.nan, 0, 0, 0, 0, 0]), 30.0, 1e-6)
    assert err.value.mode == "II"


def test_parasitics_only_enter_when_requested():
    lossy = ConverterParams.reference_design()
    a = build_proposed_converter(lossy, include_parasitics=False)
    b = build_proposed_converter(lossy.ideal())
    for mode in a.modes:
        assert np.array_equal(a.modes[mode].A, b.modes[mode].A)
    assert a.v_f == 0.0
    c = build_proposed_converter(lossy)
    assert c.v_f == 0.61
    assert not np.array_equal(c.modes["I"].A, b.modes["I"].A)


def test_loop_modes_tie_capacitor_voltages(table1):
    m = build_proposed_converter(table1)
    x = np.array([6.0, 6.0, 250.0, 118.0, 125.0, 235.0])
    names = m.state_names
    y = m.modes["II"].entry @ x
    assert y[names.index("vC1")] == pytest.approx(y[names.index("vC2")] + y[names.index("vC3")])
    y = m.modes["III"].entry @ x
    assert y[names.index("vC4")] == pytest.approx(y[names.index("vC2")] + y[names.index("vC3")])
    assert np.allclose(m.modes["I"].entry, np.eye(6), rtol=0, atol=1e-12)


def test_required_observer_names_are_csv_columns():
    assert set(REQUIRED_OBSERVERS) == set(CSV_COLUMNS[1:])


def test_held_variants_drop_one_diode(table1):
    m = build_proposed_converter(table1)
    assert set(m.held) == {("II", "D1"), ("II", "D3"), ("III", "D2"), ("III", "D4")}
    assert m.held[("II", "D1")].conduction_set == frozenset({"D3"})
