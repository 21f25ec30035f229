import math

import pytest

from vmcboost.errors import ConfigurationError, UnsupportedRegionError
from vmcboost.params import COMPONENT_LIBRARY, ConverterParams, Parasitics, check_duty


def test_defaults_are_reference_point():
    p = ConverterParams()
    assert (p.v_in, p.duty, p.f_sw, p.r_load) == (30.0, 0.75, 100e3, 640.0)
    assert p.l1 == p.l2 == 120e-6
    assert p.c1 == p.c2 == p.c3 == p.c4 == 20e-6
    assert p.c_out == 0.0
    assert p.parasitics.is_ideal
    assert p.period == pytest.approx(10e-6)


def test_shipped_parasitics_use_datasheet_values():
    par = Parasitics.shipped()
    assert par.r_ds_on == COMPONENT_LIBRARY["IPA075N15N3GXKSA1"].parasitics["r_ds_on"] == 7.5e-3
    assert par.v_f == COMPONENT_LIBRARY["40CPQ100"].parasitics["v_f"] == 0.61
    assert par.t_on == par.t_off == 20e-9
    assert not par.is_ideal
    assert ConverterParams.reference_design().parasitics == par


@pytest.mark.parametrize("field", ["f_sw", "l1", "l2", "c1", "c2", "c3", "c4", "r_load"])
def test_nonpositive_values_rejected(field):
    with pytest.raises(ConfigurationError) as err:
        ConverterParams(**{field: 0.0})
    assert err.value.field == field


@pytest.mark.parametrize("value", [math.nan, math.inf, "30"])
def test_non_numeric_or_non_finite_rejected(value):
    with pytest.raises(ConfigurationError):
        ConverterParams(v_in=value)


def test_negative_parasitic_names_field():
    with pytest.raises(ConfigurationError) as err:
        Parasitics(esr=-1e-3)
    assert err.value.field == "parasitics.esr"


def test_c_out_zero_allowed_negative_rejected():
    ConverterParams(c_out=0.0)
    with pytest.raises(ConfigurationError):
        ConverterParams(c_out=-1e-6)


@pytest.mark.parametrize("duty", [0.4, 0.5, 1.0])
def test_check_duty_region(duty):
    with pytest.raises(UnsupportedRegionError, match="0.5 < duty < 1"):
        check_duty(duty)


def test_swapped_legs_mirrors_phases():
    p = ConverterParams(l1=100e-6, l2=150e-6, c1=1e-6, c2=2e-6, c3=3e-6, c4=4e-6)
    q = p.swapped_legs()
    assert (q.l1, q.l2) == (150e-6, 100e-6)
    assert (q.c1, q.c2, q.c3, q.c4) == (4e-6, 3e-6, 2e-6, 1e-6)
    assert q.swapped_legs() == p


def test_ideal_copy_drops_parasitics():
    p = ConverterParams.reference_design(duty=0.8)
    assert p.ideal().parasitics.is_ideal
    assert p.ideal().duty == 0.8
