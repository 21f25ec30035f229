import pytest

from vmcboost import losses
from vmcboost.model import build_proposed_converter
from vmcboost.params import ConverterParams
from vmcboost.schedule import gate_schedule
from vmcboost.simulation import SimConfig, run_to_steady_state

SHOOT = SimConfig(method="shooting", initial_state="analytic-preload", steady_tol=1e-10, max_cycles=400)


@pytest.fixture(scope="session")
def table1():
    return ConverterParams()


@pytest.fixture(scope="session")
def ideal_steady(table1):
    """Model, schedule and converged steady state of the ideal reference point."""
    model = build_proposed_converter(table1)
    schedule = gate_schedule(table1.duty, table1.f_sw)
    return model, schedule, run_to_steady_state(model, schedule, table1, SHOOT)


@pytest.fixture(scope="session")
def rated():
    """Trimmed parameters, steady state and loss report with the shipped parasitics."""
    params, res = losses.rated_operating_point(ConverterParams.reference_design())
    return params, res, losses.loss_breakdown(params, res)


# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
