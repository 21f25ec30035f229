"""Two-phase interleaved boost converter with voltage-multiplier cells:
closed-form steady state, switched linear simulation and loss model."""

from .errors import (
    ConfigurationError,
    InfeasibleTargetError,
    NumericalError,
    PreconditionError,
    UnsupportedRegionError,
)
from .losses import LossReport, efficiency_sweep, loss_breakdown, rated_operating_point
from .metrics import balance_checks, periodic_metrics, stress_report
from .model import SwitchedModel, build_proposed_converter, validate_model
from .params import COMPONENT_LIBRARY, ConverterParams, Parasitics
from .schedule import GateSchedule, gate_schedule
from .simulation import SimConfig, WaveformSet, check_diode_consistency, run_to_steady_state, simulate, step_mode
from .steady_state import analytic_operating_point, design_for, output_voltage, solve_duty

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "InfeasibleTargetError",
    "NumericalError",
    "PreconditionError",
    "UnsupportedRegionError",
    "LossReport",
    "efficiency_sweep",
    "loss_breakdown",
    "rated_operating_point",
    "balance_checks",
    "periodic_metrics",
    "stress_report",
    "SwitchedModel",
    "build_proposed_converter",
    "validate_model",
    "COMPONENT_LIBRARY",
    "ConverterParams",
    "Parasitics",
    "GateSchedule",
    "gate_schedule",
    "SimConfig",
    "WaveformSet",
    "check_diode_consistency",
    "run_to_steady_state",
    "simulate",
    "step_mode",
    "analytic_operating_point",
    "design_for",
    "output_voltage",
    "solve_duty",
]
