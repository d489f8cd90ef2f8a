"""Type-based witnesses of program incorrectness against trace properties."""

from .guards import Const, Event, EventPattern, Var
from .infer import Budgets, infer_witness
from .oracle import OracleConfig, brute_force_witness, validate_witness
from .syntax import parse_apis, parse_module, parse_program, parse_sre, parse_trace

__all__ = [
    "Budgets", "Const", "Event", "EventPattern", "OracleConfig", "Var",
    "brute_force_witness", "infer_witness", "parse_apis", "parse_module",
    "parse_program", "parse_sre", "parse_trace", "validate_witness",
]
