"""Bilocal, broadcasting and quantum correlations in multipartite Bell scenarios."""

from .expressions import Expression, Term, builtin, evaluate, parse, render
from .polytopes import ModelClass, bound, enumerate_vertices, membership
from .quantum import (
    MeasurementParams,
    born_behavior,
    broadcast_reproduction,
    ghz_paper_correlation,
    ghz_state,
    settings_from_params,
    svetlichny_settings,
)
from .scenario import Behavior, Scenario, correlator, marginal, no_signaling_report, validate

__version__ = "0.1.0"

__all__ = [
    "Behavior",
    "Expression",
    "MeasurementParams",
    "ModelClass",
    "Scenario",
    "Term",
    "born_behavior",
    "bound",
    "broadcast_reproduction",
    "builtin",
    "correlator",
    "enumerate_vertices",
    "evaluate",
    "ghz_paper_correlation",
    "ghz_state",
    "marginal",
    "membership",
    "no_signaling_report",
    "parse",
    "render",
    "settings_from_params",
    "svetlichny_settings",
    "validate",
]
