"""Electricity + hydrogen capacity planning with time-matched procurement."""

from h2match.domain import (
    DemandProfile,
    FuelSpec,
    H2ProjectSpec,
    PolicyConfig,
    SystemCase,
    TechKind,
    TechnologySpec,
    TmrPolicy,
    WeatherScenario,
    annuitize,
    validate_case,
)

__version__ = "0.1.0"

__all__ = [
    "DemandProfile",
    "FuelSpec",
    "H2ProjectSpec",
    "PolicyConfig",
    "SystemCase",
    "TechKind",
    "TechnologySpec",
    "TmrPolicy",
    "WeatherScenario",
    "annuitize",
    "validate_case",
]
