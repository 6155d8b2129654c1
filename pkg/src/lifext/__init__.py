"""Generational model of wealth, fertility and repeatable life extension."""

from .dynamics import (
    CriticalWealths,
    SocietyParams,
    StepOutcome,
    basic_step,
    critical_wealths,
    extended_step,
    oracle_step,
    step,
)

__version__ = "0.1.0"
