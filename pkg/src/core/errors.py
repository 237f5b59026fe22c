#!/usr/bin/env python3
"""
Error Types for THz Semi-Blind
==============================

Every failure raised by the library derives from ThzSbError so that entry
points (CLI, web server) can map library problems to exit codes and HTTP
statuses in one place.

Usage:
    from src.core.errors import ConfigError, ThzSbError
"""

from typing import List, Optional


class ThzSbError(Exception):
    """Base class for all library errors"""


class ConfigError(ThzSbError, ValueError):
    """Invalid scenario or parameter combination.

    Carries the full list of violated invariants so callers can report them
    all at once.
    """

    def __init__(self, message: str, problems: Optional[List[str]] = None):
        self.problems = problems or [message]
        super().__init__(message)


class ContractViolation(ThzSbError, ValueError):
    """Input breaks a documented precondition (shape, finiteness, symmetry)"""


class DecompositionError(ThzSbError):
    """SVD or eigendecomposition did not converge"""

    def __init__(self, message: str, residual: float = float("inf")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class NumericalError(ThzSbError):
    """Matrix expected to be Hermitian positive definite is not"""

    def __init__(self, message: str, minor_index: int):
        self.minor_index = minor_index
        super().__init__(f"{message} (leading minor {minor_index} not positive)")


class OutOfRangeError(ThzSbError, ValueError):
    """Lookup outside the tabulated range of an absorption table"""


class AmbiguityResolutionError(ThzSbError):
    """RALS ambiguity matrix is numerically singular"""

    def __init__(self, condition_number: float):
        self.condition_number = condition_number
        super().__init__(f"ambiguity matrix is singular (cond={condition_number:.3e})")


class DegenerateConstraintError(ThzSbError):
    """Constraint Jacobian does not have the expected rank"""


class SingularWeightError(ThzSbError):
    """Zero singular values make the bound weights undefined"""


class DegenerateSolutionError(ThzSbError):
    """All SBL hyperparameters collapsed below the floor"""


class RankError(ThzSbError):
    """Combiner product is rank deficient"""


class UndefinedMetricError(ThzSbError, ValueError):
    """Metric is undefined for the given input (e.g. zero reference channel)"""
