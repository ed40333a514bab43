"""Exception hierarchy.

Everything raised on purpose by the library derives from `LightconeError`, so
callers (and the CLI) can separate numeric/model failures from programming
errors.
"""

from __future__ import annotations


class LightconeError(Exception):
    """Base class for all library errors."""


class KindMismatchError(LightconeError, TypeError):
    """Two amplitudes of different field kinds (or masses) were combined."""


class InvalidMassError(LightconeError, ValueError):
    pass


class DegenerateStateError(LightconeError, ValueError):
    """Zero or non-finite norm."""


class LinearDependenceError(LightconeError, ValueError):
    pass


class UndefinedDirectionError(LightconeError, ValueError):
    """Polarization basis requested at k = 0."""


class InfraredDivergenceError(LightconeError, ArithmeticError):
    pass


class QuadratureAccuracyError(LightconeError, ArithmeticError):
    """Quadrature did not reach the requested tolerance within its budget.

    The best estimate and its error estimate are kept so callers can still use
    them if they accept the looser accuracy.
    """

    def __init__(self, message: str, estimate=None, error: float | None = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class NonOrthonormalError(LightconeError, ValueError):
    def __init__(self, message: str, pairs=()):
        super().__init__(message)
        self.pairs = list(pairs)


class OnConeError(LightconeError, ValueError):
    """Smooth kernel part requested exactly on the light cone."""


class UndefinedAsymptoticError(LightconeError, ValueError):
    pass


class SuperluminalError(LightconeError, ValueError):
    pass


class EmptySupportError(LightconeError, ValueError):
    pass


class FloorError(LightconeError, ArithmeticError):
    """Requested threshold lies below the quadrature noise floor."""

    def __init__(self, message: str, achievable: float | None = None):
        super().__init__(message)
        self.achievable = achievable


class FitWindowError(LightconeError, ValueError):
    pass


class ModelViolationError(LightconeError, ValueError):
    """Gram matrix outside the 0 <= G <= I band the measurement model needs."""


class PreconditionError(LightconeError, ValueError):
    pass
