# errors.py
"""
Exception hierarchy shared by every waveobs module
──────────────────────────────────────────────────
• WaveObsError            – root; carries `module` (provenance for the CLI)
• expr                    – ExprSyntaxError, UnknownIdentifierError,
                            ExprDomainError, UnboundVariableError
• problem                 – HypothesisViolation, SphericalGeometryError,
                            UnknownProblemError
• charsys                 – SpeedError, ConvergenceError, DegeneracyError
• hypersolve              – GridError, CFLViolation, MaskError,
                            TraversalError, WindowError
• domains                 – DomainMismatchError, DomainIntersectionError
• observe                 – NormError, UnobservableDatum
• reconstruct / obstime   – TimeConditionError, AutonomyError
• cli                     – ConfigError
"""

from __future__ import annotations

from typing import Optional, Tuple


class WaveObsError(Exception):
    module = "waveobs"

    def __init__(self, message: str, *, module: Optional[str] = None):
        super().__init__(message)
        if module is not None:
            self.module = module


# ─────────────────────────── expr ───────────────────────────
class ExprError(WaveObsError):
    module = "expr"


class ExprSyntaxError(ExprError):
    def __init__(self, offset: int, expected: str, source: str = ""):
        self.offset = offset
        self.expected = expected
        self.source = source
        super().__init__(f"syntax error at offset {offset}: expected {expected}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class ExprDomainError(ExprError):
    pass


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable {name!r} is not bound")


# ────────────────────────── problem ─────────────────────────
class ProblemError(WaveObsError):
    module = "problem"


class HypothesisViolation(ProblemError):
    def __init__(self, message: str, point: Optional[Tuple[float, float]] = None):
        self.point = point
        if point is not None:
            message = f"{message} at (t, x) = ({point[0]:.6g}, {point[1]:.6g})"
        super().__init__(message)


class SphericalGeometryError(ProblemError):
    pass


class UnknownProblemError(ProblemError):
    pass


# ────────────────────────── charsys ─────────────────────────
class CharsysError(WaveObsError):
    module = "charsys"


class SpeedError(CharsysError):
    pass


class ConvergenceError(CharsysError):
    pass


class DegeneracyError(CharsysError):
    pass


# ───────────────────────── hypersolve ───────────────────────
class SolveError(WaveObsError):
    module = "hypersolve"


class GridError(SolveError):
    pass


class CFLViolation(SolveError):
    pass


class MaskError(SolveError):
    pass


class TraversalError(SolveError):
    pass


class WindowError(SolveError):
    pass


# ────────────────────────── domains ─────────────────────────
class DomainError(WaveObsError):
    module = "domains"


class DomainMismatchError(DomainError):
    pass


class DomainIntersectionError(DomainError):
    pass


# ────────────────────────── observe ─────────────────────────
class ObserveError(WaveObsError):
    module = "observe"


class NormError(ObserveError):
    pass


class UnobservableDatum(ObserveError):
    pass


# ─────────────────── reconstruct / obstime ──────────────────
class TimeConditionError(DomainIntersectionError):
    """The integral time condition fails, so the domains cannot intersect."""

    module = "reconstruct"


class AutonomyError(WaveObsError):
    module = "obstime"


# ──────────────────────────── cli ───────────────────────────
class ConfigError(WaveObsError):
    module = "cli"
