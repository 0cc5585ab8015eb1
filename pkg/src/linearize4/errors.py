"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class Linearize4Error(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(Linearize4Error, ValueError):
    """Malformed expression text. ``offset`` is a byte offset into the UTF-8 input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ArityError(ExprSyntaxError):
    """A kernel function was called with the wrong number of arguments."""


class UnboundSymbolError(Linearize4Error, NameError):
    def __init__(self, name: str):
        super().__init__(f"symbol {name!r} is not bound")
        self.name = name


class DomainError(Linearize4Error, ArithmeticError):
    """Evaluation hit a pole, a negative radicand or a non-positive logarithm argument."""

    def __init__(self, message: str, subexpr=None, point=None):
        detail = message
        if subexpr is not None:
            detail += f" in {subexpr}"
        if point is not None:
            detail += f" at {point}"
        super().__init__(detail)
        self.subexpr = subexpr
        self.point = point


class Inconclusive(Linearize4Error):
    """The sampling zero test could not find enough admissible points."""


class YDependence(Linearize4Error):
    """An expression that must be independent of y is not."""


class UnsupportedChi(Linearize4Error):
    pass


class UnsupportedA1Shape(Linearize4Error):
    pass


class CompatibilityFailure(Linearize4Error):
    """The constructed psi does not satisfy the fourth-order compatibility equation."""


class NotLinearizable(Linearize4Error):
    def __init__(self, report):
        failed = [c.index for c in report.conditions if not c.satisfied]
        super().__init__(f"linearization conditions violated: {failed}")
        self.report = report
        self.failed = failed


class FrequencyDomain(Linearize4Error):
    pass


class DiscriminantNegative(DomainError):
    pass


class BranchUndefined(DomainError):
    pass


class StepCollapse(Linearize4Error):
    pass


class InterpolationGap(Linearize4Error):
    pass
