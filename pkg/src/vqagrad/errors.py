"""Exception types raised across the package."""


class VqaGradError(Exception):
    """Base class for all package errors."""


class DimensionError(VqaGradError, ValueError):
    pass


class ParamArityError(VqaGradError, ValueError):
    pass


class UnknownGateError(VqaGradError, KeyError):
    def __str__(self):
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class UnitarityError(VqaGradError, ValueError):
    pass


class HermiticityError(VqaGradError, ValueError):
    pass


class NotDifferentiableError(VqaGradError, ValueError):
    pass


class StepSizeError(VqaGradError, ValueError):
    pass


class DivergenceError(VqaGradError, ArithmeticError):
    pass


class MethodError(VqaGradError, ValueError):
    pass


class ResidueError(VqaGradError, ArithmeticError):
    """A quantity that must be real carried an imaginary part above tolerance."""
