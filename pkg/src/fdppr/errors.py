"""Exception hierarchy shared by all fdppr modules."""


class FdpprError(Exception):
    """Base class for library errors."""


class ConfigError(FdpprError, ValueError):
    """Invalid user-facing configuration."""


class NumericalError(FdpprError, RuntimeError):
    """A computation failed for numerical reasons."""


class DivisibilityError(ConfigError):
    """The element degree does not divide the number of FD intervals on an axis."""


class IndexOutOfRange(FdpprError, IndexError):
    pass


class OutOfDomain(FdpprError, ValueError):
    pass


class ShapeMismatch(FdpprError, ValueError):
    pass


class InterfaceNotResolved(ConfigError):
    """A coefficient interface does not lie on grid lines."""


class NestingError(ConfigError):
    """A fine reference grid does not nest the coarse grid."""


class ConstraintViolation(ConfigError):
    pass


class WindowTooSmall(ConfigError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, iterations, residual):
        super().__init__(f"Krylov solver stopped after {iterations} iterations "
                         f"with relative residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class UnstableRun(NumericalError):
    pass


class PatchRankDeficient(NumericalError):
    pass


class NonPositiveValue(FdpprError, ValueError):
    pass
