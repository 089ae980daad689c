"""Exception hierarchy shared by all solver modules."""


class ScatteringError(Exception):
    """Base class for all package errors."""


class SingularShell(ScatteringError):
    """Energy sits exactly on the free mass shell."""


class SingularPoint(ScatteringError):
    """A translation-invariant kernel was evaluated at zero separation."""


class BranchError(ScatteringError):
    """Real energy inside the spectral gap where an outgoing kernel was requested."""


class GapEnergy(ScatteringError):
    """Scattering energy with ``|lambda| <= m``."""


class ChannelMismatch(ScatteringError):
    """Channel index inconsistent with the sign of the energy."""


class ExceptionalValue(ScatteringError):
    """``I + K`` is numerically singular at the requested energy."""

    def __init__(self, message: str, smallest_singular: float | None = None):
        super().__init__(message)
        self.smallest_singular = smallest_singular


class NonRadialPotential(ScatteringError):
    """Radial oracle called with a potential that is not spherically symmetric."""


class NoRootInBracket(ScatteringError):
    """Bound-state refinement found no sign change in the bracket."""


class DegenerateFit(ScatteringError):
    """Proportionality fit attempted with a vanishing regressor."""


class ConfigError(ScatteringError):
    """Invalid run configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SolverDivergence(ScatteringError):
    """Iterative solver failed to reach its tolerance."""
