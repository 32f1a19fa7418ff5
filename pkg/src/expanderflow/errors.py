"""Exception types shared across the solver modules."""


class ExpanderFlowError(Exception):
    """Base class for all package errors."""


class OutsideTube(ExpanderFlowError):
    """Point lies outside the tubular neighborhood of the target manifold."""


class NotOnManifold(ExpanderFlowError):
    """Point expected on the target manifold is too far from it."""


class GridTooSmall(ExpanderFlowError):
    """Grid has too few nodes for the requested stencil."""


class OutOfDomain(ExpanderFlowError):
    """Interpolation point lies outside the grid hull."""


class EmptyRegion(ExpanderFlowError):
    """Integration region contains no grid nodes."""


class RegionOutsideGrid(ExpanderFlowError):
    """Requested ball/cylinder is not contained in the grid."""


class MissingInitialSlice(ExpanderFlowError):
    """A space-time family lacks the required zero slice at t=0."""


class SourceUnbounded(ExpanderFlowError):
    """Duhamel source exceeded the configured sup-norm cap (blow-up guard)."""


class ScheduleTooCoarse(ExpanderFlowError):
    """Too few time slices for the requested time differencing."""


class BlowUp(ExpanderFlowError):
    """Profile ODE integration left the admissible band."""


class NoBracket(ExpanderFlowError):
    """Shooting could not bracket the target boundary angle."""


class DegenerateFit(ExpanderFlowError):
    """Least-squares decay fit is degenerate (all energies underflow)."""


class ConfigError(ExpanderFlowError):
    """Run configuration failed validation."""
