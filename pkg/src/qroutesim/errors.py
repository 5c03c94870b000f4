"""Exception types raised across the package."""


class QRouteSimError(Exception):
    """Base class for all package errors."""


class InvalidLabel(QRouteSimError):
    """Basis-state label does not fit the register dimensions."""


class ShapeError(QRouteSimError):
    """Operator dimensions do not match the targeted sites."""


class AllDiscarded(QRouteSimError):
    """Post-selection removed (essentially) all weight."""


class RequiresMixed(QRouteSimError):
    """Operation needs a density-matrix register."""


class InvalidTime(QRouteSimError):
    """Negative evolution time."""


class DegenerateRates(QRouteSimError):
    """Closed form undefined for equal decay rates; use the limit form."""


class FitError(QRouteSimError):
    """Least-squares or MLE fit failed to produce a usable result."""


class IntegrationError(QRouteSimError):
    """ODE integrator failed (step underflow or solver error)."""


class BracketError(QRouteSimError):
    """Root bracket endpoints do not straddle a sign change."""


class CapacityError(QRouteSimError):
    """Request exceeds the simulation (or placement) capacity bound."""


class IncompatibleMode(QRouteSimError):
    """Compilation scheme cannot realize the requested query mode."""
