"""Exception types raised across the simulator."""


class PhononBellError(Exception):
    """Base class for all package errors."""


class CapacityError(PhononBellError):
    """Requested Hilbert space exceeds the configured dimension cap."""


class ParameterError(PhononBellError):
    """Physical parameters violate a validity condition."""


class StiffnessError(PhononBellError):
    """The adaptive integrator failed (step-size underflow)."""


class IntegrityError(PhononBellError):
    """A propagated state violates trace/hermiticity/positivity bounds."""


class NoClickError(PhononBellError):
    """Heralding probability below the click floor; the run is discarded."""


class DegenerateStateError(PhononBellError):
    """Two-qubit restriction retains negligible probability."""


class FitError(PhononBellError):
    """Fringe fit did not converge."""
