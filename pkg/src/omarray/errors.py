"""Exception types raised by the simulation modules."""


class ValidationError(ValueError):
    """Parameters violate a hard physical bound."""


class SingularPointError(ArithmeticError):
    """A closed-form expression hits a genuine 0/0 or pole."""


class SingularMatrixError(SingularPointError):
    """Transfer matrix is undefined because the element transmission vanishes."""


class BandEdgeError(ArithmeticError):
    """Bloch eigenvectors are degenerate (at or too close to a band edge)."""


class BandGapError(ValueError):
    """Requested frequency lies inside a band gap where no propagating mode exists."""

    def __init__(self, message, edges=None):
        super().__init__(message)
        self.edges = edges


class UnstableDynamicsError(RuntimeError):
    """Linear rate equations have no steady state (net gain)."""


class InfeasibleDesignError(RuntimeError):
    """No candidate in the search space satisfies every design constraint."""

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding


class StepSizeError(ValueError):
    """Requested integration step exceeds the stability limit of the explicit integrator."""
