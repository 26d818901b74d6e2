"""Exception types raised across the package."""


class DomainError(ValueError):
    """Input outside the domain of a function (bad exponent, non-finite value, origin)."""


class ParameterError(ValueError):
    """Invalid model or experiment parameters."""


class HypothesisError(ValueError):
    """A forcing term violates the growth/sign hypotheses.

    ``failures`` lists the names of the violated inequalities.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("hypothesis check failed: " + "; ".join(self.failures))


class IntegrationError(RuntimeError):
    """The ODE integrator could not continue (step size underflow, step budget)."""

    def __init__(self, message, time):
        self.time = float(time)
        super().__init__(f"{message} at t={self.time:.17g}")


class InversionError(RuntimeError):
    """Could not solve h(r) = h for r on a monotone bracket."""


class AnalysisError(RuntimeError):
    """A diagnostic could not be formed (e.g. ambiguous angle unwrapping)."""
