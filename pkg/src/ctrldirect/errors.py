"""Exception types shared across the toolkit.

The CLI maps any of these to exit status 1 and prints the message
verbatim, so messages should be short and self-contained.
"""


class GraphError(ValueError):
    """Malformed graph file or violated graph invariant."""


class QueryError(ValueError):
    """Ill-posed graphical query (overlapping sets, unknown nodes, ...)."""


class DatasetError(ValueError):
    """Invalid matched case-control data."""


class FitError(RuntimeError):
    """Estimation failure (nonconvergence, overflow, singular matrices)."""


class SeparationError(FitError):
    """Monotone likelihood: the conditional MLE does not exist."""


class NonIdentifiedError(FitError):
    """The data carry no information on a requested parameter."""


class SimulationError(RuntimeError):
    """Simulator misconfiguration or an unusable generated study."""
