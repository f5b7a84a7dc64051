"""Exception types shared across the pipeline stages."""


class CdrflowError(Exception):
    """Base class for all pipeline errors."""


class ClippingExhausted(CdrflowError):
    """No land-valid point found within the rejection-sampling budget."""


class UnsortedInput(CdrflowError):
    """A per-user event stream has decreasing timestamps."""


class UnresolvedRegion(CdrflowError):
    """A staypoint needed for log building has no region at the requested level."""


class EmptyLog(CdrflowError):
    """An operation that needs at least one trace received an empty log."""


class MismatchedLog(CdrflowError):
    """A log contains adjacent pairs that the model it annotates does not."""


class EmptySelection(CdrflowError):
    """A variant filter selected nothing."""


class EmptyModel(CdrflowError):
    """A model conversion received a model with no activities."""


class DegenerateInput(CdrflowError):
    """Regression input too small or without variance in x."""


class ClassMismatch(CdrflowError):
    """Survey classes do not partition the observed destinations."""


class InvalidConfig(CdrflowError):
    """A scenario or pipeline configuration violates its invariants."""


class ScenarioMismatch(CdrflowError):
    """Detected artifacts do not belong to the ground-truth scenario."""


class DependencyError(CdrflowError):
    """A pipeline stage needs an artifact an earlier stage has not produced."""
