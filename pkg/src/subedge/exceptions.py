"""Exception hierarchy for subedge."""


class SubedgeError(Exception):
    """Base class for all errors raised by this package."""


class GraphFormatError(SubedgeError, ValueError):
    """An edge-list file could not be parsed."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class GraphValidationError(SubedgeError, ValueError):
    """A graph violates the simple-undirected-graph invariants."""


class EmptyGraphError(SubedgeError, ValueError):
    """The graph has no edges, so edge sampling is undefined."""


class EstimatorBudgetExceeded(SubedgeError, RuntimeError):
    """The sublinear degree estimator hit its hard query cap."""


class PreprocessingFailure(SubedgeError, RuntimeError):
    """No sampled multiset passed the degree-mass acceptance band.

    Attributes
    ----------
    sets_drawn : int
        Number of multisets that were drawn and rejected.
    ratios : list of float
        ``m(S_i) / (d_est * s)`` for each rejected multiset.
    """

    def __init__(self, sets_drawn, ratios):
        self.sets_drawn = sets_drawn
        self.ratios = list(ratios)
        shown = ", ".join(f"{r:.4g}" for r in self.ratios)
        super().__init__(
            f"no S_i accepted: all {sets_drawn} multisets fell outside "
            f"[1/4, 12] (normalized masses: {shown})"
        )


class IterationCapExceeded(SubedgeError, RuntimeError):
    """The rejection loop ran past its safety cap without returning an edge."""


class StateMismatchError(SubedgeError, ValueError):
    """A serialized sampler state does not belong to the given graph."""
