"""Exception hierarchy for topoclust."""


class TopoClustError(Exception):
    """Base class for every error raised by this package."""


class GraphError(TopoClustError, ValueError):
    """Invalid graph input."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class EdgeListSyntaxError(GraphError):
    pass


class EmptyGraph(GraphError):
    pass


class UnknownNode(GraphError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


class MissingWeight(GraphError):
    pass


class LsccPresent(TopoClustError):
    """Raised when an operation requires an LSCC-free graph."""


class PathExplosion(TopoClustError):
    """Acyclic path enumeration exceeded the configured row cap."""


class InconsistentCommonOrder(TopoClustError):
    """Common nodes of a path matrix appear in different orders (logic bug)."""


class AnchorCycle(TopoClustError):
    """Anchor resolution looped without reaching a cluster root (logic bug)."""


class MaximalityUnavailable(TopoClustError):
    pass


class TooLarge(TopoClustError):
    pass


class NotAPartition(TopoClustError):
    """Brute-force maximal sets failed to partition the node set."""


class BadRange(TopoClustError, ValueError):
    pass


class NotConverged(TopoClustError):
    """Integration budget exhausted before the residual dropped below tolerance."""

    def __init__(self, message, result=None, trial=None):
        self.result = result
        self.trial = trial
        super().__init__(message)
