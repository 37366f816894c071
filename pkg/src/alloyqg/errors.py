"""Exception types raised across the package."""


class QuantumGraphError(Exception):
    """Base class for all package errors."""


class GraphError(QuantumGraphError, ValueError):
    pass


class UnknownVertex(GraphError):
    pass


class UnknownEdge(GraphError):
    pass


class LengthOutOfBounds(GraphError):
    pass


class NonPositiveLength(GraphError):
    pass


class BoxTooSmall(GraphError):
    pass


class AlloyConfigError(QuantumGraphError, ValueError):
    pass


class MissingEdgeEntry(AlloyConfigError):
    pass


class SupportTooShort(AlloyConfigError):
    pass


class ProfileOutOfBounds(AlloyConfigError):
    pass


class CoordinateOutOfRange(QuantumGraphError, ValueError):
    pass


class MeshMisaligned(QuantumGraphError, ValueError):
    pass


class MissingVertexCondition(QuantumGraphError, ValueError):
    pass


class SolverFailure(QuantumGraphError, RuntimeError):
    pass


class DimensionTooLarge(QuantumGraphError, RuntimeError):
    pass


class IncompleteSpectrum(QuantumGraphError, ValueError):
    pass


class NoVectors(QuantumGraphError, ValueError):
    pass


class RegionMisaligned(QuantumGraphError, ValueError):
    pass


class UnknownTarget(QuantumGraphError, ValueError):
    pass


class CheckFailed(QuantumGraphError, AssertionError):
    """A property check found a violating row; ``row`` holds it."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateCluster(QuantumGraphError, ValueError):
    pass


class FDInstability(QuantumGraphError, RuntimeError):
    pass


class GapGuardViolation(QuantumGraphError, ValueError):
    pass


class BadPartition(QuantumGraphError, ValueError):
    pass
