"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so that batch
front ends can report which contract was violated without parsing
message text.
"""


class DivCurlError(Exception):
    """Base class; ``code`` identifies the violated contract."""

    code = "ERROR"

    def __init__(self, message, *, code=None, **context):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.context = dict(context)


class MeshError(DivCurlError):
    """Invalid mesh data (orientation, topology, or file format)."""

    code = "MESH_INVALID"

    def __init__(self, message, *, code=None, line=None, **context):
        super().__init__(message, code=code, **context)
        self.line = line
        if line is not None:
            self.context["line"] = line


class SolverError(DivCurlError):
    code = "SOLVER_FAILURE"


class NonConvergenceError(SolverError):
    """Iteration budget exhausted before reaching the requested residual."""

    code = "NONCONVERGENCE"

    def __init__(self, message, *, iterations=None, residual=None, **context):
        super().__init__(message, iterations=iterations, residual=residual, **context)
        self.iterations = iterations
        self.residual = residual


class IncompatibleRHSError(SolverError):
    """Right-hand side has a constants component on a singular system."""

    code = "INCOMPATIBLE_RHS"


class DegenerateBError(SolverError):
    """Requested more eigenpairs than the B-positive subspace supports."""

    code = "DEGENERATE_B"


class IncompatibleDataError(DivCurlError):
    """Boundary/source data violates an integral compatibility identity.

    ``condition`` states the identity that failed, e.g.
    ``"volume integral of div data must equal total boundary flux"``.
    """

    code = "INCOMPATIBLE_DATA"

    def __init__(self, message, *, condition, residual=None, **context):
        super().__init__(message, condition=condition, residual=residual, **context)
        self.condition = condition
        self.residual = residual


class InsufficientBasisError(DivCurlError):
    code = "INSUFFICIENT_BASIS"


class EmptyGammaError(DivCurlError):
    code = "EMPTY_GAMMA"


class EmptyPartitionPieceError(DivCurlError):
    code = "EMPTY_PARTITION_PIECE"


class NotSimplyConnectedError(DivCurlError):
    code = "NOT_SIMPLY_CONNECTED"


class CirculationDetectedError(DivCurlError):
    """A closed edge cycle carries a nonzero line integral."""

    code = "CIRCULATION_DETECTED"

    def __init__(self, message, *, edge=None, mismatch=None, **context):
        super().__init__(message, edge=edge, mismatch=mismatch, **context)
        self.edge = edge
        self.mismatch = mismatch
