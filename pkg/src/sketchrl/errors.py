"""Exception types shared across the package."""


class SketchRLError(Exception):
    """Base class for all package errors."""


class ConfigError(SketchRLError):
    """Invalid configuration (bad spline setup, image size, task id, ...)."""


class ShapeError(SketchRLError):
    """Array dimensions do not match what an operation requires."""


class FitError(SketchRLError):
    """Least-squares spline fit is infeasible or rank-deficient."""


class DegenerateTrajectoryError(SketchRLError):
    """Trajectory has no usable extent (all points identical)."""


class EmptySketchError(SketchRLError):
    """No stroke input to build a polyline from."""


class StateError(SketchRLError):
    """Operation called in the wrong lifecycle state (step after done, ...)."""


class TrainingDivergenceError(SketchRLError):
    """Non-finite loss or gradients encountered during training."""


class ContractError(SketchRLError):
    """A documented data contract was violated by the caller."""
