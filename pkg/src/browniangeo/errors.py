"""Exception and warning types shared across the package."""


class BrownianGeoError(Exception):
    """Base class for package errors."""


class DegenerateMetricError(BrownianGeoError):
    """Metric matrix is not symmetric positive definite at the point."""


class ChartDomainError(BrownianGeoError):
    """Point lies outside the chart's trust region."""


class OverlapError(BrownianGeoError):
    """Point is not in the overlap of the two charts."""


class UnsupportedDistanceError(BrownianGeoError):
    """Manifold has no analytic reference distance."""


class ImmersionError(BrownianGeoError):
    """Differential is rank deficient or too ill conditioned."""


class StepFailureError(BrownianGeoError):
    """A simulation step left every trust region.

    Carries the path index and simulation time of the failure.
    """

    def __init__(self, message, path_index=None, time=None):
        super().__init__(message)
        self.path_index = path_index
        self.time = time


class MollifierError(BrownianGeoError):
    """Mollification scale incompatible with the atlas or the embedding."""


class InsufficientSamplingError(BrownianGeoError):
    """A density estimate came back empty; carries the offending t."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConfigError(BrownianGeoError):
    """Invalid experiment or simulation configuration."""


class ImmersionWarning(UserWarning):
    """Rank-deficient differential detected; result may be unreliable."""


class DriftOffWarning(UserWarning):
    """Extrinsic path wandered far from the surface."""


class FrameStabilityWarning(UserWarning):
    """Frame orthonormality defect grew past the stability budget."""
