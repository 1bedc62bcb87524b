"""
Error hierarchy for the disaggregation toolkit.

Every error carries a machine-readable ``code`` so the harness and the
management commands can count and report failures without parsing messages.
"""


class DisaggregationError(Exception):
    """Base class for all toolkit errors."""

    code = 'disaggregation_error'

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {'code': self.code, 'message': str(self), **self.details}


class InvalidParameterError(DisaggregationError, ValueError):
    """A parameter lies outside its admissible range."""

    code = 'invalid_parameter'


class QuadratureError(DisaggregationError):
    """Quadrature failed to reach its tolerance."""

    code = 'quadrature_nonconvergence'

    def __init__(self, message: str, achieved_error: float, **details):
        super().__init__(message, achieved_error=achieved_error, **details)
        self.achieved_error = achieved_error


class DegenerateSampleError(DisaggregationError):
    """The sample innovation variance estimate is not positive."""

    code = 'nonpositive_innovation_variance'


class SynthesisError(DisaggregationError):
    """Both Gaussian synthesis routes failed."""

    code = 'synthesis_failed'


class ExperimentFailureError(DisaggregationError):
    """Too many Monte-Carlo replications failed."""

    code = 'failure_threshold_exceeded'

    def __init__(self, message: str, failed: int, total: int):
        super().__init__(message, failed=failed, total=total)
        self.failed = failed
        self.total = total


class DivergentIntegralError(DisaggregationError):
    """A log-integral needed by the Kolmogorov formula diverges."""

    code = 'divergent_log_integral'


class VarianceConventionError(DisaggregationError):
    """The two innovation-variance conventions disagree."""

    code = 'variance_convention_mismatch'


class DegenerateVarianceError(DisaggregationError):
    """A Monte-Carlo variance needed on a log scale is not positive."""

    code = 'nonpositive_variance'
