"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`CurvlabError`
so the CLI can map it to exit code 1 in one place.
"""


class CurvlabError(Exception):
    """Base class for all library errors."""


class DomainError(CurvlabError, ValueError):
    """A point lies outside the domain or too close to its boundary."""


class ParameterError(CurvlabError, ValueError):
    """Invalid kernel or grid parameter."""


class DegenerateInputError(CurvlabError, ValueError):
    """Input is degenerate (duplicate points, vanishing vectors, rank drop)."""


class StepSizeError(CurvlabError, ValueError):
    """A finite-difference stencil would leave the admissible region."""


class ShapeError(CurvlabError, ValueError):
    """Matrix shapes are inconsistent."""


class NotCoprimeError(CurvlabError, ValueError):
    """Polynomials share a non-trivial common factor."""


class UnsupportedError(CurvlabError, NotImplementedError):
    """Operation not available for this configuration."""


class SingularPointError(CurvlabError, ValueError):
    """The multiplier loses rank at the requested point."""


class ChartError(CurvlabError, ValueError):
    """Evaluation outside the validity chart of a local frame."""


class MetricDegeneracyError(CurvlabError, ValueError):
    """A Gram matrix is numerically singular."""


class CertificateError(CurvlabError, ValueError):
    """A claimed left inverse does not satisfy Psi Theta = I."""


class IndeterminateRankError(CurvlabError, ValueError):
    """Numerical rank decision falls inside the ambiguity band."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ConfigError(CurvlabError, ValueError):
    """Malformed or schema-violating configuration."""
