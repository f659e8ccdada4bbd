"""Exception types shared across the package."""


class QclabError(Exception):
    """Base class for all package errors."""


class DegenerateRank(QclabError):
    """da restricted to the horizontal distribution has rank < 2 at a point."""


class SingularSystem(QclabError):
    """The pointwise Reeb linear system is not uniquely solvable."""


class NonOrthonormalFrame(QclabError):
    """Operator assembly requires the declared frame metric to be the identity."""


class UnsupportedModel(QclabError):
    """The requested route is not available for this model."""


class NoConvergence(QclabError):
    """Iterative eigensolver stalled before reaching the requested residual."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class OutOfRange(QclabError):
    """Query beyond the certified completeness window of a spectrum."""


class TailDominates(QclabError):
    """The certified spectral tail bound exceeds the tolerated fraction of the value."""


class UnsupportedSymbol(QclabError):
    """Symbol outside the separable class accepted by the quantizer."""


class NonInvertibleRho(QclabError):
    """The oscillator coefficient jet has vanishing constant term."""


class ResonanceLeak(QclabError):
    """A non-invariant monomial survived a normal-form step that should kill it."""


class TruncationOverflow(QclabError):
    """Exact computation would exceed the configured truncation order."""


class ConjugationNonterminating(QclabError):
    """The exp-ad series for this generator does not terminate on rational jets."""


class StepFailure(QclabError):
    """The adaptive ODE controller could not meet the local error tolerance."""


class MissingInput(QclabError):
    """A required input document is absent."""


class ConfigError(QclabError):
    """Invalid run configuration (schema violation or unknown model)."""


class ComputeError(QclabError):
    """A module computation failed; carries module context."""

    def __init__(self, message, module=None):
        super().__init__(message)
        self.module = module
