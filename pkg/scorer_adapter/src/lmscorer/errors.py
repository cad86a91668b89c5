class ScorerError(Exception):
    """Base class for adapter errors."""


class ModelLoadFailure(ScorerError):
    """The requested model could not be loaded."""


class TokenizationMismatch(ScorerError):
    """Completion tokens are not a suffix of the joint prompt+completion
    encoding, so per-token log-probabilities cannot be attributed."""


class UnknownModelSpec(ScorerError):
    """Model selector string is not of a supported form."""
