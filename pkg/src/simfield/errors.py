"""Exception hierarchy shared across the toolkit.

Every error raised by the public API derives from SimfieldError so callers
(and the CLI) can catch one base class.
"""


class SimfieldError(Exception):
    """Base class for all toolkit errors."""


# --- similarity fields ---

class ShapeMismatch(SimfieldError):
    """Value array is not square or does not match the label count."""


class DiagonalNotOne(SimfieldError):
    """A self-similarity entry differs from exactly 1."""


class OutOfRange(SimfieldError):
    """A similarity or threshold value lies outside [0, 1]."""


class InvalidLabel(SimfieldError):
    """Registry label is empty or duplicated."""


class RegistryMismatch(SimfieldError):
    """Two fields do not share the same ordered entity registry."""


class WeightsNotConvex(SimfieldError):
    """Combination weights are negative or do not sum to 1."""


class UnknownEntity(SimfieldError):
    """Entity is not a member of the field's registry."""


class AlphaOutOfRange(SimfieldError):
    """Threshold or down-weighting factor outside its admissible interval."""


class EmptyGeneratedSet(SimfieldError):
    """Coverage/fidelity requested for an empty generated set."""


class InverseDomain(SimfieldError):
    """Readout inverse called outside the open interval (0, 1)."""


# --- sequence traces ---

class TraceTooShort(SimfieldError):
    """Trace has fewer samples than the detector's tail window needs."""


class MissingReadouts(SimfieldError):
    """Trace carries neither precomputed readouts nor a readout function."""


# --- probes and matrices ---

class EmptyCategory(SimfieldError):
    """Category token is empty or blank."""


class DuplicateBrand(SimfieldError):
    """Brand list contains a repeated token."""


class TooFewBrands(SimfieldError):
    """Pairwise probing needs at least two brands."""


class NoVariants(SimfieldError):
    """A score record carries an empty completion-variant list."""


class BothNegInfinite(SimfieldError):
    """Both completion log-probabilities are negative infinity."""


class RaggedTemplates(SimfieldError):
    """Pairs were not all probed with the same template set."""


class InvalidMatrices(SimfieldError):
    """Pairwise matrices violate a structural invariant."""


# --- ranking and calibration ---

class DisconnectedComparisonGraph(SimfieldError):
    """The positive-count comparison graph is not connected."""


class GammaNonPositive(SimfieldError):
    """Power-calibration exponent must be strictly positive."""


class LengthMismatch(SimfieldError):
    """Prediction and ground-truth vectors differ in length or ordering."""


# --- lock filter ---

class MissingYMatrix(SimfieldError):
    """Lock detection requires the yes-probability matrix Y."""


class TauOutOfRange(SimfieldError):
    """Lock threshold must lie in (0.5, 1]."""


class NoLockedPairs(SimfieldError):
    """Permutation control requires at least one locked pair."""


class PoolTooSmall(SimfieldError):
    """Candidate pool is smaller than the number of pairs to sample."""


# --- fixtures and files ---

class UnknownCategory(SimfieldError):
    """Category token is not present in the fixture registry."""


class SchemaViolation(SimfieldError):
    """A score-file line violates the record schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateRecord(SimfieldError):
    """Two score records share the same (pair, template, model) key."""
