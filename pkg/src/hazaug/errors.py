"""Exception hierarchy shared across the pipeline.

Every error raised by hazaug derives from :class:`HazaugError` so the CLI can
map any pipeline failure to a nonzero exit code without enumerating modules.
"""


class HazaugError(Exception):
    """Base class for all hazaug errors."""


# --- calibration / OXTS parsing ---

class MissingKey(HazaugError):
    """A required key line is absent from a calibration file."""


class MalformedMatrix(HazaugError):
    """A calibration matrix line has the wrong arity or non-numeric entries."""


class TooFewFields(HazaugError):
    """An OXTS record has fewer whitespace-separated tokens than required."""


class NonNumericField(HazaugError):
    """An OXTS token could not be parsed as a decimal number."""


class MalformedRecord(HazaugError):
    """Parsed kinematics violate a domain invariant (e.g. negative speed)."""


# --- file ingestion ---

class UnreadableFile(HazaugError):
    """A referenced file is missing, truncated, or not decodable."""


class EmptyCorpus(HazaugError):
    """The corpus root contains no ingestible sequences."""


class CountMismatch(HazaugError):
    """Image and OXTS counts differ within a sequence."""


class MalformedDetection(HazaugError):
    """A detection entry is missing fields or has an inverted box."""


# --- geometry ---

class DimensionMismatch(HazaugError):
    """Grid shapes disagree (depth vs image vs intrinsics)."""


class NonPositiveDepth(HazaugError):
    """A point with z <= 0 cannot be projected."""


class EmptySegment(HazaugError):
    """No valid-depth points fall inside the requested bounding box."""


class DegenerateShift(HazaugError):
    """A translation would move a point across the near-plane guard."""


# --- resampling ---

class TooFewRecords(HazaugError):
    """Not enough records to define an empirical quantile."""


class InsufficientRare(HazaugError):
    """The rare partition is too small to interpolate within."""


class DegenerateRange(HazaugError):
    """All targets are identical; frequency weights are undefined."""


# --- evaluation ---

class LengthMismatch(HazaugError):
    """Prediction and truth vectors have different lengths."""


class EmptyInput(HazaugError):
    """A metric was requested over zero samples."""


class NoFrontVehicleRecords(HazaugError):
    """The manifest has no record with a front vehicle to split on."""


class SingularSystem(HazaugError):
    """Unregularized normal equations are rank-deficient."""


# --- configuration ---

class ConfigError(HazaugError):
    """A config file contains unknown keys or invalid values."""
