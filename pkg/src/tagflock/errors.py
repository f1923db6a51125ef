"""Exception hierarchy shared across the package.

``ValidationError`` and its subclasses cover bad user input (CLI exit code 2);
``InvariantViolation`` flags internal consistency failures (CLI exit code 3).
"""


class TagflockError(Exception):
    """Base class for all tagflock errors."""


class ValidationError(TagflockError):
    """Invalid argument, file content, or configuration supplied by a caller."""


class IngestError(ValidationError):
    """Corpus or batch ingestion failed (duplicate ids, malformed records)."""


class EmptyModelError(ValidationError):
    """Distributional model construction received no usable tokens."""


class InvalidQueryError(ValidationError):
    """Query violates its contract (empty tags, non-positive budgets)."""


class ConfigurationError(ValidationError):
    """Inconsistent configuration values (thresholds, labels, synthetic specs)."""


class InvariantViolation(TagflockError):
    """An internal invariant was broken; indicates a bug, not bad input."""
