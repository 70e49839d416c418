"""Exception hierarchy shared by all modules.

ValidationError maps to CLI exit code 1, ResourceError to exit code 2.
"""


class MoralBenchError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(MoralBenchError):
    """Malformed input data, violated preconditions, or contract breaches."""

    exit_code = 1


class ResourceError(MoralBenchError):
    """Missing or unparsable resource files (stopwords, lexicons, vectors)."""

    exit_code = 2


class UnassignableDocumentError(ValidationError):
    """A document has no in-vocabulary tokens and cannot be assigned a topic."""
