"""Exception hierarchy shared across the package."""


class FcmReduceError(Exception):
    """Base class for all package errors."""


class ContractError(FcmReduceError):
    """An operation was called with arguments violating its preconditions."""


class ConfigError(FcmReduceError):
    """Invalid or unresolvable configuration (bad names, labels, ranges)."""


class GenerationError(FcmReduceError):
    """A population or topology generator could not produce a valid result."""


class ChannelError(FcmReduceError):
    """No shared concept available to carry an interaction tie."""


class MetricError(FcmReduceError):
    """A comparison measure is undefined for the given inputs."""


class ReportError(FcmReduceError):
    """Fidelity reporting was asked to summarize unusable data."""
