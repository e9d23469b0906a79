"""Exception hierarchy for the ensemble rejection sampling package."""


class ERSError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(ERSError, ValueError):
    """A documented precondition was not met by the caller."""


class BoundViolation(ContractViolation):
    """A weight evaluation exceeded its declared upper bound."""


class BoundUnavailable(ERSError):
    """The model does not declare the lower weight bound needed for the theory bound."""


class ConfigError(ERSError, ValueError):
    """Experiment configuration could not be parsed or validated."""


class DataError(ERSError, ValueError):
    """Observation data is missing or malformed."""
