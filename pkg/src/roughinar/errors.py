"""Exception taxonomy shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its admissible range."""


class RangeError(ValueError):
    """An index or length exceeds what the stored data supports."""


class DomainError(ValueError):
    """A function argument is outside the mathematical domain."""


class StabilityError(RuntimeError):
    """A stability precondition is violated (e.g. kernel mass >= 1, intensity blow-up)."""


class CapacityError(RuntimeError):
    """A resource limit would be exceeded."""


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists every violation."""
