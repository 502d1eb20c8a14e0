"""Exception types raised across the package."""


class TiscaError(Exception):
    """Base class for all package errors."""


class EmptySample(TiscaError, ValueError):
    pass


class NonFiniteValue(TiscaError, ValueError):
    def __init__(self, index, value=None):
        self.index = index
        self.value = value
        super().__init__(f"non-finite value {value!r} at index {index}")


class InsufficientData(TiscaError, ValueError):
    pass


class NonPositiveDf(TiscaError, ValueError):
    pass


class ZeroVariance(TiscaError, ValueError):
    pass


class InvalidAlpha(TiscaError, ValueError):
    pass


class EmptyInput(TiscaError, ValueError):
    pass


class OutOfRangeP(TiscaError, ValueError):
    def __init__(self, index, value=None):
        self.index = index
        self.value = value
        super().__init__(f"p-value {value!r} at index {index} is outside [0, 1]")


class InvalidRange(TiscaError, ValueError):
    pass


class RunFailed(TiscaError, RuntimeError):
    def __init__(self, seed, cause):
        self.seed = seed
        self.cause = cause
        super().__init__(f"simulation run with seed {seed} failed: {cause}")


class NonFiniteMetric(RunFailed):
    def __init__(self, seed, name, value=None):
        self.name = name
        self.value = value
        super().__init__(seed, f"metric {name!r} is not finite ({value!r})")


class SchemaMismatch(TiscaError, ValueError):
    pass


class GapInSeeds(TiscaError, ValueError):
    pass


class SingularDesign(TiscaError, ValueError):
    pass


class LengthMismatch(TiscaError, ValueError):
    pass


class ConfigError(TiscaError, ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(ConfigError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
