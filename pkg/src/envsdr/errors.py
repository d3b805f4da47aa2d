"""Exception hierarchy for envsdr."""


class EnvSDRError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(EnvSDRError, ValueError):
    pass


class NotPSD(EnvSDRError, ValueError):
    pass


class RankMismatch(EnvSDRError, ValueError):
    pass


class TooManySlices(EnvSDRError, ValueError):
    pass


class SliceTooSmall(EnvSDRError, ValueError):
    pass


class DegenerateSpectrum(EnvSDRError, ValueError):
    pass


class BootstrapDegenerate(EnvSDRError, RuntimeError):
    pass


class ParseError(EnvSDRError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyData(EnvSDRError, ValueError):
    pass


class ConfigError(EnvSDRError, ValueError):
    pass
