class RtmError(Exception):
    """
    Base class for every error raised by rough_rtm.
    exit_code is the process exit code the command line front end uses.
    """
    exit_code: int = 1


class ConfigError(RtmError, ValueError):
    """Invalid configuration value, unknown key or violated precondition."""
    exit_code = 2

    def __init__(self, message: str, key: str = None):
        self.key = key
        if key is not None:
            message = f"[{key}] {message}"
        super(ConfigError, self).__init__(message)


class DomainError(RtmError, ValueError):
    """Argument outside the mathematical domain of an operation."""
    exit_code = 2


class SolverError(RtmError, ArithmeticError):
    """Ill-conditioned or non-finite linear system."""
    exit_code = 3


class DataFormatError(RtmError, IOError):
    """Malformed RTMD / RTMG / RTMV file."""
    exit_code = 4
