"""Exception types shared across the library and mapped to CLI exit codes."""


class VsrlabError(Exception):
    """Base class for all vsrlab errors."""


class DataError(VsrlabError):
    """Bad input data: missing frames, shape mismatches, malformed files."""


class ConfigError(VsrlabError):
    """Invalid configuration: unknown keys, out-of-range values."""


class NumericalAbort(VsrlabError):
    """Training produced a non-finite loss; carries a diagnostic dump path."""

    def __init__(self, message, dump_path=None):
        super().__init__(message)
        self.dump_path = dump_path
