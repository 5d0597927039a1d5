"""Error taxonomy shared across the pipeline; the CLI maps these to exit codes."""


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


class DataError(ValueError):
    """Invalid or inconsistent input data (exit code 3)."""


class ParseError(DataError):
    pass


class SchemaError(DataError):
    pass


class ValidationError(DataError):
    pass


class NumericError(RuntimeError):
    """Numeric failure such as divergence or NaN gradients (exit code 4)."""
