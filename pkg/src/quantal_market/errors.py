"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage errors are handled by argparse,
SchemaError/DataError exit with 2, NumericalError with 3.
"""


class QuantalMarketError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(QuantalMarketError):
    """Invalid attribute schema, unknown level, or a coding violation."""


class DataError(QuantalMarketError):
    """Malformed or inconsistent choice/respondent data."""


class NumericalError(QuantalMarketError):
    """Infeasible parameters, singular information, or failed optimization."""
