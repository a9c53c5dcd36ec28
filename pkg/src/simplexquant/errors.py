"""Exception hierarchy.

Every error raised deliberately by the toolkit derives from
:class:`QuantificationError`.  The ``exit_code`` attribute is what the CLI
returns when the error escapes a command.
"""


class QuantificationError(Exception):
    exit_code = 2


class ContractError(QuantificationError, ValueError):
    """Inputs violate an operation's preconditions (shapes, missing data)."""


class DegenerateInputError(QuantificationError, ValueError):
    """Input has no usable mass or structure (all-zero vectors, empty matrices)."""


class NumericError(QuantificationError, ValueError):
    """Non-finite values where finite ones are required."""


class RangeError(QuantificationError, ValueError):
    """A scalar lies outside its admissible interval."""


class BinaryFeaturesRequired(ContractError):
    pass


class DegenerateClassError(DegenerateInputError):
    """A class has no rows where at least one is required."""


class DegenerateClassifierError(DegenerateInputError):
    """Classifier rates carry no signal (tpr equal to fpr)."""


class InvalidSystemError(ContractError):
    """Regression system unsuitable for the requested loss."""


class StratificationError(ContractError):
    pass


class PoolExhaustedError(QuantificationError):
    def __init__(self, class_name, needed, available):
        self.class_name = class_name
        self.needed = needed
        self.available = available
        super().__init__(
            f"pool exhausted for class {class_name!r}: need {needed} rows, have {available}"
        )


class ZeroPriorError(QuantificationError, ZeroDivisionError):
    """A training prior of zero meets a nonzero estimated prior."""


class SolverFailure(QuantificationError):
    exit_code = 3


class ConfigError(QuantificationError):
    exit_code = 1


class DataError(QuantificationError):
    """File content could not be parsed into a dataset or matrix."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path = path
        self.line = line
        self.field = field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
