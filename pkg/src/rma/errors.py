"""Exception hierarchy shared by every layer of the engine."""


class RmaError(Exception):
    """Base class for all engine errors."""


# -- storage / schema ------------------------------------------------------


class SchemaError(RmaError):
    pass


class UnknownAttributeError(SchemaError):
    def __init__(self, name, available=()):
        self.name = name
        msg = f"unknown attribute {name!r}"
        if available:
            msg += f" (available: {', '.join(available)})"
        super().__init__(msg)


class DuplicateAttributeError(SchemaError):
    pass


class LengthMismatchError(RmaError):
    pass


class KindError(RmaError):
    """A value or expression has the wrong column kind."""


# -- relational matrix operations ------------------------------------------


class KeyViolationError(RmaError):
    """The order schema does not form a key of the argument relation."""


class NonNumericApplicationError(RmaError):
    pass


class OrderSchemaCardinalityError(RmaError):
    pass


class UnionCompatibilityError(RmaError):
    pass


class ContextNameCollisionError(RmaError):
    pass


class MissingRelationNameError(RmaError):
    pass


class DuplicateRowsError(RmaError):
    pass


class CastError(RmaError):
    pass


# -- kernels ----------------------------------------------------------------


class MatrixError(RmaError):
    pass


class DimensionMismatchError(MatrixError):
    pass


class SingularMatrixError(MatrixError):
    pass


class NonSymmetricError(MatrixError):
    def __init__(self, msg="unsupported: non-symmetric eigenproblem"):
        super().__init__(msg)


class NotPositiveDefiniteError(MatrixError):
    pass


class RankDeficientError(MatrixError):
    pass


class NonConvergenceError(MatrixError):
    pass


# -- SQL --------------------------------------------------------------------


class SqlError(RmaError):
    """Error raised by the SQL front end, carrying a phase and position."""

    phase = "sql"

    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(self.format())

    def format(self):
        text = f"ERROR {self.phase}: {self.message}"
        if self.line is not None:
            text += f" at line {self.line} col {self.col}"
        return text


class SqlSyntaxError(SqlError):
    phase = "parse"

    def __init__(self, message, line=None, col=None, expected=()):
        self.expected = tuple(sorted(set(expected)))
        if self.expected:
            message = f"{message}; expected one of: {', '.join(self.expected)}"
        super().__init__(message, line, col)


class PlanError(SqlError):
    phase = "plan"


class ExecutionError(SqlError):
    phase = "execute"


class IngestError(RmaError):
    pass


class CatalogError(RmaError):
    pass


class EvaluationError(RmaError):
    """Runtime failure while evaluating a scalar expression."""
