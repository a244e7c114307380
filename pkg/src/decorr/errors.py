"""Exception types raised across the package.

Every error derives from :class:`DecorrError` so callers (the CLI in
particular) can catch one type and report a structured message.
"""


class DecorrError(Exception):
    """Base class for all package errors."""


# -- data model ---------------------------------------------------------------

class ConstantColumn(DecorrError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero variance")


class DimensionMismatch(DecorrError, ValueError):
    pass


class ParseError(DecorrError, ValueError):
    def __init__(self, row, col, value=None):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"non-numeric cell {value!r} at row {row}, column {col}")


class MissingColumn(DecorrError, KeyError):
    def __init__(self, name, available=()):
        self.name = name
        self.available = tuple(available)
        super().__init__(f"response column {name!r} not found")

    def __str__(self):
        return self.args[0]


class InvalidPermutation(DecorrError, ValueError):
    pass


# -- orthonormalization -------------------------------------------------------

class RankDeficient(DecorrError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} is linearly dependent on earlier columns")


class IndexOutOfRange(DecorrError, IndexError):
    pass


# -- screening / lasso --------------------------------------------------------

class SingularSystem(DecorrError, ArithmeticError):
    pass


class GridDegenerate(DecorrError, ValueError):
    pass


class NotConverged(DecorrError, RuntimeError):
    """Raised when coordinate descent hits ``max_sweeps``; ``fit`` holds the partial result."""

    def __init__(self, fit, context=""):
        self.fit = fit
        self.context = context
        msg = f"coordinate descent did not converge in {fit.iterations} sweeps (lambda={fit.lam:g})"
        if context:
            msg += f" [{context}]"
        super().__init__(msg)


class NotOrthonormal(DecorrError, ValueError):
    pass


# -- stability ----------------------------------------------------------------

class NoDefinedStability(DecorrError, ValueError):
    pass


# -- simulation / diagnostics -------------------------------------------------

class NotRepairable(DecorrError, ArithmeticError):
    pass


class UndefinedTruth(DecorrError, ValueError):
    pass


class SingularGram(DecorrError, ArithmeticError):
    pass


class NotPD(DecorrError, ValueError):
    pass


class ExperimentFailed(DecorrError, RuntimeError):
    pass
