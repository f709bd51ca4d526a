"""Exception hierarchy shared by every module of the package."""


class EmpowermentError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteState(EmpowermentError, FloatingPointError):
    """A simulated state left the finite reals (usually ``dt`` is too coarse)."""


class SingularMassMatrix(EmpowermentError):
    """The mass matrix of a mechanical model is numerically singular."""


class IndexOutOfRange(EmpowermentError, IndexError):
    """A sensitivity block was requested outside the causal index range."""


class NumericalFailure(EmpowermentError):
    """A linear-algebra routine failed to converge."""


class GridTooLarge(EmpowermentError, ValueError):
    """The candidate action grid exceeds the supported size."""


class ParseError(EmpowermentError, ValueError):
    """A run configuration could not be parsed or validated.

    Parameters
    ----------
    key : str or None
        Offending configuration key, if known.
    reason : str
        Human readable explanation.
    line : int or None
        1-based line number in the source document, if known.
    """

    def __init__(self, reason, key=None, line=None):
        self.key = key
        self.reason = reason
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + reason)
