"""Exception hierarchy.

``InputError`` subclasses signal bad input or usage (CLI exit code 2),
``NumericError`` subclasses signal numeric failure (CLI exit code 3).
"""


class ElimQError(Exception):
    pass


class InputError(ElimQError, ValueError):
    pass


class NumericError(ElimQError, ArithmeticError):
    pass


# sparse core
class MatrixMarketError(InputError):
    pass


class MalformedHeader(MatrixMarketError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class DuplicateEntry(InputError):
    pass


class NonSquare(InputError):
    pass


class SizeMismatch(InputError):
    pass


class TooLargeForDense(InputError):
    pass


class TooLarge(InputError):
    pass


# ordering
class AlreadyEliminated(InputError):
    pass


class NodeOutOfRange(InputError, IndexError):
    pass


class PolicyDomainMismatch(InputError):
    pass


# pivoting
class ZeroPivotColumn(NumericError):
    pass


class ZeroActiveSubmatrix(NumericError):
    pass


class ZeroDiagonal(NumericError):
    pass


class NumericBreakdown(NumericError):
    pass


class Singular(NumericError):
    pass


class SingularUpper(NumericError):
    pass


class ZeroMatrix(NumericError):
    pass


# scheduling
class CyclicDag(InputError):
    pass


# q-learning
class DomainMismatch(InputError):
    pass


class EmptyCorpus(InputError):
    pass


class VersionMismatch(InputError):
    pass


class Corrupt(InputError):
    pass


# driver
class UnknownFamily(InputError):
    pass
