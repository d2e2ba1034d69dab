"""Exception types shared across the package."""


class JacobiError(Exception):
    """Base class for all errors raised by cjacobi."""


class ZeroOffDiagonal(JacobiError, ZeroDivisionError):
    def __init__(self, index):
        super().__init__(f"off-diagonal coefficient a_{index} vanishes")
        self.index = index


class IndexOutOfTable(JacobiError, IndexError):
    pass


class SlotOutOfRange(JacobiError, ValueError):
    pass


class OffsetOutOfRange(JacobiError, ValueError):
    pass


class EmptyRange(JacobiError, ValueError):
    pass


class DegenerateInitial(JacobiError, ValueError):
    pass


class RootOnBoundary(JacobiError):
    def __init__(self, z):
        super().__init__(f"characteristic polynomial vanishes near boundary point {z}")
        self.z = z


class SignChange(JacobiError):
    """Turan determinants changed sign in the recorded tail."""


class BudgetExceeded(JacobiError):
    """Root search ran out of its cell budget before isolating every root."""
