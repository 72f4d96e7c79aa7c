"""Exception hierarchy shared by every module."""


class PVSSError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PVSSError, ValueError):
    """An argument lies outside the range an operation accepts."""


class SearchExhausted(PVSSError):
    """Prime or generator search ran past its candidate bound."""


class ZeroInverse(PVSSError, ZeroDivisionError):
    """Attempted to invert a value congruent to 0 mod q."""


class DegenerateExponent(ZeroInverse):
    """A group element reduced to 0 mod q where an exponent inverse is needed.

    Protocol-level abort: the inverse-exponent step is undefined for it.
    """

    def __init__(self, value: int):
        super().__init__(f"group element {value:#x} is 0 mod q; inverse exponent undefined")
        self.value = value


class NonCanonicalShare(PVSSError):
    """A decrypted share decoded to an integer >= q."""

    def __init__(self, value: int, q: int):
        super().__init__(f"decrypted value {value} is not a canonical scalar (q={q})")
        self.value = value


class DuplicateIndex(ParameterError):
    pass


class IndexOutOfRange(ParameterError):
    pass


class InsufficientValidShares(PVSSError):
    def __init__(self, needed: int, valid: list[int], rejected: list[int]):
        super().__init__(
            f"need {needed} valid shares, got {len(valid)} (rejected indices: {rejected})"
        )
        self.needed = needed
        self.valid = valid
        self.rejected = rejected


class ProtocolError(PVSSError):
    """A protocol step was invoked out of phase order or with missing inputs."""
