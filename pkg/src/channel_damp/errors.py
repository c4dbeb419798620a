"""Exception types shared across the laboratory."""


class ChannelDampError(Exception):
    """Base class for all errors raised by this package."""


# --- profile construction -------------------------------------------------

class MonotonicityViolation(ChannelDampError):
    pass


class PositivityViolation(ChannelDampError):
    pass


class SupportViolation(ChannelDampError):
    pass


class GridTooCoarse(ChannelDampError):
    pass


class InvalidInterval(ChannelDampError):
    pass


# --- homogeneous / spectral solves ---------------------------------------

class SingularStartFailure(ChannelDampError):
    pass


class NonFiniteValue(ChannelDampError):
    pass


class BoundaryPoint(ChannelDampError):
    pass


class MissingHomTable(ChannelDampError):
    pass


class NearEigenvalue(ChannelDampError):
    pass


class MissingSpectralData(ChannelDampError):
    pass


class ShapeMismatch(ChannelDampError):
    pass


# --- elliptic solves ------------------------------------------------------

class Overflow(ChannelDampError):
    pass


class NeumannZeroMode(ChannelDampError):
    pass


class IterationDiverged(ChannelDampError):
    pass


class DensityTooLarge(ChannelDampError):
    pass


# --- multipliers ----------------------------------------------------------

class ZeroModeForM3(ChannelDampError):
    pass


# --- evolution ------------------------------------------------------------

class CFLViolation(ChannelDampError):
    pass


class SupportBreach(ChannelDampError):
    pass


class WindowTooShort(ChannelDampError):
    pass


# --- CLI / configuration --------------------------------------------------

class ParseError(ChannelDampError):
    pass


class UnknownKey(ChannelDampError):
    pass


class RangeError(ChannelDampError):
    pass
