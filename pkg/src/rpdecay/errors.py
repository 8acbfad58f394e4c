"""Exception hierarchy. Every error raised on purpose derives from RpDecayError."""


class RpDecayError(Exception):
    pass


class DomainError(RpDecayError, ValueError):
    pass


class ConvergenceError(RpDecayError, ArithmeticError):
    pass


class RootFindError(ConvergenceError):
    pass


class ShapeError(RpDecayError, ValueError):
    pass


class UnsupportedError(RpDecayError, NotImplementedError):
    pass


class NumericalError(RpDecayError, ArithmeticError):
    pass


class EmptySlice(RpDecayError, ValueError):
    pass


class DegenerateSlice(RpDecayError, ValueError):
    pass


class ParamError(RpDecayError, ValueError):
    pass


class InsufficientData(RpDecayError, ValueError):
    pass


class NonpositiveValue(RpDecayError, ValueError):
    pass


class InsufficientRadius(RpDecayError, ValueError):
    pass


class ConfigError(RpDecayError, ValueError):
    pass
