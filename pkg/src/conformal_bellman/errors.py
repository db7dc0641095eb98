class NoSignChange(RuntimeError):
    """No sign change of L_p was found in (0, 1)."""


class DegenerateDerivative(ArithmeticError):
    """L_p'(z_p) is too close to zero to match derivatives at the glue point."""


class OriginUndefined(ValueError):
    """The homogeneous lift is not defined at x = y = 0."""


class NonFiniteState(FloatingPointError):
    """A simulated path overflowed or became non-finite."""

    def __init__(self, message, path=None, step=None):
        super().__init__(message)
        self.path = path
        self.step = step
