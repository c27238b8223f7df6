"""Exception hierarchy shared across the toolchain."""


class ShypeError(Exception):
    """Base class for all toolchain errors."""


class EvalError(ShypeError):
    """Expression evaluation failed."""


class DivisionByZero(EvalError):
    pass


class DomainError(EvalError):
    """sqrt of a negative, ln of a non-positive, and friends."""


class UnboundVariable(EvalError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class BadParameter(ShypeError):
    """Distribution parameters evaluate to an illegal value."""


class NameClash(ShypeError):
    """Fresh variable generated during expansion collides with a model variable."""


class GammaUndefined(ShypeError):
    """Two cooperating components updated the same influence inconsistently."""


class StateSpaceCap(ShypeError):
    """The LTS fixed point exceeded the configured configuration bound."""


class MissingInfluenceTypeDef(ShypeError):
    pass


class ResetIncompatible(ShypeError):
    """Product factors reset the same variable to contradictory values."""


class InitIncompatible(ShypeError):
    pass


class ChainCapExceeded(ShypeError):
    """Too many instantaneous firings at one time instant (likely Zeno)."""

    def __init__(self, time: float, cap: int):
        super().__init__(
            f"more than {cap} simultaneous instantaneous firings at t={time}"
        )
        self.time = time
        self.cap = cap


class NonComparableRate(ShypeError):
    """State-dependent rates whose equality cannot be decided syntactically."""


class UnknownParameter(ShypeError):
    pass


class UnknownDerivative(ShypeError):
    pass
