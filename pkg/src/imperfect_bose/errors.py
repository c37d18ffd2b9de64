"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where the quantity is defined."""


class DivergenceError(ArithmeticError):
    """The requested quantity is infinite (e.g. a polylog at z = 1 with s <= 1)."""


class GapError(DomainError):
    """The ground-mode gap E_0 - mu + a*rho is not strictly positive."""


class NoRootError(ValueError):
    """The self-consistency equation has no root on the requested branch."""


class BracketError(RuntimeError):
    """Bracket expansion or an iterative solve failed to terminate."""
