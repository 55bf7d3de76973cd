"""Exception types shared across the package."""


class CapacityError(ValueError):
    """A request exceeds a documented size cap (kernel dimension, enumeration count)."""


class NumericalError(ArithmeticError):
    """A numerical validity check failed: non-unitary product, bad determinant
    domain, invariant violation, or a non-convergent iteration."""
