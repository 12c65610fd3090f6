"""Named test functions evaluated on a space's scalar coordinate."""

import numpy as np

from ._validation import DomainError


def _weierstrass3(x):
    return sum(2.0 ** (-j / 2) * np.cos(2 * np.pi * 4.0 ** j * x) for j in range(3))


FUNCTIONS = {
    "const": lambda x: np.ones_like(x),
    "identity": lambda x: x.copy(),
    "sin2pi": lambda x: np.sin(2 * np.pi * x),
    "holder07": lambda x: np.abs(x - 0.5) ** 0.7,
    "weierstrass3": _weierstrass3,
}

# the four-function family used for the Besov/Hajlasz comparisons
FAMILY = ("identity", "sin2pi", "holder07", "weierstrass3")


def evaluate(name, space):
    """Sample the named function on ``space.coordinate()``."""
    try:
        fn = FUNCTIONS[name]
    except KeyError:
        raise DomainError(
            f"unknown test function {name!r}; known: {sorted(FUNCTIONS)}") from None
    return fn(space.coordinate())


def lipschitz_constant(space, f):
    """Largest difference quotient of `f` over all pairs of sample points."""
    d = space.distances
    off = d > 0
    return float(np.max(np.abs(f[:, None] - f[None, :])[off] / d[off]))


def oscillation(space, f, scale):
    """Largest ``|f(a) - f(b)|`` over pairs with ``d(a, b) <= scale``."""
    close = space.distances <= scale
    return float(np.max(np.where(close, np.abs(f[:, None] - f[None, :]), 0.0)))
