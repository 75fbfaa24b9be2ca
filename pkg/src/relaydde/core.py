"""Relay nonlinearities of the delayed-feedback model.

The model couples a two-level relay to a unit delay:

    x'(t) = R(x(t-1)),   R(x) = 1 for x <= 0,  -a for x > 0.

R is the logarithmic reduction of the positive-variable relay F acting on
the potential u = exp(lambda * x); F(u) = 1 on 0 < u <= 1 and -a on u > 1,
so F(exp(lambda * x)) == R(x) for every x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .scalars import exactify


@dataclass(frozen=True)
class Params:
    """Relay decay rate a > 0 and potential steepness lambda > 0."""

    a: object
    lam: object = 1

    def __post_init__(self):
        object.__setattr__(self, "a", exactify(self.a))
        object.__setattr__(self, "lam", exactify(self.lam))
        if not self.a > 0:
            raise ValueError("relay decay rate a must be positive")
        if not self.lam > 0:
            raise ValueError("steepness lambda must be positive")


def relay_R(x, p: Params):
    """Feedback slope read off the delayed state.

    The boundary x == 0 belongs to the slope-1 branch.
    """
    return 1 if x <= 0 else -p.a


def relay_F(u, p: Params):
    """Relay on the potential variable; only defined for u > 0."""
    if u <= 0:
        raise ValueError(f"potential must be positive, got {u!r}")
    return 1 if u <= 1 else -p.a


def to_potential(x, p: Params) -> float:
    """Map a log-state x to the potential u = exp(lambda * x).

    Overflow is reported rather than saturated: huge lambda*x raises.
    """
    z = p.lam * x
    try:
        return math.exp(z)
    except OverflowError:
        raise OverflowError(
            f"potential overflow: lambda*x = {float(z)!r} exceeds the float range"
        ) from None
