"""Monodromy analysis of the rapid cycle.

A small perturbation of the rapid cycle's unit window is described by
three numbers: the value deviation at the window end and the displacements
of the window's two sign changes.  Because the dynamics is piecewise
affine, pushing such a window one period forward acts on the triple as an
exact 3x3 matrix as long as the slope-switch order is unchanged; the
matrix has eigenvalues 1 (time translation along the cycle) and a complex
pair of modulus sqrt(T0) > 1, so the cycle is unstable.  This module
builds the matrix, its multipliers, the perturbation profile over one
period, the simulated one-period map with an exactness guard, and a
period-by-period growth demonstration ending in the perturbed orbit's
eventual fate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Params
from .engine import InitialState, simulate, window_state
from .orbits import Classification, classify, constants
from .scalars import eq_tol, exactify, is_exact, mod_period, zero_like


class LinearityError(RuntimeError):
    """Perturbation outside the regime where the one-period map is affine."""


@dataclass(frozen=True)
class PerturbationVector:
    """Deviation triple (gamma0, xi_theta, xi_tau) of a perturbed window.

    gamma0: value deviation at the window end; xi_theta, xi_tau:
    displacements of the upward and downward sign changes near -theta_star
    and -tau_star.
    """

    gamma0: object
    xi_theta: object
    xi_tau: object

    def __post_init__(self):
        object.__setattr__(self, "gamma0", exactify(self.gamma0))
        object.__setattr__(self, "xi_theta", exactify(self.xi_theta))
        object.__setattr__(self, "xi_tau", exactify(self.xi_tau))

    def as_tuple(self) -> tuple:
        return (self.gamma0, self.xi_theta, self.xi_tau)

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.as_tuple())

    def inf_norm(self):
        return max(abs(v) for v in self.as_tuple())

    def two_norm(self) -> float:
        return math.sqrt(sum(float(v) ** 2 for v in self.as_tuple()))


# Matrix as a nested tuple, rows acting on (gamma0, xi_theta, xi_tau).
MonodromyMatrix = tuple


def delta_max(p: Params):
    """Linearity bound: below it the perturbed slope-switch order provably
    matches the cycle's, keeping the one-period action exactly affine.

    One twentieth of the smallest structural margin: the window gaps
    tau_star, theta_star - tau_star, 1 - theta_star and the cycle's
    extremal depth theta_star + tau_star - 1.
    """
    c = constants(p)
    return min(c.tau_star, c.theta_star - c.tau_star, 1 - c.theta_star,
               c.theta_star + c.tau_star - 1) / 20


def monodromy_matrix(p: Params) -> MonodromyMatrix:
    """Exact one-period action on the deviation triple."""
    a = p.a
    t0 = (a + 1) / a
    return ((1, a + 1, -(a + 1)),
            (-1, 0, 0),
            (1 / a, t0, 0))


def apply_matrix(m: MonodromyMatrix, vec: tuple) -> tuple:
    return tuple(row[0] * vec[0] + row[1] * vec[1] + row[2] * vec[2]
                 for row in m)


def multipliers(p: Params) -> set:
    """The three Floquet multipliers {1, +i*sqrt(T0), -i*sqrt(T0)}.

    Reported from the closed form; a numeric eigensolve of the matrix
    cross-checks each value to 1e-10 to guard against transcription slips.
    """
    c = constants(p)
    s = math.sqrt(float(c.T0))
    closed = {complex(1.0), complex(0.0, s), complex(0.0, -s)}
    eig = np.linalg.eigvals(np.array(monodromy_matrix(p), dtype=float))
    for mu in closed:
        if np.abs(eig - mu).min() > 1e-10:
            raise RuntimeError(
                f"numeric eigensolve disagrees with the closed form at mu={mu}")
    return closed


def perturbation_profile(delta: PerturbationVector, p: Params, t):
    """Deviation h(t) from the cycle over one period, 0 <= t <= theta_star.

    Piecewise constant with plateaus gamma0, gamma0 + (a+1)*xi_theta and
    gamma0 + (a+1)*(xi_theta - xi_tau), joined by affine ramps on the short
    intervals where only one of the two solutions has switched slope.
    """
    if delta.inf_norm() > delta_max(p):
        raise LinearityError("event reordering; linear profile invalid")
    c = constants(p)
    a = p.a
    t = exactify(t)
    if not 0 <= t <= c.theta_star:
        raise ValueError(f"t={t} outside the period window [0, {c.theta_star}]")
    p1 = delta.gamma0
    p2 = p1 + (a + 1) * delta.xi_theta
    p3 = p2 - (a + 1) * delta.xi_tau
    lo1 = min(1 - c.theta_star, 1 - c.theta_star + delta.xi_theta)
    hi1 = max(1 - c.theta_star, 1 - c.theta_star + delta.xi_theta)
    lo2 = min(1 - c.tau_star, 1 - c.tau_star + delta.xi_tau)
    hi2 = max(1 - c.tau_star, 1 - c.tau_star + delta.xi_tau)
    if t <= lo1:
        return p1
    if t < hi1:
        return p1 + (p2 - p1) * (t - lo1) / (hi1 - lo1)
    if t <= lo2:
        return p2
    if t < hi2:
        return p2 + (p3 - p2) * (t - lo2) / (hi2 - lo2)
    return p3


def _set_e_window(delta: PerturbationVector, p: Params) -> InitialState:
    c = constants(p)
    zs = [-c.theta_star + delta.xi_theta, -c.tau_star + delta.xi_tau]
    g = delta.gamma0
    if g > 0:
        # the displaced upward crossing sits inside the window at -gamma0
        zs.append(-g)
    elif g == 0:
        zs.append(zero_like(g))
    return InitialState(tuple(zs), -1, g)


def perturbed_initial_state(delta: PerturbationVector, p: Params) -> InitialState:
    """The cycle's unit window with zeros and endpoint displaced by delta."""
    if delta.inf_norm() > delta_max(p):
        raise LinearityError(
            "deviation beyond the linearity bound; the displaced window may "
            "not keep the cycle's sign pattern")
    return _set_e_window(delta, p)


def one_period_map(delta: PerturbationVector, p: Params) -> PerturbationVector:
    """Integrate the perturbed window one period and read the new triple.

    The trajectory is actually integrated; the extracted triple must agree
    with the monodromy matrix applied to delta (exactly with rational data,
    to 1e-12 with floats), otherwise LinearityError is raised.
    """
    c = constants(p)
    init = perturbed_initial_state(delta, p)
    traj = simulate(init, p, c.theta_star)
    w = window_state(traj, c.theta_star)
    if w.sign_left != -1 or len(w.zeros) < 2:
        raise LinearityError("perturbed window lost the two-zero pattern")
    out = PerturbationVector(w.value_at_end,
                             w.zeros[0] + c.theta_star,
                             w.zeros[1] + c.tau_star)
    expected = apply_matrix(monodromy_matrix(p), delta.as_tuple())
    tol = 0 if (is_exact(*delta.as_tuple()) and is_exact(p.a)) else 1e-12
    if not all(eq_tol(x, y, tol) for x, y in zip(out.as_tuple(), expected)):
        raise LinearityError(
            "event order changed; the one-period action is no longer the "
            "monodromy matrix")
    return out


TRANSLATION_DIRECTION = (-1, 1, 1)  # eigenvector for multiplier 1


def _left_functional(p: Params) -> tuple:
    # left eigenvector for multiplier 1; its kernel is the invariant plane
    a = p.a
    return (-1 / (a + 1), 1 / a, 1)


def eigenplane_part(delta: PerturbationVector, p: Params) -> tuple:
    """Component of delta in the oscillatory eigenplane.

    The deviation splits as c1 * (-1, 1, 1) plus a vector in the invariant
    plane where the matrix acts as a rotation scaled by sqrt(T0).
    """
    ell = _left_functional(p)
    d = delta.as_tuple()
    num = sum(l * x for l, x in zip(ell, d))
    den = sum(l * v for l, v in zip(ell, TRANSLATION_DIRECTION))
    c1 = num / den
    return tuple(x - c1 * v for x, v in zip(d, TRANSLATION_DIRECTION))


def eigenplane_norm_sq(delta: PerturbationVector, p: Params):
    """Quadratic form q(p) = p2^2 + p1^2 / T0 on the eigenplane.

    Invariant up to the exact factor T0 per period: q(M p) = T0 * q(p),
    which makes the growth rate checkable without square roots.
    """
    pr = eigenplane_part(delta, p)
    c = constants(p)
    return pr[1] ** 2 + pr[0] ** 2 / c.T0


def eigenplane_norm(delta: PerturbationVector, p: Params) -> float:
    return math.sqrt(float(eigenplane_norm_sq(delta, p)))


@dataclass(frozen=True)
class GrowthRow:
    """One period of the growth log.

    norm: Euclidean size of the deviation triple after period_index
    periods; eigenplane_norm: size of its oscillatory component;
    linear_valid: whether the triple is still below the linearity bound;
    norm_sq_exact: the eigenplane form without the square root, exact when
    the inputs are rational.
    """

    period_index: int
    norm: float
    eigenplane_norm: float
    linear_valid: bool
    deviation: PerturbationVector
    norm_sq_exact: object


@dataclass(frozen=True)
class InstabilityReport:
    """Growth log plus the perturbed orbit's eventual fate.

    exit_period: first period whose deviation breaks the linearity bound
    (None if max_periods ran out first).  fate: classification of the
    orbit continued past the exit; fate_settle and fate_shift are on the
    original clock, where period k starts at k * theta_star.
    """

    rows: tuple
    exit_period: int | None
    fate: Classification | None
    fate_settle: object | None
    fate_shift: object | None


def instability_demo(delta0: PerturbationVector, p: Params,
                     max_periods: int = 100) -> InstabilityReport:
    """Drive a small deviation period by period until it escapes.

    While below the linearity bound every step is the simulated
    one-period map (internally checked against the matrix); the oscillatory
    component grows by exactly sqrt(T0) per period.  Past the bound the
    orbit is re-anchored at its next clean upward zero and classified,
    which lands on the slow cycle for any nonzero perturbation.
    """
    if delta0.is_zero:
        raise ValueError("deviation must be nonzero")
    bound = delta_max(p)
    if delta0.inf_norm() > bound:
        raise LinearityError("initial deviation already beyond the linearity bound")
    c = constants(p)

    rows = []
    cur = delta0
    k = 0
    while True:
        valid = cur.inf_norm() <= bound
        rows.append(GrowthRow(k, cur.two_norm(), eigenplane_norm(cur, p),
                              valid, cur, eigenplane_norm_sq(cur, p)))
        if not valid or k >= max_periods:
            break
        cur = one_period_map(cur, p)
        k += 1

    if rows[-1].linear_valid:
        return InstabilityReport(tuple(rows), None, None, None, None)

    exit_period = k
    probe = simulate(_set_e_window(cur, p), p, 3)
    anchor = anchor_win = None
    for z in probe.crossings:
        if z >= 0 and probe.sign_after(z) > 0:
            w = window_state(probe, z)
            if len(w.interior_zeros) == 2 and w.has_end_zero and w.sign_left == -1:
                anchor, anchor_win = z, w
                break
    if anchor is None:
        raise RuntimeError("no two-zero window found after the regime exit")

    fate = classify(anchor_win, p)
    elapsed = exit_period * c.theta_star + anchor
    settle = shift = None
    if fate.settle_time is not None:
        settle = elapsed + fate.settle_time
        period = c.T0 if fate.variant == "x0" else c.theta_star
        shift = mod_period(elapsed + fate.shift, period)
    return InstabilityReport(tuple(rows), exit_period, fate, settle, shift)
