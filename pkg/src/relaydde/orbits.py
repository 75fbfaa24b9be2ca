"""Closed-form periodic solutions and the two-zero return map.

The equation has a slowly oscillating cycle x0 (one zero per delay window)
and a rapidly oscillating cycle y0 (two zeros per window).  Solutions whose
windows keep exactly two interior sign changes are governed by an affine
planar map on the zero positions; y0 is its unique fixed point, and every
other orbit of that map leaves the two-zero regime after finitely many
returns and then locks onto x0.  This module evaluates both cycles,
iterates the map with admissibility gating, predicts lock-on times for
one-zero data, and classifies simulated trajectories against the cycles.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .core import Params
from .engine import (InitialState, Trajectory, simulate, states_match,
                     window_state)
from .scalars import eq_tol, exactify, is_exact, mod_period, zero_like


@dataclass(frozen=True)
class OrbitConstants:
    """Derived constants of the two cycles for one decay rate a.

    t0: first return of x0 to zero; T0 = t0*(a+1): period of x0.
    theta_star, tau_star: zero offsets of the rapid cycle inside one delay
    window; its period is theta_star.
    """

    t0: object
    T0: object
    theta_star: object
    tau_star: object


def constants(p: Params) -> OrbitConstants:
    a = p.a
    t0 = (a + 1) / a
    T0 = (a + 1) ** 2 / a
    D = a * a + 3 * a + 1
    theta = (a + 1) ** 2 / D
    tau = a * (a + 1) / D
    return OrbitConstants(t0, T0, theta, tau)


def x0_eval(t, p: Params):
    """Slow cycle, normalized to x0(0) = 0 rising; period T0."""
    t = exactify(t)
    c = constants(p)
    s = mod_period(t, c.T0)
    if s <= 1:
        return s
    if s <= c.t0 + 1:
        return -p.a * (s - c.t0)
    return s - c.T0


def y0_eval(t, p: Params):
    """Rapid cycle, normalized to y0(0) = 0 rising; period theta_star."""
    t = exactify(t)
    c = constants(p)
    s = mod_period(t, c.theta_star)
    up_len = 1 - c.theta_star  # rise lasts until the delayed zero at -theta_star acts
    if s <= up_len:
        return s
    if s <= 1 - c.tau_star:
        return -p.a * (s - up_len * c.t0)
    return s - c.theta_star


def x0_window(p: Params) -> InitialState:
    """Unit window of x0 ending at its upward zero."""
    return InitialState((zero_like(p.a),), -1, zero_like(p.a))


def y0_window(p: Params) -> InitialState:
    """Unit window of y0 ending at its upward zero."""
    c = constants(p)
    return InitialState((-c.theta_star, -c.tau_star, zero_like(p.a)), -1,
                        zero_like(p.a))


@dataclass(frozen=True)
class PoincarePair:
    """Zero offsets (theta, tau) of a two-zero window, 0 < tau < theta < 1.

    The window ends at an upward zero; the previous downward zero sits at
    -tau and the upward one before it at -theta.
    """

    theta: object
    tau: object

    def __post_init__(self):
        object.__setattr__(self, "theta", exactify(self.theta))
        object.__setattr__(self, "tau", exactify(self.tau))
        if not 0 < self.tau < self.theta < 1:
            raise ValueError(
                f"need 0 < tau < theta < 1, got theta={self.theta}, tau={self.tau}")

    def as_window(self) -> InitialState:
        return InitialState((-self.theta, -self.tau, zero_like(self.theta)),
                            -1, zero_like(self.theta))


def fixed_point(p: Params) -> PoincarePair:
    c = constants(p)
    return PoincarePair(c.theta_star, c.tau_star)


def admissibility_bounds(tau, p: Params):
    """Open theta interval keeping (theta, tau) in the two-zero regime.

    Below the lower bound the dip between the two new zeros fails to go
    negative; above the upper bound the rise after the new upward zero
    fails to go positive before the next slope switch.
    """
    a = p.a
    tau = exactify(tau)
    return (a * tau + 1) / (a + 1), ((a + 1) * tau + 1) / (a + 1)


def admissible(pair: PoincarePair, p: Params) -> bool:
    lo, hi = admissibility_bounds(pair.tau, p)
    return lo < pair.theta < hi


class ClassExitError(ValueError):
    """Return-map step applied to a pair outside the two-zero regime."""


def phi_map(pair: PoincarePair, p: Params) -> PoincarePair:
    """One return of the two-zero map: the next window's (theta, tau).

    Raises ClassExitError if the pair is inadmissible, in which case its
    trajectory does not produce a two-zero window one return later.
    """
    if not admissible(pair, p):
        raise ClassExitError(
            f"pair (theta={pair.theta}, tau={pair.tau}) leaves the two-zero regime")
    a = p.a
    t0 = (a + 1) / a
    t1 = (1 - pair.theta) * t0
    t2 = (a + 1) * (pair.theta - pair.tau)
    return PoincarePair(t2, t2 - t1)


def phi_map_matrix_form(pair: PoincarePair, p: Params) -> tuple:
    """Affine form of the same map; returns a raw (theta, tau) tuple."""
    a = p.a
    t0 = (a + 1) / a
    th = (a + 1) * (pair.theta - pair.tau)
    ta = (a + 1) * (t0 * pair.theta - pair.tau) - t0
    return th, ta


@dataclass(frozen=True)
class ExitReport:
    """How an orbit left the two-zero regime under iteration.

    at_iterate is the first return that fails to produce a two-zero
    window, counting the seed as return 0: the window reached at return
    at_iterate - 1 (stored in pair) is inadmissible, so return at_iterate
    leaves the regime.
    """

    at_iterate: int
    pair: PoincarePair
    cause: str


def phi_iterate(pair: PoincarePair, p: Params, n: int):
    """Iterate the return map up to n times with admissibility gating.

    Returns (pairs, exit) where pairs lists the computed windows starting
    with the seed (the last entry is the first inadmissible window when an
    exit occurs), and exit is an ExitReport or None if all n steps stayed
    in the regime.
    """
    if n < 0:
        raise ValueError("iterate count must be nonnegative")
    pairs = [pair]
    cur = pair
    for k in range(n):
        if not admissible(cur, p):
            return pairs, ExitReport(k + 1, cur, "inadmissible")
        cur = phi_map(cur, p)
        pairs.append(cur)
    if n > 0 and not admissible(cur, p):
        return pairs, ExitReport(n + 1, cur, "inadmissible")
    return pairs, None


def phi_closed_form(pair: PoincarePair, p: Params, n: int) -> tuple:
    """n-th iterate as a raw (theta, tau) tuple from the eigenstructure.

    Valid whenever the first n-1 iterates stay admissible; no gating is
    applied.  The map's linear part squares to -T0 times the identity, so
    deviations from the fixed point flip and rescale every other return.
    """
    if n < 0:
        raise ValueError("iterate count must be nonnegative")
    a = p.a
    c = constants(p)
    dth = pair.theta - c.theta_star
    dta = pair.tau - c.tau_star
    if n == 0:
        return pair.theta, pair.tau
    k, odd = divmod(n, 2)
    scale = (-c.T0) ** k
    if odd:
        rth = (a + 1) * (dth - dta)
        rta = (a + 1) * (c.t0 * dth - dta)
        return c.theta_star + scale * rth, c.tau_star + scale * rta
    return c.theta_star + scale * dth, c.tau_star + scale * dta


def return_times(pairs) -> list:
    """Times of the upward zeros ending each window in pairs, first at 0."""
    times = [zero_like(pairs[0].theta)]
    for pr in pairs[1:]:
        times.append(times[-1] + pr.theta)
    return times


def predict_one_zero_settling(tau, d, case: str, p: Params) -> tuple:
    """Lock-on prediction for one-zero initial data.

    case 'neg_then_pos': window negative before the zero at -tau, ending at
    value d >= 0.  case 'pos_then_neg': positive before the zero, ending at
    -d <= 0.  Returns (settle_time, shift): from settle_time on the
    solution equals x0(t - shift), x0 normalized to its upward zero at 0.
    """
    tau = exactify(tau)
    d = exactify(d)
    if not 0 < tau < 1:
        raise ValueError("zero offset tau must lie in (0, 1)")
    if d < 0:
        raise ValueError("end value magnitude d must be nonnegative")
    a = p.a
    if case == "neg_then_pos":
        settle = (1 - tau) * (a + 1) / a + d / a
        return settle, settle + a + 1
    if case == "pos_then_neg":
        settle = (1 - tau) * (a + 1) + d
        return settle, settle
    raise ValueError(f"unknown case {case!r}")


def grid_survivors(p: Params, resolution: float = 1e-3, iterations: int = 40):
    """Scan a (theta, tau) grid for seeds surviving repeated returns.

    Floats throughout; returns the grid points whose forward iterates stay
    admissible for the given number of returns, as an (n, 2) array of the
    original (theta, tau) coordinates.
    """
    a = float(p.a)
    t0 = (a + 1) / a
    axis = np.arange(resolution, 1, resolution)
    th, ta = np.meshgrid(axis, axis, indexing="ij")
    keep = ta < th
    th, ta = th[keep], ta[keep]
    orig = np.column_stack([th, ta])
    for _ in range(iterations):
        lo = (a * ta + 1) / (a + 1)
        hi = ((a + 1) * ta + 1) / (a + 1)
        alive = (lo < th) & (th < hi)
        orig, th, ta = orig[alive], th[alive], ta[alive]
        if th.size == 0:
            break
        t2 = (a + 1) * (th - ta)
        t1 = (1 - th) * t0
        th, ta = t2, t2 - t1
    return orig


class UnsupportedClassError(ValueError):
    """Initial window with more sign changes than the supported classes."""


class InconclusiveError(RuntimeError):
    """Horizon too short to certify the fate of the trajectory."""

    def __init__(self, message, suggested_horizon=None):
        super().__init__(message)
        self.suggested_horizon = suggested_horizon


@dataclass(frozen=True)
class Classification:
    """Outcome of classifying a trajectory against the two cycles.

    variant 'x0' or 'y0': after settle_time the solution equals
    cycle(t - shift), the cycle normalized to its upward zero at 0.
    variant 'exits': the orbit provably leaves the two-zero regime at
    return at_iterate, but the computed span ends before a cycle match is
    certified; shift and settle_time are None and note carries guidance.
    """

    variant: str
    shift: object
    settle_time: object
    at_iterate: int | None = None
    note: str = ""
    trajectory: Trajectory | None = None


def _breakpoints_between(traj: Trajectory, lo, hi):
    bps = traj.breakpoints
    return bps[bisect_left(bps, lo):bisect_right(bps, hi)]


def _coincides_x0(traj: Trajectory, shift, t_from, t_to, p: Params) -> bool:
    """Pointwise x(t) == x0(t - shift) on [t_from, t_to], checked on the
    union of both functions' breakpoint grids (affine in between)."""
    tol = 0 if (traj.exact and is_exact(shift)) else 1e-9
    c = constants(p)
    grid = {t_from, t_to}
    grid.update(_breakpoints_between(traj, t_from, t_to))
    base = shift + ((t_from - shift) // c.T0 - 1) * c.T0
    while base <= t_to:
        for off in (0, 1, c.t0, c.t0 + 1):
            t = base + off
            if t_from <= t <= t_to:
                grid.add(t)
        base = base + c.T0
    return all(eq_tol(traj.value_at(t), x0_eval(t - shift, p), tol) for t in grid)


def match_x0(traj: Trajectory, p: Params, t_from=0):
    """Earliest crossing zero from which the trajectory runs along x0.

    Only crossings with at least one delay unit of computed data after
    them qualify: a verified unit window pins the whole future, so the
    match is certified rather than sampled.  Returns (settle_time, shift)
    with shift reduced into [0, T0), or None.
    """
    c = constants(p)
    lo = max(t_from, traj.start_time)
    zs = traj.crossings
    for z in zs[bisect_left(zs, lo):]:
        if traj.end - z < 1:
            break
        shift = z if traj.sign_after(z) > 0 else z - c.t0
        span = min(traj.end, z + c.T0)
        if _coincides_x0(traj, shift, z, span, p):
            return z, mod_period(shift, c.T0)
    return None


def match_y0(traj: Trajectory, p: Params):
    """Earliest upward crossing whose unit window equals the rapid cycle's.

    Window equality pins the whole future, so a single match certifies the
    orbit runs along y0 from there on.  Returns (settle_time, shift) with
    shift reduced into [0, theta_star), or None.
    """
    c = constants(p)
    wy = y0_window(p)
    tol = 0 if traj.exact else 1e-9
    for z in traj.crossings:
        if z < traj.start_time:
            continue
        if traj.sign_after(z) > 0 and states_match(window_state(traj, z), wy, tol):
            return z, mod_period(z, c.theta_star)
    return None


def _verify_return_lockstep(traj: Trajectory, pairs, p: Params) -> None:
    """Check the simulated windows against the map's predicted windows.

    The window at the k-th upward return must carry exactly the k-th
    pair's zero offsets; a mismatch means the integrator and the map
    disagree, which voids any classification built on them.
    """
    tol = 0 if traj.exact else 1e-9
    for pr, tk in zip(pairs, return_times(pairs)):
        if tk > traj.end:
            break
        if not states_match(window_state(traj, tk), pr.as_window(), tol):
            raise RuntimeError(
                f"return map and integrator disagree at return time {float(tk)!r}")


def suggest_horizon(init: InitialState, p: Params, pairs=None) -> float:
    """Span heuristic long enough to certify the lock-on for typical data."""
    c = constants(p)
    a = float(p.a)
    span = abs(float(init.value_at_end)) / min(1.0, a) + 2 * float(c.T0) + 4
    if pairs is not None:
        span += float(return_times(pairs)[-1])
    return span


def classify(init: InitialState, p: Params, horizon=None) -> Classification:
    """Decide whether the data settles on the slow or the rapid cycle.

    Supports windows with at most two interior sign changes; raises
    UnsupportedClassError beyond that.  Raises InconclusiveError (carrying
    a suggested horizon) when the computed span certifies neither a cycle
    match nor a regime exit.
    """
    if len(init.interior_zeros) > 2:
        raise UnsupportedClassError(
            f"window has {len(init.interior_zeros)} interior sign changes; "
            "only the one- and two-zero regimes are classified")
    c = constants(p)
    exact = is_exact(*init.zeros, init.value_at_end)

    if states_match(init, y0_window(p), 0 if exact else 1e-9):
        return Classification("y0", zero_like(c.theta_star), zero_like(c.theta_star),
                              note="initial window already on the rapid cycle")

    pairs = exit_rep = None
    if init.sign_left == -1 and len(init.interior_zeros) == 2 and init.has_end_zero:
        seed = PoincarePair(-init.zeros[0], -init.zeros[1])
        pairs, exit_rep = phi_iterate(seed, p, 200)
        if exit_rep is None:
            raise InconclusiveError(
                "two-zero orbit stays in the regime beyond 200 returns; "
                "its deviation from the rapid cycle is too small to resolve")

    if horizon is None:
        horizon = suggest_horizon(init, p, pairs)
    traj = simulate(init, p, horizon)
    if pairs is not None:
        _verify_return_lockstep(traj, pairs, p)

    hit = match_x0(traj, p)
    if hit is not None:
        settle, shift = hit
        note = ""
        if exit_rep is not None:
            note = f"left the two-zero regime at return {exit_rep.at_iterate}"
        return Classification("x0", shift, settle,
                              exit_rep.at_iterate if exit_rep else None,
                              note, traj)

    hit = match_y0(traj, p)
    if hit is not None:
        settle, shift = hit
        return Classification("y0", shift, settle,
                              note="window matches the rapid cycle", trajectory=traj)

    if exit_rep is not None:
        return Classification(
            "exits", None, None, exit_rep.at_iterate,
            note=(f"leaves the two-zero regime at return {exit_rep.at_iterate}; "
                  f"rerun with horizon >= {2 * float(horizon):g} to certify the lock-on"),
            trajectory=traj)
    raise InconclusiveError("no cycle match certified within the horizon",
                            suggested_horizon=2 * float(horizon))
