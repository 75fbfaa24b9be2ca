"""Exact event-driven integrator for x'(t) = R(x(t-1)).

The right-hand side only reads the sign of the delayed state, so every
solution is piecewise affine with slopes in {1, -a}, and each slope switch
happens exactly one delay unit after a sign change of x.  The integrator
advances from switch to switch, discovering new sign changes as roots of
affine pieces.  With Fraction inputs every breakpoint and value is exact;
with floats the continuity error stays at rounding level.

An initial function only matters through its sign pattern and its final
value, which is what InitialState stores.
"""
from __future__ import annotations

import heapq
import json
from bisect import bisect_right
from dataclasses import dataclass, field

from .core import Params
from .scalars import eq_tol, exactify, fmt_scalar, is_exact, read_scalar, sign, zero_like

DEFAULT_EVENT_CAP = 10**6


class EngineGuardError(RuntimeError):
    """Runtime guard tripped (event budget, degenerate root)."""


@dataclass(frozen=True)
class InitialState:
    """Sign data of a continuous function on a closed unit window.

    zeros lists the sign-change points mapped into (-1, 0], strictly
    increasing; a trailing 0 entry means the function vanishes at the right
    end.  sign_left is the sign on the first open subinterval.  A zero at
    the left edge itself carries no sign information and is rejected.
    """

    zeros: tuple
    sign_left: int
    value_at_end: object

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(exactify(z) for z in self.zeros))
        object.__setattr__(self, "value_at_end", exactify(self.value_at_end))
        if self.sign_left not in (1, -1):
            raise ValueError("sign_left must be +1 or -1")
        prev = None
        for z in self.zeros:
            if not -1 < z <= 0:
                raise ValueError(f"zero {z} outside (-1, 0]; the left edge is not a sign change")
            if prev is not None and not z > prev:
                raise ValueError("zeros must be strictly increasing")
            prev = z
        if self.zeros and self.zeros[-1] == 0:
            if self.value_at_end != 0:
                raise ValueError("a trailing zero requires value_at_end == 0")
        else:
            if self.value_at_end == 0:
                raise ValueError("value_at_end == 0 requires a trailing zero entry")
            expected = self.sign_left * (-1) ** len(self.zeros)
            if sign(self.value_at_end) != expected:
                raise ValueError("value_at_end sign inconsistent with the zero pattern")

    @property
    def interior_zeros(self) -> tuple:
        return tuple(z for z in self.zeros if z < 0)

    @property
    def has_end_zero(self) -> bool:
        return bool(self.zeros) and self.zeros[-1] == 0

    @property
    def sign_before_end(self) -> int:
        """Sign on the last open subinterval before the window end."""
        return self.sign_left * (-1) ** len(self.interior_zeros)


def states_match(s1: InitialState, s2: InitialState, tol=0) -> bool:
    if s1.sign_left != s2.sign_left or len(s1.zeros) != len(s2.zeros):
        return False
    if not eq_tol(s1.value_at_end, s2.value_at_end, tol):
        return False
    return all(eq_tol(a, b, tol) for a, b in zip(s1.zeros, s2.zeros))


def canonicalize(samples) -> InitialState:
    """Reduce sampled piecewise-linear data on a unit window to an InitialState.

    samples: iterable of (t, value) pairs with strictly increasing t spanning
    exactly one delay unit.  Crossing zeros are located exactly on the
    affine pieces; touch-without-crossing nodes are not listed.  A
    subinterval on which the data vanishes identically is rejected, since
    the relay sign is undefined there.
    """
    pts = [(exactify(t), exactify(v)) for t, v in samples]
    if len(pts) < 2:
        raise ValueError("need at least two samples")
    for (t1, _), (t2, _) in zip(pts, pts[1:]):
        if not t2 > t1:
            raise ValueError("sample times must be strictly increasing")
    span = pts[-1][0] - pts[0][0]
    tol = 0 if is_exact(span) else 1e-9
    if not eq_tol(span, 1, tol):
        raise ValueError(f"window must have unit length, got {span}")
    end = pts[-1][0]
    rel = [(t - end, v) for t, v in pts]

    for (_, v1), (_, v2) in zip(rel, rel[1:]):
        if v1 == 0 and v2 == 0:
            raise ValueError("initial data vanishes on a subinterval; relay sign undefined")

    first_sign = next(sign(v) for _, v in rel if v != 0)
    zeros = []
    last_sign = first_sign
    for i, ((t1, v1), (t2, v2)) in enumerate(zip(rel, rel[1:])):
        if v1 == 0 and i > 0:
            nxt = sign(v2)
            if nxt != last_sign:
                zeros.append(t1)
                last_sign = nxt
        if v1 != 0 and v2 != 0 and sign(v1) != sign(v2):
            zeros.append(t1 - v1 * (t2 - t1) / (v2 - v1))
            last_sign = sign(v2)
    if rel[-1][1] == 0:
        zeros.append(zero_like(rel[-1][0]))
    return InitialState(tuple(zeros), first_sign, rel[-1][1])


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-affine solution on [0, horizon].

    breakpoints include every slope switch and every zero of x; crossings
    also keeps the sign changes of the initial window (negative times) so
    that delayed-sign queries and window extraction work near the start.
    """

    start_time: object
    breakpoints: tuple
    values: tuple
    slopes: tuple
    crossings: tuple = field(default=())
    touches: tuple = field(default=())
    init: InitialState | None = None
    a: object = None

    @property
    def end(self):
        return self.breakpoints[-1]

    @property
    def exact(self) -> bool:
        return is_exact(*self.breakpoints, *self.values)

    def value_at(self, t):
        bps = self.breakpoints
        if not bps[0] <= t <= bps[-1]:
            raise ValueError(f"t={t} outside the computed span [{bps[0]}, {bps[-1]}]")
        i = bisect_right(bps, t) - 1
        if i == len(self.slopes):
            i -= 1
        return self.values[i] + self.slopes[i] * (t - bps[i])

    def slope_at(self, t):
        """Right-hand slope on [breakpoint_i, breakpoint_{i+1})."""
        bps = self.breakpoints
        if not bps[0] <= t < bps[-1]:
            raise ValueError(f"t={t} has no right-hand segment")
        i = bisect_right(bps, t) - 1
        return self.slopes[i]

    def sign_after(self, t) -> int:
        """Sign of x on the open interval just right of t."""
        if self.init is None:
            raise ValueError("sign queries need the originating initial state")
        flips = sum(1 for z in self.crossings if z <= t)
        return self.init.sign_left * (-1) ** flips

    def to_csv(self, fp) -> None:
        fp.write("t,x\n")
        for t, v in zip(self.breakpoints, self.values):
            fp.write(f"{fmt_scalar(t)},{fmt_scalar(v)}\n")

    @classmethod
    def from_csv(cls, fp) -> "Trajectory":
        header = fp.readline().strip()
        if header != "t,x":
            raise ValueError(f"expected header 't,x', got {header!r}")
        bps, vals = [], []
        for line in fp:
            line = line.strip()
            if not line:
                continue
            st, sv = line.split(",")
            bps.append(read_scalar(st))
            vals.append(read_scalar(sv))
        if len(bps) < 2:
            raise ValueError("trajectory needs at least two breakpoints")
        slopes = tuple((v2 - v1) / (t2 - t1)
                       for t1, t2, v1, v2 in zip(bps, bps[1:], vals, vals[1:]))
        return cls(bps[0], tuple(bps), tuple(vals), slopes)

    def to_json_obj(self) -> dict:
        enc = lambda v: fmt_scalar(v) if not isinstance(v, float) else v
        return {
            "start_time": enc(self.start_time),
            "breakpoints": [enc(t) for t in self.breakpoints],
            "values": [enc(v) for v in self.values],
            "slopes": [enc(s) for s in self.slopes],
            "crossings": [enc(z) for z in self.crossings],
            "touches": [enc(z) for z in self.touches],
        }

    def to_json(self, fp) -> None:
        json.dump(self.to_json_obj(), fp, sort_keys=True)
        fp.write("\n")

    @classmethod
    def from_json(cls, fp) -> "Trajectory":
        obj = json.load(fp)
        dec = lambda v: read_scalar(v) if isinstance(v, str) else v
        return cls(
            dec(obj["start_time"]),
            tuple(dec(t) for t in obj["breakpoints"]),
            tuple(dec(v) for v in obj["values"]),
            tuple(dec(s) for s in obj["slopes"]),
            tuple(dec(z) for z in obj.get("crossings", ())),
            tuple(dec(z) for z in obj.get("touches", ())),
        )


def simulate(init: InitialState, p: Params, horizon,
             event_cap: int = DEFAULT_EVENT_CAP) -> Trajectory:
    """Integrate forward from the unit window described by init.

    Returns the exact piecewise-affine solution on [0, horizon].  Slope
    switches fire one delay after each sign change of x; an extremum that
    touches zero without crossing produces no switch (recorded in
    Trajectory.touches).
    """
    horizon = exactify(horizon)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    a = p.a

    def slope_for(delayed: int):
        # R reads only the delayed sign; the boundary belongs to slope 1
        return 1 if delayed < 0 else -a

    crossings = list(init.interior_zeros)
    touches: list = []
    heap = [z + 1 for z in init.interior_zeros]
    heapq.heapify(heap)
    delayed_sign = init.sign_left
    slope = slope_for(delayed_sign)

    x = init.value_at_end
    t = zero_like(x)
    bps = [t]
    vals = [x]
    slopes: list = []

    if init.has_end_zero:
        after = 1 if slope > 0 else -1
        if init.sign_before_end != after:
            crossings.append(zero_like(x))
            heapq.heappush(heap, zero_like(x) + 1)
        else:
            touches.append(zero_like(x))

    n_events = 0
    while t < horizon:
        target = horizon
        if heap and heap[0] < target:
            target = heap[0]
        x_end = x + slope * (target - t)
        if x != 0 and sign(x_end) == -sign(x):
            z = t - x / slope
            if z > target:
                z = target  # float rounding can push the root past the segment end
            if not z > t:
                raise EngineGuardError(f"degenerate crossing root near t={float(t)!r}")
            if z < target:
                bps.append(z)
                vals.append(zero_like(x))
                slopes.append(slope)
                crossings.append(z)
                heapq.heappush(heap, z + 1)
                t, x = z, zero_like(x)
                continue
            x_end = zero_like(x)  # the root lands exactly on the target
        interior = sign(x) if x != 0 else (1 if slope > 0 else -1)
        bps.append(target)
        vals.append(x_end)
        slopes.append(slope)
        t, x = target, x_end

        is_event = bool(heap) and heap[0] == t
        if is_event:
            heapq.heappop(heap)
            n_events += 1
            if n_events > event_cap:
                raise EngineGuardError(
                    f"event budget {event_cap} exhausted at t={float(t)!r}; "
                    f"{len(crossings)} sign changes so far")
            delayed_sign = -delayed_sign
            new_slope = slope_for(delayed_sign)
        else:
            new_slope = slope
        if x == 0:
            after = 1 if new_slope > 0 else -1
            if not is_event and t >= horizon:
                crossings.append(t)  # span ends exactly on a zero
            elif interior != after:
                crossings.append(t)
                heapq.heappush(heap, t + 1)
            else:
                touches.append(t)
        slope = new_slope

    return Trajectory(bps[0], tuple(bps), tuple(vals), tuple(slopes),
                      tuple(crossings), tuple(touches), init, a)


def zeros_of(traj: Trajectory, t_from, t_to) -> list:
    """Transversal crossing zeros of the trajectory in [t_from, t_to].

    Touch points are excluded; they live in traj.touches.  A zero exactly
    at the end of the computed span counts as a crossing (it is reached
    transversally).
    """
    if t_from > t_to:
        raise ValueError("empty query interval")
    if t_from < traj.start_time or t_to > traj.end:
        raise ValueError("query interval outside the computed span")
    return [z for z in traj.crossings if t_from <= z <= t_to]


def window_state(traj: Trajectory, t) -> InitialState:
    """Extract the sign data of the unit window [t-1, t] as an InitialState.

    Valid for start_time <= t <= end when the trajectory carries its
    originating initial state (the pattern left of the start is taken from
    it); a zero sitting exactly on the window's left edge is dropped.
    """
    if traj.init is None and t < traj.start_time + 1:
        raise ValueError("window reaches before the start and no initial pattern is stored")
    if not traj.start_time <= t <= traj.end:
        raise ValueError(f"t={t} outside the computed span")
    lo = t - 1
    zs = [z - t for z in traj.crossings if lo < z <= t]
    val = traj.value_at(t)
    if val == 0 and (not zs or zs[-1] != 0):
        zs.append(zero_like(val))  # the window ends on a touch point
    flips = sum(1 for z in traj.crossings if z <= lo)
    left = traj.init.sign_left * (-1) ** flips
    return InitialState(tuple(zs), left, val)


def detect_period(traj: Trajectory, t_from=0, tol=None):
    """Smallest period of the trajectory from t_from on, or None.

    Anchored at the first upward crossing zero past t_from: the window
    there is compared with the windows at later upward crossings.  Window
    equality pins the whole future, so a match certifies periodicity; the
    affine pieces on the overlap are still compared as a safety net.
    Returns (period, anchor_time) or None.
    """
    if tol is None:
        tol = 0 if traj.exact else 1e-9
    lo = max(t_from, traj.start_time)
    ups = [z for z in traj.crossings if z >= lo and traj.sign_after(z) > 0]
    if len(ups) < 2:
        return None
    u1 = ups[0]
    w1 = window_state(traj, u1)
    for uj in ups[1:]:
        if not states_match(w1, window_state(traj, uj), tol):
            continue
        period = uj - u1
        for b in traj.breakpoints:
            if u1 <= b <= traj.end - period:
                if not eq_tol(traj.value_at(b + period), traj.value_at(b), tol):
                    raise EngineGuardError("window match without piecewise match")
        return period, u1
    return None
