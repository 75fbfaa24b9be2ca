"""Acceptance gate: seven end-to-end criteria, one test (and one verdict
line) each.  Every criterion states its own tolerance and time budget."""

import functools
import math
import random
import tempfile
import time
from fractions import Fraction

import numpy as np

from relaydde import (Params, PerturbationVector, admissible, apply_matrix,
                      constants, delta_max, detect_period, fixed_point,
                      grid_survivors, instability_demo, match_x0,
                      monodromy_matrix, multipliers, one_period_map,
                      phi_closed_form, phi_iterate, phi_map,
                      predict_one_zero_settling, relay_F, relay_R, simulate,
                      to_potential, x0_eval, x0_window, y0_eval, y0_window)
from relaydde.cli import main
from relaydde.engine import InitialState
from relaydde.orbits import PoincarePair
from relaydde.scalars import mod_period

F = Fraction


def criterion(number, label, budget_s):
    """Time the body, enforce the budget, and print one verdict line."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {number} FAIL ({label})")
                raise
            elapsed = time.perf_counter() - start
            verdict = "PASS" if elapsed < budget_s else "FAIL"
            print(f"criterion {number} {verdict} ({label}) "
                  f"[{elapsed:.3f}s < {budget_s}s]")
            assert elapsed < budget_s, f"budget {budget_s}s exceeded: {elapsed:.3f}s"

        return run

    return wrap


@criterion(1, "derived constants exact at a=1 and a=2", 0.1)
def test_criterion_1_constants():
    c = constants(Params(a=1))
    assert (c.t0, c.T0) == (2, 4)
    assert (c.theta_star, c.tau_star) == (F(4, 5), F(2, 5))
    c = constants(Params(a=2))
    assert (c.t0, c.T0) == (F(3, 2), F(9, 2))
    assert (c.theta_star, c.tau_star) == (F(9, 11), F(6, 11))
    for vals in ((c.t0, c.T0, c.theta_star, c.tau_star),):
        assert all(isinstance(v, F) for v in vals)


@criterion(2, "both cycles reproduced pointwise from their windows", 0.1)
def test_criterion_2_cycle_reproduction():
    # exact in rational arithmetic, and the detected periods are T0 and
    # theta_star (the sub-delay "short" period)
    for a in (F(1), F(3, 2)):
        p = Params(a=a)
        c = constants(p)
        span = 9
        for win, cyc, period in ((x0_window(p), x0_eval, c.T0),
                                 (y0_window(p), y0_eval, c.theta_star)):
            traj = simulate(win, p, span)
            assert detect_period(traj) == (period, 0)
            for k in range(30 * span + 1):
                t = F(k, 30)
                assert traj.value_at(t) == cyc(t, p)
    # within 1e-9 in float arithmetic
    p = Params(a=1.0)
    traj = simulate(InitialState((-0.8, -0.4, 0.0), -1, 0.0), p, 9.0)
    for k in range(271):
        t = k / 30
        assert abs(traj.value_at(t) - float(y0_eval(F(k, 30), Params(a=1)))) <= 1e-9


@criterion(3, "return-map fixed point, closed-form iterates, grid scan", 10.0)
def test_criterion_3_return_map():
    # the closed-form pair is a fixed point, exactly, at four rates
    for a in (F(1, 2), F(1), F(2), F(10)):
        p = Params(a=a)
        fp = fixed_point(p)
        img = phi_map(fp, p)
        assert (img.theta, img.tau) == (fp.theta, fp.tau)

    # closed-form iterates match gated repeated application: 100 random seeds
    rng = random.Random(2026)
    checked = 0
    while checked < 100:
        a = rng.choice((F(1, 2), F(1), F(2), F(10)))
        p = Params(a=a)
        fp = fixed_point(p)
        th = fp.theta + F(rng.randint(-300, 300), 10 ** 5)
        ta = fp.tau + F(rng.randint(-300, 300), 10 ** 5)
        if not 0 < ta < th < 1:
            continue
        seed = PoincarePair(th, ta)
        if not admissible(seed, p):
            continue
        pairs, _ = phi_iterate(seed, p, 12)
        for n, q in enumerate(pairs):
            assert phi_closed_form(seed, p, n) == (q.theta, q.tau)
        checked += 1

    # millesimal grid: nothing but the fixed pair survives 40 returns
    for a in (0.5, 1.0, 2.0, 10.0):
        p = Params(a=a)
        alive = grid_survivors(p, resolution=1e-3, iterations=40)
        assert alive.shape[0] <= 1
        if alive.shape[0] == 1:
            fp = fixed_point(p)
            assert np.allclose(alive[0], [float(fp.theta), float(fp.tau)],
                               atol=1e-9)


@criterion(4, "one-zero settling formulas equal simulation on 50 random cases",
           5.0)
def test_criterion_4_settling():
    rng = random.Random(414)
    cases = 0
    while cases < 50:
        a = F(rng.randint(1, 9), rng.randint(1, 9))
        p = Params(a=a)
        tau = F(rng.randint(1, 39), 40)
        d = F(rng.randint(0, 30), 15)
        case = rng.choice(("neg_then_pos", "pos_then_neg"))
        settle, shift = predict_one_zero_settling(tau, d, case, p)
        sl = -1 if case == "neg_then_pos" else 1
        init = (InitialState((-tau, F(0)), sl, 0) if d == 0
                else InitialState((-tau,), sl, -sl * d))
        c = constants(p)
        traj = simulate(init, p, settle + c.T0 + 2)
        measured = match_x0(traj, p)
        assert measured == (settle, mod_period(shift, c.T0))
        cases += 1


@criterion(5, "monodromy spectrum and exact linearity of the period map", 5.0)
def test_criterion_5_monodromy():
    for a in (0.1, 0.5, 1.0, 2.0, 10.0):
        p = Params(a=a)
        T0 = float(constants(p).T0)
        coeffs = np.poly(np.array(monodromy_matrix(p), dtype=float))
        assert np.allclose(coeffs, [1.0, -1.0, T0, -T0], atol=1e-12)
        s = math.sqrt(T0)
        assert multipliers(p) == {complex(1), complex(0, s), complex(0, -s)}

    rng = random.Random(55)
    for a in (F(1, 2), F(1), F(2), F(10)):
        p = Params(a=a)
        m = monodromy_matrix(p)
        bound = delta_max(p)
        for _ in range(50):
            delta = PerturbationVector(
                bound * F(rng.randint(-100, 100), 100),
                bound * F(rng.randint(-100, 100), 100),
                bound * F(rng.randint(-100, 100), 100))
            out = one_period_map(delta, p)
            assert out.as_tuple() == apply_matrix(m, delta.as_tuple())


@criterion(6, "endpoint seed doubles in the invariant plane, then locks on "
              "the slow cycle", 1.0)
def test_criterion_6_growth_and_fate():
    rep = instability_demo(PerturbationVector(F(1, 10 ** 6), 0, 0), Params(a=1))
    assert rep.exit_period is not None
    for r1, r2 in zip(rep.rows, rep.rows[1:]):
        if r1.linear_valid:
            assert r2.eigenplane_norm == 2.0 * r1.eigenplane_norm
            assert r2.norm_sq_exact == 4 * r1.norm_sq_exact
    assert rep.fate.variant == "x0"
    assert rep.fate_settle == F(3081943, 200000)


@criterion(7, "relay identity on the exponential potential, CLI export", 5.0)
def test_criterion_7_potential_identity():
    rng = random.Random(777)
    for _ in range(10 ** 4):
        a = rng.choice((0.5, 1.0, 2.0, 7.5))
        lam = rng.choice((0.5, 1.0, 5.0))
        p = Params(a=a, lam=lam)
        x = rng.uniform(-100, 100)
        assert relay_F(to_potential(x, p), p) == relay_R(x, p)

    with tempfile.TemporaryDirectory() as tmp:
        out = f"{tmp}/u.csv"
        code = main(["simulate", "--a", "1", "--zeros", "0", "--sign-left",
                     "neg", "--x-end", "0", "--horizon", "8", "--potential",
                     "--lambda", "5", "--output", out])
        assert code == 0
        rows = [line.split(",") for line in
                open(out).read().splitlines()[1:]]
        us = [float(v) for _, v in rows]
        assert max(us) == math.exp(5)       # peak of x0 is +1, hit exactly
        assert min(us) == math.exp(-5)      # trough of x0 is -1
        for st, sv in rows:
            t = F(float(st)).limit_denominator(10 ** 9)
            ref = 5 * float(x0_eval(t, Params(a=1)))
            assert abs(math.log(float(sv)) - ref) <= 1e-9
