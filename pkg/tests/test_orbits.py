"""Closed-form cycles, the two-zero return map, settling, classification."""

import random
from fractions import Fraction

import numpy as np
import pytest

from relaydde import (ClassExitError, InconclusiveError, InitialState, Params,
                      UnsupportedClassError, admissibility_bounds, admissible,
                      classify, constants, fixed_point, grid_survivors,
                      match_x0, match_y0, phi_closed_form, phi_iterate,
                      phi_map, predict_one_zero_settling, simulate, x0_eval,
                      x0_window, y0_eval, y0_window)
from relaydde.orbits import (PoincarePair, _verify_return_lockstep,
                             phi_map_matrix_form, return_times, suggest_horizon)
from relaydde.scalars import mod_period

F = Fraction
P1 = Params(a=1)
P2 = Params(a=2)


# ------------------------------------------------------------------ constants

def test_constants_unit_decay():
    c = constants(P1)
    assert (c.t0, c.T0, c.theta_star, c.tau_star) == (2, 4, F(4, 5), F(2, 5))


def test_constants_decay_two():
    c = constants(P2)
    assert (c.t0, c.T0) == (F(3, 2), F(9, 2))
    assert (c.theta_star, c.tau_star) == (F(9, 11), F(6, 11))


def test_constants_structure_random_rates():
    rng = random.Random(11)
    for _ in range(40):
        a = F(rng.randint(1, 40), rng.randint(1, 40))
        c = constants(Params(a=a))
        assert c.T0 == c.t0 * (a + 1)
        assert 0 < c.tau_star < c.theta_star < 1
        assert c.T0 >= 4
        assert (c.T0 == 4) == (a == 1)


def test_cycle_evaluations_unit_decay():
    assert x0_eval(F(1, 2), P1) == F(1, 2)
    assert x0_eval(1, P1) == 1
    assert x0_eval(2, P1) == 0
    assert x0_eval(3, P1) == -1
    assert x0_eval(F(7, 2), P1) == F(-1, 2)
    assert x0_eval(F(-1, 2), P1) == F(-1, 2)
    assert x0_eval(F(9, 2), P1) == x0_eval(F(1, 2), P1)
    assert y0_eval(F(1, 5), P1) == F(1, 5)
    assert y0_eval(F(2, 5), P1) == 0
    assert y0_eval(F(3, 5), P1) == F(-1, 5)
    assert y0_eval(F(4, 5), P1) == 0
    assert y0_eval(1, P1) == y0_eval(F(1, 5), P1)


def test_cycle_extrema_scale_with_decay():
    # peak 1 - theta_star, trough -(theta_star + tau_star - 1) for the rapid cycle
    for a in (F(1, 2), F(3, 2), F(5,)):
        p = Params(a=a)
        c = constants(p)
        assert y0_eval(1 - c.theta_star, p) == 1 - c.theta_star
        assert y0_eval(c.theta_star - c.tau_star + (1 - c.theta_star), p) \
            == -(c.theta_star + c.tau_star - 1)


# ----------------------------------------------------------------- return map

def test_pair_validation():
    PoincarePair(F(3, 4), F(2, 5))
    with pytest.raises(ValueError):
        PoincarePair(F(1, 2), F(1, 2))
    with pytest.raises(ValueError):
        PoincarePair(F(2, 5), F(3, 4))
    with pytest.raises(ValueError):
        PoincarePair(1, F(1, 2))
    with pytest.raises(ValueError):
        PoincarePair(F(3, 4), 0)


def test_pair_as_window():
    w = PoincarePair(F(3, 4), F(2, 5)).as_window()
    assert w == InitialState((F(-3, 4), F(-2, 5), F(0)), -1, 0)


def test_admissibility_bounds_oracle():
    assert admissibility_bounds(F(2, 5), P1) == (F(7, 10), F(9, 10))
    assert admissible(PoincarePair(F(3, 4), F(2, 5)), P1)
    # the image sits exactly on the upper bound: out of the open region
    assert not admissible(PoincarePair(F(7, 10), F(1, 5)), P1)


def test_phi_map_oracle_and_gate():
    img = phi_map(PoincarePair(F(3, 4), F(2, 5)), P1)
    assert (img.theta, img.tau) == (F(7, 10), F(1, 5))
    with pytest.raises(ClassExitError):
        phi_map(PoincarePair(F(7, 10), F(1, 5)), P1)


def test_phi_map_agrees_with_affine_form():
    rng = random.Random(3)
    hits = 0
    while hits < 60:
        a = F(rng.randint(1, 9), rng.randint(1, 9))
        p = Params(a=a)
        th = F(rng.randint(2, 98), 100)
        ta = F(rng.randint(1, th.numerator * 100 // th.denominator - 1), 100)
        pair = PoincarePair(th, ta)
        if not admissible(pair, p):
            continue
        img = phi_map(pair, p)
        assert (img.theta, img.tau) == phi_map_matrix_form(pair, p)
        hits += 1


def test_fixed_point_is_fixed_across_rates():
    for a in (F(1, 2), 1, 2, 10):
        p = Params(a=a)
        fp = fixed_point(p)
        c = constants(p)
        assert (fp.theta, fp.tau) == (c.theta_star, c.tau_star)
        img = phi_map(fp, p)
        assert (img.theta, img.tau) == (fp.theta, fp.tau)
        pairs, ex = phi_iterate(fp, p, 50)
        assert ex is None
        assert all((q.theta, q.tau) == (fp.theta, fp.tau) for q in pairs)


def test_iterate_exit_exact():
    pairs, ex = phi_iterate(PoincarePair(F(3, 4), F(2, 5)), P1, 200)
    assert [(q.theta, q.tau) for q in pairs] == [(F(3, 4), F(2, 5)),
                                                 (F(7, 10), F(1, 5))]
    assert ex.at_iterate == 2
    assert ex.cause == "inadmissible"
    assert ex.pair == pairs[-1]


def test_iterate_exit_float_matches_command_line_example():
    pairs, ex = phi_iterate(PoincarePair(0.75, 0.4), Params(a=1.0), 200)
    assert ex.at_iterate == 2
    assert pairs[1].theta == 0.7
    assert abs(pairs[1].tau - 0.2) < 1e-15


def test_iterate_inadmissible_seed_and_zero_steps():
    seed = PoincarePair(F(7, 10), F(1, 5))
    pairs, ex = phi_iterate(seed, P1, 5)
    assert pairs == [seed]
    assert ex.at_iterate == 1
    pairs, ex = phi_iterate(seed, P1, 0)
    assert pairs == [seed] and ex is None


def test_return_times_accumulate_new_offsets():
    pairs, _ = phi_iterate(PoincarePair(F(3, 4), F(2, 5)), P1, 200)
    assert return_times(pairs) == [0, F(7, 10)]
    fp = fixed_point(P1)
    pairs, _ = phi_iterate(fp, P1, 3)
    assert return_times(pairs) == [0, F(4, 5), F(8, 5), F(12, 5)]


def test_closed_form_matches_gated_iteration():
    rng = random.Random(17)
    checked = 0
    while checked < 30:
        a = F(rng.randint(1, 6), rng.randint(1, 6))
        p = Params(a=a)
        fp = fixed_point(p)
        seed_th = fp.theta + F(rng.randint(-40, 40), 10000)
        seed_ta = fp.tau + F(rng.randint(-40, 40), 10000)
        if not 0 < seed_ta < seed_th < 1:
            continue
        seed = PoincarePair(seed_th, seed_ta)
        pairs, _ = phi_iterate(seed, p, 60)
        for n, q in enumerate(pairs):
            assert phi_closed_form(seed, p, n) == (q.theta, q.tau)
        checked += 1


def test_closed_form_alternation_scale():
    # two returns multiply the deviation from the fixed pair by exactly -T0
    seed = PoincarePair(F(4, 5) + F(1, 1000), F(2, 5) - F(1, 2000))
    th2, ta2 = phi_closed_form(seed, P1, 2)
    assert th2 - F(4, 5) == -4 * F(1, 1000)
    assert ta2 - F(2, 5) == -4 * F(-1, 2000)


def test_survival_chain_oracle():
    # closed-form admissibility conditions for the n-th window, derived by
    # applying the affine iterate formulas to the two open bounds
    rng = random.Random(99)
    checked = 0
    while checked < 25:
        a = F(rng.randint(1, 9), rng.randint(1, 9))
        p = Params(a=a)
        c = constants(p)
        D = a * a + 3 * a + 1
        fp = fixed_point(p)
        dth = F(rng.randint(-60, 60), 100000)
        dta = F(rng.randint(-60, 60), 100000)
        if dth == 0 and dta == 0:
            continue
        if not 0 < fp.tau + dta < fp.theta + dth < 1:
            continue

        def chain(m):
            k, odd = divmod(m, 2)
            s = (-c.T0) ** k
            if odd:
                return (s * dta < a ** 2 / (D * (a + 1))
                        and s * dth > -a / (D * c.T0))
            return (s * ((a + 1) * dth - a * dta) > -(a ** 2) / D
                    and s * (dth - dta) < a / (D * (a + 1)))

        _, ex = phi_iterate(PoincarePair(fp.theta + dth, fp.tau + dta), p, 80)
        assert ex is not None
        last = ex.at_iterate - 1
        assert all(chain(j) for j in range(last))
        assert not chain(last)
        checked += 1


# ------------------------------------------------------------------- settling

def test_settling_formulas_match_simulation():
    rng = random.Random(5)
    cases = 0
    while cases < 12:
        a = F(rng.randint(1, 8), rng.randint(1, 8))
        p = Params(a=a)
        tau = F(rng.randint(1, 19), 20)
        d = F(rng.randint(0, 12), 10)
        case = rng.choice(("neg_then_pos", "pos_then_neg"))
        settle, shift = predict_one_zero_settling(tau, d, case, p)
        sl = -1 if case == "neg_then_pos" else 1
        if d == 0:
            init = InitialState((-tau, F(0)), sl, 0)
        else:
            init = InitialState((-tau,), sl, -sl * d)
        c = constants(p)
        traj = simulate(init, p, settle + c.T0 + 2)
        assert match_x0(traj, p) == (settle, mod_period(shift, c.T0))
        cases += 1


def test_settling_known_values():
    assert predict_one_zero_settling(F(3, 5), F(1, 2), "neg_then_pos", P2) \
        == (F(17, 20), F(77, 20))
    assert predict_one_zero_settling(F(1, 2), F(1, 5), "pos_then_neg", P2) \
        == (F(17, 10), F(17, 10))
    assert predict_one_zero_settling(F(2, 5), F(1, 5), "pos_then_neg", P1) \
        == (F(7, 5), F(7, 5))


def test_settling_rejects_bad_arguments():
    with pytest.raises(ValueError):
        predict_one_zero_settling(0, F(1, 2), "neg_then_pos", P1)
    with pytest.raises(ValueError):
        predict_one_zero_settling(F(1, 2), -1, "neg_then_pos", P1)
    with pytest.raises(ValueError):
        predict_one_zero_settling(F(1, 2), 1, "sideways", P1)


# ----------------------------------------------------------------- grid scans

def test_grid_scan_keeps_only_the_fixed_pair():
    alive = grid_survivors(P1, resolution=1e-3, iterations=40)
    assert alive.shape == (1, 2)
    assert np.allclose(alive[0], [0.8, 0.4], atol=1e-12)


def test_grid_scan_empty_off_the_lattice():
    for a in (0.5, 2.0):
        alive = grid_survivors(Params(a=a), resolution=5e-3, iterations=40)
        assert alive.size == 0


# ------------------------------------------------------------- classification

def test_classify_two_zero_seed_locks_on_slow_cycle():
    cls = classify(InitialState((F(-3, 4), F(-2, 5), F(0)), -1, 0), P1)
    assert cls.variant == "x0"
    assert cls.shift == F(29, 10)
    assert cls.settle_time == F(29, 10)
    assert cls.at_iterate == 2
    assert "return 2" in cls.note
    assert cls.trajectory is not None
    assert F(17, 10) in cls.trajectory.touches


def test_classify_rapid_cycle_fast_path():
    cls = classify(y0_window(P1), P1)
    assert cls.variant == "y0"
    assert cls.shift == 0 and cls.settle_time == 0
    cls = classify(y0_window(P2), P2)
    assert cls.variant == "y0"


def test_classify_mirrored_rapid_transient():
    cls = classify(InitialState((F(-4, 5), F(-2, 5), F(0)), 1, 0), P1)
    assert cls.variant == "y0"
    assert (cls.shift, cls.settle_time) == (F(2, 5), F(2, 5))


def test_classify_sign_constant_window():
    cls = classify(InitialState((), -1, F(-3, 10)), P1)
    assert cls.variant == "x0"
    assert (cls.shift, cls.settle_time) == (F(3, 10), F(3, 10))
    cls = classify(InitialState((), 1, F(1, 2)), P1)
    assert cls.variant == "x0"
    assert (cls.shift, cls.settle_time) == (F(5, 2), F(1, 2))


def test_classify_exit_variant_on_short_horizon():
    cls = classify(InitialState((F(-3, 4), F(-2, 5), F(0)), -1, 0), P1, horizon=2)
    assert cls.variant == "exits"
    assert cls.shift is None and cls.settle_time is None
    assert cls.at_iterate == 2
    assert "rerun with horizon" in cls.note


def test_classify_inconclusive_carries_suggestion():
    with pytest.raises(InconclusiveError) as exc:
        classify(InitialState((F(-1, 2),), -1, F(1, 4)), P1, horizon=F(1, 2))
    assert exc.value.suggested_horizon == 1.0


def test_classify_rejects_three_sign_changes():
    init = InitialState((F(-3, 4), F(-1, 2), F(-1, 4)), -1, F(1, 10))
    with pytest.raises(UnsupportedClassError):
        classify(init, P1)


def test_classify_unresolvably_close_to_fixed_pair():
    theta = F(4, 5) + F(1, 2 ** 205)
    with pytest.raises(InconclusiveError, match="too small to resolve"):
        classify(InitialState((-theta, F(-2, 5), F(0)), -1, 0), P1)


def test_match_helpers_direct():
    xtraj = simulate(x0_window(P1), P1, 6)
    assert match_x0(xtraj, P1) == (0, 0)
    assert match_y0(xtraj, P1) is None
    ytraj = simulate(y0_window(P1), P1, 3)
    assert match_y0(ytraj, P1) == (0, 0)


def test_return_lockstep_guard():
    seedw = InitialState((F(-3, 4), F(-2, 5), F(0)), -1, 0)
    pairs, _ = phi_iterate(PoincarePair(F(3, 4), F(2, 5)), P1, 200)
    traj = simulate(seedw, P1, 2)
    _verify_return_lockstep(traj, pairs, P1)
    forged = [pairs[0], PoincarePair(F(7, 10), F(3, 10))]
    with pytest.raises(RuntimeError, match="disagree"):
        _verify_return_lockstep(traj, forged, P1)


def test_suggest_horizon_covers_returns():
    init = InitialState((F(-3, 4), F(-2, 5), F(0)), -1, 0)
    pairs, _ = phi_iterate(PoincarePair(F(3, 4), F(2, 5)), P1, 200)
    assert suggest_horizon(init, P1, pairs) > suggest_horizon(init, P1)
    assert suggest_horizon(init, P1) >= 2 * float(constants(P1).T0)
