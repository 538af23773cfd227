"""Wave profile solver: residuals, monotonicity, tails, shifts, reflection."""

import math

import numpy as np
import pytest

from nlkpp.dispersion import minimal_speed, speed_to_abscissa
from nlkpp.errors import (AssumptionFailure, NonConvergence, NoWave,
                          UsageError)
from nlkpp.kernels import (ExpPoly, KernelPair, Laplace, Params, Truncated,
                           theta)
from nlkpp.profile import (GridSpec, WaveProfile, compare_up_to_shift,
                           normalize_shift, residual, solve_profile,
                           tail_asymptotics)

LK1 = Params(2.0, 1.0, 1.0, 0.0)
PAIR = KernelPair(Laplace(1.0), Laplace(1.0))

# competition-split variant: wide nonlocal suppression, theta = 2/3
KN_PARAMS = Params(2.0, 1.0, 1.0, 0.5)
KN_PAIR = KernelPair(Laplace(1.0), Laplace(2.0))


@pytest.fixture(scope="module")
def rep():
    return minimal_speed(PAIR, LK1)


@pytest.fixture(scope="module")
def prof_critical(rep):
    return solve_profile(PAIR, LK1, rep.c_star, report=rep)


@pytest.fixture(scope="module")
def prof_4(rep):
    return solve_profile(PAIR, LK1, 4.0, report=rep)


def _strictly_decreasing(prof, floor=1e-12):
    v = prof.values
    live = v[:-1] > floor
    return bool(np.all(np.diff(v)[live] < 0.0))


# ---------------------------------------------------------------------------
# residual and shape

def test_critical_profile_residual(prof_critical):
    assert prof_critical.residual_sup <= 1e-6
    assert _strictly_decreasing(prof_critical)


def test_supercritical_profile_residual(prof_4):
    assert prof_4.residual_sup <= 1e-6
    assert _strictly_decreasing(prof_4)


def test_boundary_values(prof_critical, prof_4):
    th = theta(LK1)
    for prof in (prof_critical, prof_4):
        assert abs(prof.values[0] - th) < 1e-4
        assert abs(prof.values[-1]) < 1e-4
        assert 0.0 <= prof.values.min() and prof.values.max() <= th * (1 + 1e-12)


def test_half_theta_normalization(prof_critical, prof_4):
    th = theta(LK1)
    for prof in (prof_critical, prof_4):
        assert abs(prof.interp(0.0) - th / 2.0) < 1e-12
        assert prof.shift_mode == "half-theta-at-origin"


def test_residual_reevaluation_matches(prof_4):
    assert abs(residual(prof_4, PAIR, LK1) - prof_4.residual_sup) \
        <= 1e-9 + 1e-6 * prof_4.residual_sup


def test_decay_rate_matches_dispersion(prof_critical, prof_4, rep):
    fit_c = tail_asymptotics(prof_critical)
    assert abs(fit_c.rate - rep.lambda_star) < 0.02 * rep.lambda_star
    root = speed_to_abscissa(PAIR, LK1, 4.0, rep)
    fit_4 = tail_asymptotics(prof_4)
    assert abs(fit_4.rate - root.lambda_c) < 0.02 * root.lambda_c


def test_j_estimate_tracks_multiplicity(prof_critical, prof_4):
    assert prof_critical.multiplicity == 2
    assert prof_4.multiplicity == 1
    assert abs(tail_asymptotics(prof_4).j_estimate - 1.0) < 0.15
    # the critical double root shows up as s e^{-lam s}; the log-log slope
    # overshoots 2 slightly on any finite window (subleading correction)
    assert abs(tail_asymptotics(prof_critical).j_estimate - 2.0) < 0.15


def test_lambda_c_recorded(prof_4, rep):
    root = speed_to_abscissa(PAIR, LK1, 4.0, rep)
    assert abs(prof_4.lambda_c - root.lambda_c) < 1e-12
    assert prof_4.speed == 4.0
    assert prof_4.orientation == "decreasing"


# ---------------------------------------------------------------------------
# the monotone phase really is monotone

def test_sweeps_decrease_pointwise():
    seen = []

    def hook(it, psi):
        if it % 10 == 0:
            seen.append(psi)

    solve_profile(PAIR, LK1, 4.0, max_sweeps=60, sweep_hook=hook)
    assert len(seen) >= 4
    # pointwise ordered up to FFT convolution noise (absolute, ~1e-12 here)
    for a, b in zip(seen, seen[1:]):
        assert np.all(b <= a + 1e-10)
    # and the decrease in the front region is genuine, far above the noise
    assert np.max(seen[0] - seen[-1]) > 1e-2


# ---------------------------------------------------------------------------
# shifts, anchors, uniqueness

def test_anchor_invariance(prof_4):
    other = solve_profile(PAIR, LK1, 4.0, anchor=5.0)
    assert compare_up_to_shift(prof_4, other) <= 1e-5


def test_compare_detects_actual_shift(prof_4):
    # shifted(q) is psi(. + q): the half-theta crossing moves to -q
    moved = prof_4.shifted(1.3)
    assert abs(moved.crossing(theta(LK1) / 2.0) + 1.3) < 1e-12
    assert compare_up_to_shift(prof_4, moved) < 1e-10


def test_compare_rejects_speed_mismatch(prof_4, prof_critical):
    with pytest.raises(UsageError):
        compare_up_to_shift(prof_4, prof_critical)


def test_half_theta_idempotent(prof_4):
    again = normalize_shift(prof_4, "half-theta-at-origin")
    assert np.array_equal(again.values, prof_4.values)
    assert np.array_equal(again.grid, prof_4.grid)


def test_unit_d_normalization(prof_4):
    once = normalize_shift(prof_4, "unit-D", pair=PAIR, params=LK1)
    twice = normalize_shift(once, "unit-D", pair=PAIR, params=LK1)
    q = twice.crossing(theta(LK1) / 2.0) - once.crossing(theta(LK1) / 2.0)
    assert abs(q) < 1e-6
    # formula route and fit route agree away from the critical speed
    fit = tail_asymptotics(once)
    assert abs(fit.D_estimate - 1.0) < 0.05


def test_unknown_shift_mode(prof_4):
    with pytest.raises(UsageError):
        normalize_shift(prof_4, "left-edge")


# ---------------------------------------------------------------------------
# reflection / negative speeds

def test_negative_speed_is_mirror(prof_4):
    mirrored = solve_profile(PAIR, LK1, -4.0)
    assert mirrored.orientation == "increasing"
    assert mirrored.speed == -4.0
    assert np.allclose(mirrored.values, prof_4.values[::-1], atol=1e-12)
    assert np.allclose(mirrored.grid, -prof_4.grid[::-1], atol=1e-12)


def test_reflect_round_trip(prof_4):
    back = prof_4.reflect().reflect()
    assert np.array_equal(back.values, prof_4.values)
    assert back.speed == prof_4.speed


def test_residual_on_increasing_orientation(prof_4):
    assert residual(prof_4.reflect(), PAIR, LK1) <= 1e-6


def test_crossing_on_increasing_orientation(prof_4):
    r = prof_4.reflect()
    assert abs(r.crossing(theta(LK1) / 2.0)) < 1e-12
    with pytest.raises(UsageError):
        r.crossing(2.0 * theta(LK1))


# ---------------------------------------------------------------------------
# competition-split kernels

def test_nonlocal_competition_profile():
    rep = minimal_speed(KN_PAIR, KN_PARAMS)
    prof = solve_profile(KN_PAIR, KN_PARAMS, 1.2 * rep.c_star, report=rep)
    th = theta(KN_PARAMS)
    assert abs(th - 2.0 / 3.0) < 1e-12
    assert prof.residual_sup <= 1e-6
    assert _strictly_decreasing(prof)
    assert abs(prof.values[0] - th) < 1e-4
    root = speed_to_abscissa(KN_PAIR, KN_PARAMS, 1.2 * rep.c_star, rep)
    fit = tail_asymptotics(prof)
    assert abs(fit.rate - root.lambda_c) < 0.02 * root.lambda_c


def test_competition_kernel_does_not_move_c_star():
    # the nonlinearity is quadratic near zero; the linearization, and with it
    # the minimal speed, only sees a_plus
    assert abs(minimal_speed(KN_PAIR, KN_PARAMS).c_star
               - minimal_speed(PAIR, LK1).c_star) < 1e-12


# ---------------------------------------------------------------------------
# wide finite-abscissa kernel (endpoint minimizer)

def test_w_class_profile_coarse_grid():
    k = ExpPoly(1.0, 3.0, 0.05)
    pair = KernelPair(k, k)
    rep = minimal_speed(pair, LK1)
    assert rep.kernel_class == "W"
    assert rep.lambda_star == k.sigma_right
    prof = solve_profile(pair, LK1, rep.c_star, grid=GridSpec(h=0.05),
                         report=rep)
    assert prof.residual_sup <= 1e-6
    assert _strictly_decreasing(prof)
    fit = tail_asymptotics(prof)
    assert abs(fit.rate - rep.lambda_star) < 0.02 * rep.lambda_star


# ---------------------------------------------------------------------------
# grid control and error paths

def test_grid_overrides():
    prof = solve_profile(PAIR, LK1, 4.0, grid=GridSpec(l_left=40.0,
                                                       l_right=60.0, h=0.02))
    assert abs(prof.h - 0.02) < 1e-9
    span = prof.grid[-1] - prof.grid[0]
    assert abs(span - 100.0) < 1.0


def test_zero_speed_rejected():
    with pytest.raises(AssumptionFailure) as err:
        solve_profile(PAIR, LK1, 0.0)
    assert err.value.label == "c-zero-unsupported"


def test_below_minimal_speed_rejected(rep):
    with pytest.raises(NoWave):
        solve_profile(PAIR, LK1, 0.9 * rep.c_star)


def test_truncated_kernel_rejected():
    cut = Truncated(Laplace(1.0), 5.0)
    with pytest.raises(UsageError):
        solve_profile(KernelPair(cut, cut), LK1, 4.0)


def test_failing_assumptions_rejected():
    with pytest.raises(AssumptionFailure) as err:
        solve_profile(PAIR, Params(0.5, 1.0), 4.0)
    assert err.value.label == "Q1"


def test_tail_fit_needs_enough_points(prof_4):
    short = WaveProfile(grid=prof_4.grid[:200], values=prof_4.values[:200],
                        speed=prof_4.speed, lambda_c=prof_4.lambda_c,
                        multiplicity=prof_4.multiplicity, theta=prof_4.theta,
                        residual_sup=prof_4.residual_sup)
    with pytest.raises(NonConvergence) as err:
        tail_asymptotics(short)
    assert err.value.label == "tail-underresolved"


def test_crossing_requires_straddled_level(prof_4):
    with pytest.raises(UsageError):
        prof_4.crossing(5.0)
