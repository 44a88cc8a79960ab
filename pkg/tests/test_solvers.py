import math

import numpy as np
import pytest

from strongsplit.errors import ConfigurationError, DomainError, ScheduleError
from strongsplit.hilbert import coordinate, norm
from strongsplit.operators import (
    Operator,
    affine_gradient,
    half_sq_distance_point,
    identity_resolvent,
    indicator_box,
    l1_norm,
    normal_cone,
    point_resolvent,
    project_box,
    reflected_resolvent,
    zero_function,
    zero_operator,
)
from strongsplit.schedules import (
    make_custom_schedules,
    make_default_schedules,
    make_unregularized_schedules,
)
from strongsplit.solvers import (
    custom_residual,
    fixed_point_residual,
    solve_dr,
    solve_dr_opt,
    solve_fb,
    solve_km,
    solve_km_averaged,
    solve_prox_grad,
)

C1, C2, C3 = coordinate(1), coordinate(2), coordinate(3)
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def error_to(target, tol, max_iter=100_000):
    t = np.asarray(target, float)
    return custom_residual(lambda x: float(np.linalg.norm(x.values - t)), tol, max_iter)


def fixed_steps(n):
    # a residual that never falls below tol: run exactly n steps
    return custom_residual(lambda x: 1.0, 1e-300, n)


def interval_op():
    return Operator(lambda x: project_box(1.0, 2.0, x), C1, label="P[1,2]")


def interval_cone():
    return normal_cone(lambda x: project_box(1.0, 2.0, x), C1)


def rotation():
    return Operator(lambda x: C2.element(ROT90 @ x.values), C2, label="rot")


def default(lam, cap):
    return make_default_schedules(lam, cap)


# -- solve_km -------------------------------------------------------------------------------

def test_km_identity_to_origin():
    # x_n = beta_0 x_0 / n exactly, so 1e-6 needs ~1.25e6 steps from (3, 4)
    T = Operator(lambda x: x, C2)
    x, tr = solve_km(T, C2.element([3.0, 4.0]), default(1.0, 1.0), error_to([0, 0], 1e-6, 2_000_000))
    assert tr.converged and norm(x) <= 1e-6
    assert tr.iterations_used == pytest.approx(1.25e6, rel=1e-3)


def test_km_interval():
    x, tr = solve_km(interval_op(), C1.element([5.0]), default(1.0, 1.0), error_to([1.0], 1e-6))
    assert tr.converged and abs(x.values[0] - 1.0) <= 1e-6


def test_km_rotation():
    x, tr = solve_km(rotation(), C2.element([1.0, 0.0]), default(1.0, 1.0),
                     error_to([0, 0], 1e-6, 1_000_000))
    assert tr.converged and norm(x) <= 1e-6


def test_km_default_stop_is_fixed_point_residual():
    x, tr = solve_km(interval_op(), C1.element([5.0]), default(0.5, 1.0))
    assert tr.converged
    assert abs(x.values[0] - project_box(1.0, 2.0, x).values[0]) <= 1e-8
    assert tr.config_echo["stop"] == "fixed_point_residual"
    assert "beta_0=0.25" in tr.config_echo["schedule"]


def test_km_cap_enforced():
    with pytest.raises(ScheduleError):
        solve_km(interval_op(), C1.element([5.0]), default(1.5, 2.0))
    # lambda above 1 smuggled in through a custom schedule with a low declared cap
    sneaky = make_custom_schedules(lambda n: 1.0, lambda n: 1.2, 1.0)
    with pytest.raises(ScheduleError):
        solve_km(interval_op(), C1.element([5.0]), sneaky)


def test_km_budget_returns_best_iterate():
    T = Operator(lambda x: x + C1.element([1.0]), C1)  # no fixed point
    x, tr = solve_km(T, C1.zero(), default(1.0, 1.0), fixed_point_residual(1e-8, 50))
    assert tr.terminated_by == "max_iterations" and tr.iterations_used == 50
    assert len(tr.residual_history) == 50
    assert np.isfinite(x.values).all()


def test_trace_snapshots():
    x, tr = solve_km(interval_op(), C1.element([5.0]), default(0.5, 1.0), fixed_steps(35))
    assert [n for n, _ in tr.iterates] == [10, 20, 30]
    _, tr1 = solve_km(interval_op(), C1.element([5.0]), default(0.5, 1.0), fixed_steps(5), stride=1)
    assert len(tr1.iterates) == 5


def test_stopping_rule_domain():
    with pytest.raises(DomainError):
        fixed_point_residual(0.0)
    with pytest.raises(DomainError):
        fixed_point_residual(1e-3, 0)


# -- solve_km_averaged ------------------------------------------------------------------------

def test_km_averaged_half_interval():
    R = Operator(lambda x: 0.5 * x + 0.5 * project_box(1.0, 2.0, x), C1, "averaged", 0.5)
    x, tr = solve_km_averaged(R, C1.element([5.0]), default(2.0, 2.0), error_to([1.0], 1e-6))
    assert tr.converged and abs(x.values[0] - 1.0) <= 1e-6


def test_km_averaged_identity():
    R = Operator(lambda x: x, C1, "averaged", 0.5)
    x, tr = solve_km_averaged(R, C1.element([2.0]), default(1.0, 2.0), error_to([0.0], 1e-4))
    assert tr.converged and abs(x.values[0]) <= 1e-4


def test_km_averaged_cap():
    R = Operator(lambda x: x, C1, "averaged", 0.5)
    solve_km_averaged(R, C1.element([2.0]), default(1.5, 2.0), fixed_steps(3))
    with pytest.raises(ScheduleError):
        solve_km_averaged(R, C1.element([2.0]), default(1.5, 2.5), fixed_steps(3))
    with pytest.raises(ConfigurationError):
        solve_km_averaged(Operator(lambda x: x, C1), C1.zero(), default(1.0, 1.0))


# -- solve_fb / solve_prox_grad ------------------------------------------------------------------

def test_fb_interval_cone():
    x, tr = solve_fb(interval_cone(), zero_operator(C1), 1.0, C1.element([5.0]),
                     default(1.0, 2.0), error_to([1.0], 1e-6))
    assert tr.converged and abs(x.values[0] - 1.0) <= 1e-6


def test_fb_soft_threshold_quadratic():
    B = affine_gradient(C1, C1.element([3.0]))
    x, tr = solve_fb(l1_norm(C1).as_resolvent(), B, 1.0, C1.zero(), default(1.0, 1.5),
                     error_to([2.0], 1e-6))
    assert tr.converged and abs(x.values[0] - 2.0) <= 1e-6


def test_fb_all_zero():
    x, tr = solve_fb(identity_resolvent(C1), zero_operator(C1), 1.0, C1.element([4.0]),
                     default(1.0, 2.0), error_to([0.0], 1e-4))
    assert tr.converged


def test_fb_default_stop_residual():
    B = affine_gradient(C1, C1.element([3.0]))
    J = l1_norm(C1).as_resolvent()
    x, tr = solve_fb(J, B, 1.0, C1.zero(), default(1.0, 1.5), fixed_point_residual(1e-8))
    assert tr.converged
    assert norm(x - J(1.0, x - B(x))) <= 1e-8


def test_fb_domain_errors():
    B = affine_gradient(C1, C1.zero())
    with pytest.raises(DomainError):
        solve_fb(identity_resolvent(C1), B, 2.5, C1.zero(), default(0.5, 1.0))
    with pytest.raises(ScheduleError):
        # gamma = 1, beta = 1: cap (4 - 1) / 2 = 1.5
        solve_fb(identity_resolvent(C1), B, 1.0, C1.zero(), default(1.0, 1.6))
    with pytest.raises(ConfigurationError):
        solve_fb(identity_resolvent(C1), Operator(lambda x: x, C1), 1.0, C1.zero(), default(1.0, 1.0))


def test_prox_grad_examples():
    box = indicator_box(C1, 1.0, 2.0)
    x, tr = solve_prox_grad(box, zero_function(C1), 1.0, C1.element([5.0]), default(1.0, 2.0),
                            error_to([1.0], 1e-6))
    assert tr.converged

    c = C2.element([3.0, 4.0])
    x, tr = solve_prox_grad(zero_function(C2), half_sq_distance_point(c), 1.0, C2.zero(),
                            default(1.0, 1.5), error_to([3.0, 4.0], 1e-6))
    assert tr.converged and norm(x - c) <= 1e-6

    x, tr = solve_prox_grad(l1_norm(C1), half_sq_distance_point(C1.element([3.0])), 1.0,
                            C1.zero(), default(1.0, 1.5), error_to([2.0], 1e-6))
    assert tr.converged


# -- solve_dr / solve_dr_opt ---------------------------------------------------------------------

def test_dr_interval():
    y, x, tr = solve_dr(identity_resolvent(C1), interval_cone(), 1.0, C1.element([5.0]),
                        default(1.0, 2.0), error_to([1.0], 1e-6))
    assert tr.converged
    assert abs(y.values[0] - 1.0) <= 1e-6 and abs(x.values[0] - 1.0) <= 1e-6


def test_dr_all_zero():
    y, x, tr = solve_dr(identity_resolvent(C1), identity_resolvent(C1), 1.0, C1.element([3.0]),
                        default(1.0, 2.0), error_to([0.0], 1e-4))
    assert tr.converged and abs(y.values[0]) <= 1e-4 and abs(x.values[0]) <= 1e-4


def test_dr_point_shadow():
    tol = 1e-4
    A = point_resolvent(C1.element([2.0]))
    y, x, tr = solve_dr(A, identity_resolvent(C1), 1.0, C1.zero(), default(1.0, 2.0),
                        error_to([2.0], tol))
    assert tr.converged and abs(y.values[0] - 2.0) <= tol


def test_dr_opt_examples():
    f, g = indicator_box(C1, 0.0, 2.0), indicator_box(C1, 1.0, 3.0)
    to_argmin = custom_residual(lambda y: abs(y.values[0] - np.clip(y.values[0], 1, 2)), 1e-8)
    y, x, tr = solve_dr_opt(f, g, 1.0, C1.element([7.0]), default(1.0, 2.0), to_argmin)
    assert tr.converged and 1.0 - 1e-8 <= y.values[0] <= 2.0 + 1e-8

    y, x, tr = solve_dr_opt(zero_function(C1), zero_function(C1), 1.0, C1.element([3.0]),
                            default(1.0, 2.0), error_to([0.0], 1e-4))
    assert tr.converged and abs(y.values[0]) <= 1e-4

    y, x, tr = solve_dr_opt(l1_norm(C1), half_sq_distance_point(C1.element([3.0])), 1.0,
                            C1.zero(), default(1.0, 2.0), error_to([2.0], 1e-4))
    assert tr.converged and abs(y.values[0] - 2.0) <= 1e-4


def test_dr_default_residual_includes_governing_drift():
    # z - y vanishes at every step here, yet x_n keeps shrinking: the increment term matters
    y, x, tr = solve_dr(identity_resolvent(C1), identity_resolvent(C1), 1.0, C1.element([3.0]),
                        default(1.0, 2.0), fixed_point_residual(1e-4))
    assert tr.converged
    assert tr.residual_history[-1] == pytest.approx(tr.increment_history[-1])
    assert tr.iterations_used > 5


def test_dr_cap():
    with pytest.raises(ScheduleError):
        solve_dr(identity_resolvent(C1), identity_resolvent(C1), 1.0, C1.zero(), default(2.0, 2.5))
    with pytest.raises(DomainError):
        solve_dr(identity_resolvent(C1), identity_resolvent(C1), 0.0, C1.zero(), default(1.0, 2.0))


# -- invariants -----------------------------------------------------------------------------------

def test_classical_km_step_bit_identical():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.standard_normal((3, 3))
        M /= np.linalg.norm(M, 2)
        T = Operator(lambda x, M=M: C3.element(M @ x.values), C3)
        x0 = C3.element(rng.standard_normal(3))
        lam = float(rng.uniform(0.1, 1.0))
        x1, _ = solve_km(T, x0, make_unregularized_schedules(lam, 1.0), fixed_steps(1))
        classical = x0.values + lam * (M @ x0.values - x0.values)
        assert np.array_equal(x1.values, classical)


ANALYTIC = [
    ("identity", lambda: Operator(lambda x: x, C2), C2.element([3.0, 4.0]), [0.0, 0.0]),
    ("interval", interval_op, C1.element([5.0]), [1.0]),
    ("rotation", rotation, C2.element([1.0, 0.0]), [0.0, 0.0]),
    ("box3", lambda: Operator(lambda x: project_box([1, -1, -2], [2, 1, -1], x), C3),
     C3.element([-4.0, 0.5, 3.0]), [1.0, 0.0, -1.0]),
]


@pytest.mark.parametrize("name,make,x0,xstar", ANALYTIC, ids=[a[0] for a in ANALYTIC])
def test_fejer_bound(name, make, x0, xstar):
    xs = np.asarray(xstar)
    bound = max(np.linalg.norm(x0.values - xs), np.linalg.norm(xs)) + 1e-9
    for lam in (0.3, 1.0):
        _, tr = solve_km(make(), x0, default(lam, 1.0), fixed_steps(2000), stride=1)
        for _, x in tr.iterates:
            assert np.linalg.norm(x.values - xs) <= bound


@pytest.mark.parametrize("name,make,x0,xstar", ANALYTIC, ids=[a[0] for a in ANALYTIC])
def test_residual_decay(name, make, x0, xstar):
    T = make()
    x, tr = solve_km(T, x0, default(1.0, 1.0), fixed_point_residual(1e-4))
    assert tr.converged and norm(x - T(x)) <= 1e-4


def test_min_norm_selection_vs_baseline():
    # Fix P_box = [1,2] x [-1,1] x [-2,-1]; min-norm point (1, 0, -1)
    T = ANALYTIC[3][1]()
    x0 = ANALYTIC[3][2]
    xstar = np.array([1.0, 0.0, -1.0])
    x, tr = solve_km(T, x0, default(1.0, 1.0), error_to(xstar, 1e-4))
    assert tr.converged
    xb, trb = solve_km(T, x0, make_unregularized_schedules(1.0, 1.0), fixed_point_residual(1e-4))
    assert trb.converged
    assert norm(xb - T(xb)) <= 1e-4  # feasible
    assert np.linalg.norm(xb.values - xstar) > 0.1  # start-dependent, not min-norm


def test_fb_equals_averaged_km():
    rng = np.random.default_rng(4)
    c = C3.element([3.0, -0.2, 1.0])
    B = affine_gradient(C3, c)  # cocoercive with beta = 1
    J = l1_norm(C3).as_resolvent()
    beta, gamma = 1.0, 1.5
    alpha = 2 * beta / (4 * beta - gamma)
    cap = (4 * beta - gamma) / (2 * beta)
    assert cap == pytest.approx(1 / alpha)
    T = Operator(lambda x: J(gamma, x - gamma * B(x)), C3, "averaged", alpha)
    for lam in (0.7, 1.2):
        x0 = C3.element(rng.standard_normal(3) * 4)
        sched = default(lam, cap)
        _, tr_fb = solve_fb(J, B, gamma, x0, sched, fixed_steps(50), stride=1)
        _, tr_km = solve_km_averaged(T, x0, sched, fixed_steps(50), stride=1)
        assert len(tr_fb.iterates) == 50
        for (_, a), (_, b) in zip(tr_fb.iterates, tr_km.iterates):
            assert norm(a - b) <= 1e-10


def test_dr_equals_km_on_reflections():
    rng = np.random.default_rng(8)
    A = l1_norm(C3).as_resolvent()
    B = normal_cone(lambda x: project_box(-1.0, [2.0, 0.5, 1.0], x), C3)
    gamma = 0.7
    T = Operator(lambda x: reflected_resolvent(A, gamma, reflected_resolvent(B, gamma, x)), C3)
    for lam in (0.8, 1.6, 2.0):
        x0 = C3.element(rng.standard_normal(3) * 3)
        _, _, tr_dr = solve_dr(A, B, gamma, x0, default(lam, 2.0), fixed_steps(50), stride=1)
        _, tr_km = solve_km(T, x0, default(lam / 2, 1.0), fixed_steps(50), stride=1)
        for (_, a), (_, b) in zip(tr_dr.iterates, tr_km.iterates):
            assert norm(a - b) <= 1e-10


def test_trace_lengths_match():
    _, tr = solve_km(interval_op(), C1.element([5.0]), default(0.5, 1.0), fixed_point_residual(1e-6))
    assert tr.iterations_used == len(tr.residual_history) == len(tr.increment_history)
    assert tr.schedule_tag == "default_beta"
    assert math.isfinite(tr.final_residual)
