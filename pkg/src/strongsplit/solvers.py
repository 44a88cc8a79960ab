"""Tikhonov-regularized fixed-point, forward-backward and Douglas-Rachford solvers.

Every scheme here has the shape

    x_{n+1} = beta_n x_n + lambda_n (T(beta_n x_n) - beta_n x_n)

for a suitable nonexpansive or averaged ``T``. With ``beta_n -> 1`` slowly
(``sum (1 - beta_n) = inf``) the iterates converge strongly to the
minimal-norm element of the solution set; ``beta_n = 1`` recovers the
classical relaxed iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .errors import ConfigurationError, DomainError
from .hilbert import Space, Vector, norm
from .operators import Operator, ProxFunction, Resolvent
from .schedules import ParamSchedules

__all__ = [
    "StoppingRule",
    "SolveTrace",
    "fixed_point_residual",
    "custom_residual",
    "solve_km",
    "solve_km_averaged",
    "solve_fb",
    "solve_prox_grad",
    "solve_dr",
    "solve_dr_opt",
]

SNAPSHOT_STRIDE = 10
SNAPSHOT_MAX_DIM = 10_000


@dataclass(frozen=True)
class StoppingRule:
    """Stop once a residual drops to ``tol`` or after ``max_iterations`` steps.

    Without an ``evaluator`` the residual is the scheme's own fixed-point
    residual. A custom ``evaluator`` receives the vector the solver would
    return (primal iterate, or the shadow sequence for Douglas-Rachford).
    """

    tol: float = 1e-8
    max_iterations: int = 100_000
    evaluator: Optional[Callable[[Vector], float]] = None
    label: str = ""

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("stopping tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")

    @property
    def kind(self) -> str:
        return "fixed_point_residual" if self.evaluator is None else "custom_residual"


def fixed_point_residual(tol: float = 1e-8, max_iterations: int = 100_000) -> StoppingRule:
    return StoppingRule(tol, max_iterations)


def custom_residual(
    evaluator: Callable[[Vector], float], tol: float, max_iterations: int = 100_000, label: str = "custom"
) -> StoppingRule:
    return StoppingRule(tol, max_iterations, evaluator, label)


@dataclass
class SolveTrace:
    """Per-iteration diagnostics of one solver run."""

    residual_history: list = field(default_factory=list)
    increment_history: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    iterations_used: int = 0
    terminated_by: str = "max_iterations"
    schedule_tag: str = ""
    config_echo: dict = field(default_factory=dict)
    result: Any = None

    @property
    def converged(self) -> bool:
        return self.terminated_by == "tolerance"

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else math.nan


def _stride_for(space: Space, stride: Optional[int]) -> int:
    if stride is None:
        return SNAPSHOT_STRIDE if space.dim <= SNAPSHOT_MAX_DIM else 0
    return stride


def _drive(state, update, residual, primary, increment, snapshot, sched, cap, stop, stride, echo):
    """Shared iteration loop.

    ``update(n, state, beta, lam) -> (new_state, info)``; ``residual`` gives the
    default fixed-point residual from ``(new_state, info, old_state)``;
    ``primary(new_state, info)`` is what the caller gets back.
    """
    trace = SolveTrace(
        schedule_tag=sched.family_tag,
        config_echo=dict(echo, schedule=sched.description, lambda_cap=sched.lambda_cap,
                         stop=stop.kind, tol=stop.tol, max_iterations=stop.max_iterations),
    )
    best = None
    best_res = math.inf
    for n in range(stop.max_iterations):
        b, lam = sched.at(n, cap)
        new_state, info = update(n, state, b, lam)
        if stop.evaluator is None:
            res = residual(new_state, info, state)
        else:
            res = float(stop.evaluator(primary(new_state, info)))
        trace.residual_history.append(res)
        trace.increment_history.append(increment(new_state, state))
        if stride and (n + 1) % stride == 0:
            trace.iterates.append((n + 1, snapshot(new_state)))
        state = new_state
        if res <= best_res:
            best, best_res = (new_state, info), res
        if res <= stop.tol:
            trace.terminated_by = "tolerance"
            best = (new_state, info)
            break
    trace.iterations_used = len(trace.residual_history)
    return best, trace


def _same_space(x0: Vector, space: Space, what: str):
    if x0.space != space:
        raise ConfigurationError(f"starting point lives on {x0.space!r}, {what} on {space!r}")


def _vec_increment(new, old):
    return norm(new - old)


def _identity(v):
    return v


def _km_core(T, x0, sched, stop, cap, stride, name, extra_echo=None):
    _same_space(x0, T.space, "operator")
    stop = stop or fixed_point_residual()

    def update(n, x, b, lam):
        bx = b * x
        return bx + lam * (T(bx) - bx), None

    (x, _), trace = _drive(
        x0, update,
        residual=lambda x, info, old: norm(x - T(x)),
        primary=lambda x, info: x,
        increment=_vec_increment,
        snapshot=_identity,
        sched=sched, cap=cap, stop=stop,
        stride=_stride_for(x0.space, stride),
        echo=dict({"solver": name, "operator": T.label}, **(extra_echo or {})),
    )
    return x, trace


def solve_km(
    T: Operator,
    x0: Vector,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Krasnosel'skii-Mann iteration with Tikhonov term.

    ``x_{n+1} = beta_n x_n + lambda_n (T(beta_n x_n) - beta_n x_n)`` for a
    nonexpansive ``T``; converges strongly to the projection of the origin
    onto ``Fix T`` (assumed nonempty). Requires ``lambda_n <= 1``.

    Returns
    -------
    x : Vector
        Final iterate, or the iterate with the smallest residual if the
        iteration budget ran out.
    trace : SolveTrace
    """
    sched.require_cap(1.0, "Krasnosel'skii-Mann")
    return _km_core(T, x0, sched, stop, 1.0, stride, "km")


def solve_km_averaged(
    R: Operator,
    x0: Vector,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    alpha: Optional[float] = None,
    stride: Optional[int] = None,
):
    """Same recursion for an alpha-averaged ``R``; relaxation may reach ``1/alpha``."""
    if alpha is None:
        if R.regularity != "averaged":
            raise ConfigurationError("operator is not declared averaged; pass alpha")
        alpha = R.constant
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    cap = 1.0 / alpha
    sched.require_cap(cap, "averaged Krasnosel'skii-Mann")
    return _km_core(R, x0, sched, stop, cap, stride, "km_averaged", {"alpha": alpha})


def _fb_cap(beta: float, gamma: float) -> float:
    if math.isinf(beta):
        return 2.0
    return (4.0 * beta - gamma) / (2.0 * beta)


def solve_fb(
    A_res: Resolvent,
    B: Operator,
    gamma: float,
    x0: Vector,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Forward-backward splitting with Tikhonov term.

    ``x_{n+1} = (1 - lambda_n) beta_n x_n + lambda_n J_{gamma A}(beta_n x_n - gamma B(beta_n x_n))``
    with ``B`` beta-cocoercive, ``gamma in (0, 2 beta]`` and
    ``lambda_n <= (4 beta - gamma) / (2 beta)``. The limit is the
    minimal-norm zero of ``A + B``.
    """
    if B.regularity != "cocoercive":
        raise ConfigurationError("forward operator must be declared cocoercive")
    beta = B.constant
    if not 0 < gamma <= 2 * beta:
        raise DomainError(f"gamma = {gamma} outside (0, 2*beta] with beta = {beta}")
    _same_space(x0, A_res.space, "resolvent")
    _same_space(x0, B.space, "forward operator")
    cap = _fb_cap(beta, gamma)
    sched.require_cap(cap, "forward-backward")
    stop = stop or fixed_point_residual()

    def fb_map(x):
        return A_res(gamma, x - gamma * B(x))

    def update(n, x, b, lam):
        bx = b * x
        return (1.0 - lam) * bx + lam * fb_map(bx), None

    (x, _), trace = _drive(
        x0, update,
        residual=lambda x, info, old: norm(x - fb_map(x)),
        primary=lambda x, info: x,
        increment=_vec_increment,
        snapshot=_identity,
        sched=sched, cap=cap, stop=stop,
        stride=_stride_for(x0.space, stride),
        echo={"solver": "fb", "A": A_res.label, "B": B.label, "gamma": gamma,
              "cocoercivity": beta},
    )
    return x, trace


def solve_prox_grad(
    f: ProxFunction,
    g_grad,
    gamma: float,
    x0: Vector,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Proximal gradient with Tikhonov term, converging to the minimal-norm
    minimizer of ``f + g``. ``g_grad`` is a cocoercive :class:`Operator` or a
    differentiable :class:`ProxFunction`."""
    if isinstance(g_grad, ProxFunction):
        g_grad = g_grad.gradient_operator()
    return solve_fb(f.as_resolvent(), g_grad, gamma, x0, sched, stop, stride=stride)


def solve_dr(
    A_res: Resolvent,
    B_res: Resolvent,
    gamma: float,
    x0: Vector,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Douglas-Rachford splitting with Tikhonov term.

    Iterates ``y_n = J_{gamma B}(beta_n x_n)``,
    ``z_n = J_{gamma A}(2 y_n - beta_n x_n)``,
    ``x_{n+1} = beta_n x_n + lambda_n (z_n - y_n)`` with ``lambda_n <= 2``.

    The default stopping residual is ``max(||z_n - y_n||, ||x_{n+1} - x_n||)``:
    the shadow gap alone can vanish while the governing sequence still moves.

    Returns
    -------
    shadow : Vector
        Last ``y_n``, approximating a zero of ``A + B``.
    governing : Vector
        Last ``x_{n+1}``, approximating the minimal-norm fixed point of
        ``R_{gamma A} R_{gamma B}``.
    trace : SolveTrace
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    _same_space(x0, A_res.space, "first resolvent")
    _same_space(x0, B_res.space, "second resolvent")
    sched.require_cap(2.0, "Douglas-Rachford")
    stop = stop or fixed_point_residual()

    def update(n, x, b, lam):
        bx = b * x
        y = B_res(gamma, bx)
        z = A_res(gamma, 2.0 * y - bx)
        return bx + lam * (z - y), (y, z)

    def residual(x, info, old):
        y, z = info
        return max(norm(z - y), norm(x - old))

    (x, (y, _)), trace = _drive(
        x0, update,
        residual=residual,
        primary=lambda x, info: info[0],
        increment=_vec_increment,
        snapshot=_identity,
        sched=sched, cap=2.0, stop=stop,
        stride=_stride_for(x0.space, stride),
        echo={"solver": "dr", "A": A_res.label, "B": B_res.label, "gamma": gamma},
    )
    return y, x, trace


def solve_dr_opt(
    f: ProxFunction,
    g: ProxFunction,
    gamma: float,
    x0: Vector,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Douglas-Rachford for ``min f + g``; the shadow ``prox_{gamma g}`` limit
    is a minimizer. The qualification ``0 in sqri(dom f - dom g)`` is the
    caller's responsibility."""
    return solve_dr(f.as_resolvent(), g.as_resolvent(), gamma, x0, sched, stop, stride=stride)
