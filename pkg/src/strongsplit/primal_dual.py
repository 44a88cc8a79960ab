"""Primal-dual splitting with Tikhonov terms on ``H x G_1 x ... x G_m``.

Both schemes address inclusions of the form

    0 in A x + sum_i L_i^* (B_i [] D_i)(L_i x) + C x

where ``B_i [] D_i = (B_i^{-1} + D_i^{-1})^{-1}`` is never formed: the
iterations only touch resolvents of ``A``, ``B_i^{-1}`` and ``D_i^{-1}``
(forward-backward type also allows a single-valued cocoercive ``D_i^{-1}``
and a cocoercive ``C``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ConfigurationError
from .hilbert import LinearMap, Space, Vector, norm
from .operators import Operator, ProxFunction, Resolvent, conjugate, identity_resolvent
from .schedules import ParamSchedules, StepSizeCertificate
from .solvers import SolveTrace, StoppingRule, _drive, _stride_for, fixed_point_residual

__all__ = [
    "PdBlock",
    "PdProblem",
    "PdState",
    "solve_pd_fb",
    "solve_pd_fb_opt",
    "solve_pd_dr",
    "solve_pd_dr_opt",
    "dr_primal_dual_point",
]


@dataclass(frozen=True)
class PdBlock:
    """One coupling term ``L_i^* (B_i [] D_i) L_i``.

    ``B_inv`` is the resolvent family of ``B_i^{-1}``. ``D_inv`` is a direct
    evaluation of ``D_i^{-1}`` (declared cocoercive, needed by the
    forward-backward scheme); ``D_inv_res`` is the resolvent family of
    ``D_i^{-1}`` (needed by Douglas-Rachford). Leaving both unset means
    ``D_i^{-1} = 0``, i.e. ``B_i [] D_i = B_i``.
    """

    L: LinearMap
    B_inv: Resolvent
    D_inv: Optional[Operator] = None
    D_inv_res: Optional[Resolvent] = None

    @property
    def nu(self) -> float:
        if self.D_inv is None:
            return math.inf
        if self.D_inv.regularity != "cocoercive":
            raise ConfigurationError("D_i^{-1} must be declared cocoercive")
        return float(self.D_inv.constant)


@dataclass(frozen=True)
class PdProblem:
    """Resolvent of ``A`` on ``H``, optional cocoercive ``C`` and the blocks."""

    A_res: Resolvent
    blocks: tuple
    C: Optional[Operator] = None

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ConfigurationError("at least one linear block is required")
        H = self.A_res.space
        if self.C is not None:
            if self.C.space != H:
                raise ConfigurationError("C must act on the primal space")
            if self.C.regularity != "cocoercive":
                raise ConfigurationError("C must be declared cocoercive")
        for i, blk in enumerate(self.blocks):
            if blk.L.domain != H:
                raise ConfigurationError(f"L_{i + 1} does not start from the primal space")
            G = blk.L.codomain
            for h in (blk.B_inv, blk.D_inv, blk.D_inv_res):
                if h is not None and h.space != G:
                    raise ConfigurationError(f"block {i + 1} handles do not live on G_{i + 1}")

    @property
    def space(self) -> Space:
        return self.A_res.space

    @property
    def mu(self) -> float:
        return math.inf if self.C is None else float(self.C.constant)

    @property
    def nus(self) -> tuple:
        return tuple(blk.nu for blk in self.blocks)


@dataclass(frozen=True)
class PdState:
    """A primal-dual point ``(x, v_1, ..., v_m)``."""

    x: Vector
    v: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))

    def distance(self, other: "PdState") -> float:
        """Distance in the product norm (each block with its own inner product)."""
        d = norm(self.x - other.x) ** 2
        d += sum(norm(a - b) ** 2 for a, b in zip(self.v, other.v))
        return math.sqrt(d)


def _check_start(prob: PdProblem, start: PdState):
    if start.x.space != prob.space or len(start.v) != len(prob.blocks):
        raise ConfigurationError("starting point does not match the problem spaces")
    for vi, blk in zip(start.v, prob.blocks):
        if vi.space != blk.L.codomain:
            raise ConfigurationError("dual starting block on the wrong space")


def _check_cert(prob: PdProblem, cert: StepSizeCertificate, scheme: str):
    if cert.scheme != scheme:
        raise ConfigurationError(f"certificate is for {cert.scheme}, solver needs {scheme}")
    if len(cert.sigmas) != len(prob.blocks):
        raise ConfigurationError("certificate has the wrong number of dual step sizes")


def _adjoint_sum(prob, vs):
    out = None
    for blk, vi in zip(prob.blocks, vs):
        t = blk.L.adjoint(vi)
        out = t if out is None else out + t
    return out


def _state_increment(new, old):
    return new.distance(old)


def solve_pd_fb(
    prob: PdProblem,
    start: PdState,
    cert: StepSizeCertificate,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Forward-backward primal-dual iteration with Tikhonov term.

    One step, with ``bx = beta_n x_n`` and ``bv_i = beta_n v_{i,n}``::

        p   = J_{tau A}[bx - tau (beta_n sum_i L_i^* v_i + C(bx))]
        x+  = bx + lambda_n (p - bx)
        q_i = J_{sigma_i B_i^{-1}}[bv_i + sigma_i (L_i(2p - bx) - D_i^{-1}(bv_i))]
        v_i+ = bv_i + lambda_n (q_i - bv_i)

    The certificate must come from
    :func:`~strongsplit.schedules.validate_pd_fb_stepsizes` with constants no
    larger than the problem's ``mu`` and ``nu_i``. The default residual is the
    product-norm fixed-point residual of the unregularized map at the new
    iterate; a custom evaluator receives the primal iterate.
    """
    _check_cert(prob, cert, "pd_fb")
    _check_start(prob, start)
    for blk in prob.blocks:
        if blk.D_inv is None and blk.D_inv_res is not None:
            raise ConfigurationError(
                "forward-backward needs a direct evaluation of D_i^{-1}; "
                "it cannot be recovered from a resolvent"
            )
    if cert.beta > min((prob.mu,) + prob.nus):
        raise ConfigurationError("certificate assumes more cocoercivity than the problem has")
    sched.require_cap(cert.lambda_cap, "primal-dual forward-backward")
    stop = stop or fixed_point_residual()
    tau, sigmas = cert.tau, cert.sigmas
    blocks, A, C = prob.blocks, prob.A_res, prob.C

    def step(b, x, vs):
        bx = b * x
        bvs = [b * vi for vi in vs]
        s = b * _adjoint_sum(prob, vs)
        if C is not None:
            s = s + C(bx)
        p = A(tau, bx - tau * s)
        w = 2.0 * p - bx
        qs = []
        for blk, sig, bv in zip(blocks, sigmas, bvs):
            arg = blk.L(w)
            if blk.D_inv is not None:
                arg = arg - blk.D_inv(bv)
            qs.append(blk.B_inv(sig, bv + sig * arg))
        return bx, bvs, p, qs

    def update(n, state, b, lam):
        bx, bvs, p, qs = step(b, state.x, state.v)
        x_new = bx + lam * (p - bx)
        v_new = tuple(bv + lam * (q - bv) for bv, q in zip(bvs, qs))
        return PdState(x_new, v_new), None

    def residual(state, info, old):
        _, _, p, qs = step(1.0, state.x, state.v)
        return PdState(p, qs).distance(state)

    best, trace = _drive(
        start, update,
        residual=residual,
        primary=lambda s, info: s.x,
        increment=_state_increment,
        snapshot=lambda s: s,
        sched=sched, cap=cert.lambda_cap, stop=stop,
        stride=_stride_for(prob.space, stride),
        echo={"solver": "pd_fb", "tau": tau, "sigmas": list(sigmas),
              "lambda_cap_cert": cert.lambda_cap},
    )
    return best[0], trace


def _opt_blocks(L_list, g_stars, gs, l_star_of):
    if (g_stars is None) == (gs is None):
        raise ConfigurationError("supply exactly one of g_stars or gs")
    if g_stars is None:
        g_stars = [conjugate(g) for g in gs]
    if len(g_stars) != len(L_list):
        raise ConfigurationError("need one g_i per linear operator")
    return [l_star_of(L, gs_, i) for i, (L, gs_) in enumerate(zip(L_list, g_stars))]


def solve_pd_fb_opt(
    f: Optional[ProxFunction],
    h: Optional[ProxFunction],
    g_stars: Optional[Sequence[ProxFunction]],
    l_stars: Optional[Sequence[Optional[ProxFunction]]],
    L_list: Sequence[LinearMap],
    cert: StepSizeCertificate,
    sched: ParamSchedules,
    start: PdState,
    stop: Optional[StoppingRule] = None,
    *,
    gs: Optional[Sequence[ProxFunction]] = None,
    stride: Optional[int] = None,
):
    """Forward-backward primal-dual method for
    ``min f(x) + sum_i (g_i [] l_i)(L_i x) + h(x)``.

    ``f=None`` and ``h=None`` mean zero functions. Dual proxes come either from
    ``g_stars`` directly or from ``gs`` through Moreau's decomposition.
    ``l_stars[i]`` must provide ``grad l_i^*`` (and its Lipschitz constant
    ``1/nu_i``); ``None`` stands for ``l_i`` the indicator of ``{0}``.
    """
    H = L_list[0].domain
    l_stars = list(l_stars) if l_stars is not None else [None] * len(L_list)

    def make_block(L, g_star, i):
        ls = l_stars[i]
        D_inv = None if ls is None else ls.gradient_operator()
        return PdBlock(L, g_star.as_resolvent(), D_inv=D_inv)

    blocks = _opt_blocks(L_list, g_stars, gs, make_block)
    A = (f.as_resolvent() if f is not None else identity_resolvent(H))
    C = h.gradient_operator() if h is not None else None
    prob = PdProblem(A, blocks, C)
    return solve_pd_fb(prob, start, cert, sched, stop, stride=stride)


def solve_pd_dr(
    prob: PdProblem,
    start: PdState,
    cert: StepSizeCertificate,
    sched: ParamSchedules,
    stop: Optional[StoppingRule] = None,
    *,
    stride: Optional[int] = None,
):
    """Douglas-Rachford primal-dual iteration with Tikhonov term.

    With ``bx = beta_n x_n``, ``bv_i = beta_n v_{i,n}``::

        p1   = J_{tau A}(bx - tau/2 beta_n sum_i L_i^* v_i)
        w1   = 2 p1 - bx
        p2_i = J_{sigma_i B_i^{-1}}(bv_i + sigma_i/2 L_i w1)
        w2_i = 2 p2_i - bv_i
        z1   = w1 - tau/2 sum_i L_i^* w2_i
        x+   = bx + lambda_n (z1 - p1)
        z2_i = J_{sigma_i D_i^{-1}}(w2_i + sigma_i/2 L_i(2 z1 - w1))
        v_i+ = bv_i + lambda_n (z2_i - p2_i)

    Returns
    -------
    solution : PdState
        Last ``(p1, p2_1, ..., p2_m)``, approximating a primal-dual solution.
    governing : PdState
        Last ``(x, v_1, ..., v_m)``.
    trace : SolveTrace
        Default residual: ``max(||z1 - p1||, max_i ||z2_i - p2_i||, increment)``;
        a custom evaluator receives ``p1``.
    """
    _check_cert(prob, cert, "pd_dr")
    _check_start(prob, start)
    if prob.C is not None:
        raise ConfigurationError("the Douglas-Rachford scheme has no cocoercive term C")
    for blk in prob.blocks:
        if blk.D_inv is not None and blk.D_inv_res is None:
            raise ConfigurationError("Douglas-Rachford needs the resolvent of D_i^{-1}")
    sched.require_cap(2.0, "primal-dual Douglas-Rachford")
    stop = stop or fixed_point_residual()
    tau, sigmas = cert.tau, cert.sigmas
    blocks, A = prob.blocks, prob.A_res
    D_res = [blk.D_inv_res or identity_resolvent(blk.L.codomain) for blk in blocks]

    def update(n, state, b, lam):
        bx = b * state.x
        bvs = [b * vi for vi in state.v]
        p1 = A(tau, bx - (0.5 * tau) * (b * _adjoint_sum(prob, state.v)))
        w1 = 2.0 * p1 - bx
        p2 = [blk.B_inv(sig, bv + (0.5 * sig) * blk.L(w1))
              for blk, sig, bv in zip(blocks, sigmas, bvs)]
        w2 = [2.0 * p - bv for p, bv in zip(p2, bvs)]
        z1 = w1 - (0.5 * tau) * _adjoint_sum(prob, w2)
        x_new = bx + lam * (z1 - p1)
        u = 2.0 * z1 - w1
        z2 = [J(sig, w + (0.5 * sig) * blk.L(u))
              for J, blk, sig, w in zip(D_res, blocks, sigmas, w2)]
        v_new = tuple(bv + lam * (z - p) for bv, z, p in zip(bvs, z2, p2))
        return PdState(x_new, v_new), (PdState(p1, p2), PdState(z1, z2))

    def residual(state, info, old):
        p, z = info
        gap = max([norm(z.x - p.x)] + [norm(a - c) for a, c in zip(z.v, p.v)])
        return max(gap, state.distance(old))

    best, trace = _drive(
        start, update,
        residual=residual,
        primary=lambda s, info: info[0].x,
        increment=_state_increment,
        snapshot=lambda s: s,
        sched=sched, cap=2.0, stop=stop,
        stride=_stride_for(prob.space, stride),
        echo={"solver": "pd_dr", "tau": tau, "sigmas": list(sigmas)},
    )
    state, (p, _) = best
    return p, state, trace


def solve_pd_dr_opt(
    f: Optional[ProxFunction],
    g_stars: Optional[Sequence[ProxFunction]],
    l_stars: Optional[Sequence[Optional[ProxFunction]]],
    L_list: Sequence[LinearMap],
    cert: StepSizeCertificate,
    sched: ParamSchedules,
    start: PdState,
    stop: Optional[StoppingRule] = None,
    *,
    gs: Optional[Sequence[ProxFunction]] = None,
    ls: Optional[Sequence[ProxFunction]] = None,
    stride: Optional[int] = None,
):
    """Douglas-Rachford primal-dual method for
    ``min f(x) + sum_i (g_i [] l_i)(L_i x)``.

    ``l_stars[i] = None`` stands for ``l_i`` the indicator of ``{0}`` (so
    ``prox_{sigma l_i^*}`` is the identity). Conjugates missing from the
    arguments are obtained via Moreau's decomposition from ``gs`` / ``ls``.
    """
    H = L_list[0].domain
    if ls is not None:
        if l_stars is not None:
            raise ConfigurationError("supply at most one of l_stars or ls")
        l_stars = [conjugate(l) for l in ls]
    l_stars = list(l_stars) if l_stars is not None else [None] * len(L_list)

    def make_block(L, g_star, i):
        ls_ = l_stars[i]
        D_res = None if ls_ is None else ls_.as_resolvent()
        return PdBlock(L, g_star.as_resolvent(), D_inv_res=D_res)

    blocks = _opt_blocks(L_list, g_stars, gs, make_block)
    A = (f.as_resolvent() if f is not None else identity_resolvent(H))
    return solve_pd_dr(PdProblem(A, blocks), start, cert, sched, stop, stride=stride)


def dr_primal_dual_point(prob: PdProblem, cert: StepSizeCertificate, governing: PdState) -> PdState:
    """The primal-dual solution attached to a governing limit ``(x, v)``:

    ``p1 = J_{tau A}(x - tau/2 sum L_i^* v_i)``,
    ``p2_i = J_{sigma_i B_i^{-1}}(v_i + sigma_i/2 L_i(2 p1 - x))``.
    """
    tau = cert.tau
    x = governing.x
    p1 = prob.A_res(tau, x - (0.5 * tau) * _adjoint_sum(prob, governing.v))
    u = 2.0 * p1 - x
    p2 = [blk.B_inv(sig, vi + (0.5 * sig) * blk.L(u))
          for blk, sig, vi in zip(prob.blocks, cert.sigmas, governing.v)]
    return PdState(p1, p2)
