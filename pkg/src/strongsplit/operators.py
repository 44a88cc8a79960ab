"""Operator and function handles, calculus rules and closed-form proxes.

Set-valued maximally monotone operators appear only through their
resolvents ``J_{gamma A} = (id + gamma A)^{-1}``; convex functions through
their proximal maps. Everything shipped here is closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .hilbert import Space, Vector, inner, norm

__all__ = [
    "Operator",
    "Resolvent",
    "ProxFunction",
    "reflected_resolvent",
    "moreau_conjugate_prox",
    "resolvent_of_inverse",
    "compose_averaged_alpha",
    "project_halfspace",
    "project_ball",
    "project_box",
    "distance_sq_gradient",
    "inverse_resolvent",
    "conjugate",
    "zero_operator",
    "affine_gradient",
    "identity_resolvent",
    "point_resolvent",
    "linear_resolvent",
    "normal_cone",
    "zero_function",
    "indicator_point",
    "indicator_box",
    "indicator_halfspace",
    "indicator_ball",
    "l1_norm",
    "half_sq_distance_point",
    "half_sq_distance_set",
]

REGULARITY_KINDS = ("nonexpansive", "averaged", "cocoercive", "lipschitz")


@dataclass(frozen=True)
class Operator:
    """A single-valued map with a declared regularity class.

    ``constant`` is the averagedness ``alpha`` for ``averaged``, the
    cocoercivity ``beta`` for ``cocoercive`` (``math.inf`` for the zero map),
    the Lipschitz constant for ``lipschitz``, and ignored for ``nonexpansive``.
    The declaration is trusted, not verified.
    """

    apply: Callable[[Vector], Vector]
    space: Space
    regularity: str = "nonexpansive"
    constant: Optional[float] = None
    label: str = "T"

    def __post_init__(self):
        if self.regularity not in REGULARITY_KINDS:
            raise DomainError(f"unknown regularity {self.regularity!r}")
        if self.regularity == "averaged" and not (0 < (self.constant or 0) < 1):
            raise DomainError("averaged operators need alpha in (0, 1)")
        if self.regularity == "cocoercive" and not (self.constant or 0) > 0:
            raise DomainError("cocoercive operators need beta > 0")

    def __call__(self, x: Vector) -> Vector:
        return self.apply(x)


@dataclass(frozen=True)
class Resolvent:
    """The resolvent family ``gamma -> J_{gamma A}`` of a maximally monotone A."""

    resolve: Callable[[float, Vector], Vector]
    space: Space
    label: str = "A"

    def __call__(self, gamma: float, x: Vector) -> Vector:
        return self.resolve(gamma, x)


@dataclass(frozen=True)
class ProxFunction:
    """A proper convex lsc function accessed through its proximal map.

    ``conjugate_prox`` is an optional closed-form ``prox_{gamma f*}`` used only
    to cross-check the Moreau decomposition.
    """

    prox: Callable[[float, Vector], Vector]
    space: Space
    value: Optional[Callable[[Vector], float]] = None
    gradient: Optional[Callable[[Vector], Vector]] = None
    lipschitz: Optional[float] = None
    conjugate_prox: Optional[Callable[[float, Vector], Vector]] = None
    label: str = "f"

    def __call__(self, x: Vector) -> float:
        if self.value is None:
            raise NotImplementedError(f"{self.label} has no value oracle")
        return self.value(x)

    def as_resolvent(self) -> Resolvent:
        """``prox_{gamma f}`` viewed as the resolvent of the subdifferential."""
        return Resolvent(self.prox, self.space, f"prox[{self.label}]")

    def gradient_operator(self) -> Operator:
        """``grad f`` as a cocoercive operator (Baillon-Haddad)."""
        if self.gradient is None:
            raise DomainError(f"{self.label} is not differentiable")
        lip = self.lipschitz
        beta = math.inf if not lip else 1.0 / lip
        return Operator(self.gradient, self.space, "cocoercive", beta, f"grad[{self.label}]")


def _positive(gamma):
    if not gamma > 0:
        raise DomainError(f"step size must be positive, got {gamma}")


# -- calculus rules -----------------------------------------------------------

def reflected_resolvent(J: Resolvent, gamma: float, x: Vector) -> Vector:
    """``R_{gamma A}(x) = 2 J_{gamma A}(x) - x``."""
    _positive(gamma)
    return 2.0 * J(gamma, x) - x


def moreau_conjugate_prox(f: ProxFunction, gamma: float, x: Vector) -> Vector:
    """``prox_{gamma f*}(x)`` via ``x - gamma prox_{f/gamma}(x/gamma)``."""
    _positive(gamma)
    return x - gamma * f.prox(1.0 / gamma, x / gamma)


def resolvent_of_inverse(J: Resolvent, gamma: float, x: Vector) -> Vector:
    """``J_{M^{-1}/gamma}(x/gamma)``, computed as ``(x - J_{gamma M}(x)) / gamma``."""
    _positive(gamma)
    return (x - J(gamma, x)) / gamma


def inverse_resolvent(J: Resolvent) -> Resolvent:
    """Resolvent family of ``M^{-1}`` built from that of ``M``.

    ``J_{s M^{-1}}(y) = y - s J_{M/s}(y/s)``, i.e. :func:`resolvent_of_inverse`
    evaluated at ``gamma = 1/s`` and ``x = y/s``.
    """

    def resolve(s, y):
        _positive(s)
        return resolvent_of_inverse(J, 1.0 / s, y / s)

    return Resolvent(resolve, J.space, f"inv[{J.label}]")


def conjugate(f: ProxFunction) -> ProxFunction:
    """The Fenchel conjugate ``f*``, accessed through Moreau's decomposition."""
    return ProxFunction(
        lambda gamma, x: moreau_conjugate_prox(f, gamma, x),
        f.space,
        conjugate_prox=f.prox,
        label=f"{f.label}*",
    )


def compose_averaged_alpha(alpha1: float, alpha2: float) -> float:
    """Averagedness constant of ``T1 o T2`` for alpha_i-averaged ``T_i``."""
    for a in (alpha1, alpha2):
        if not 0 < a < 1:
            raise DomainError(f"averagedness constants must lie in (0, 1), got {a}")
    return (alpha1 + alpha2 - 2 * alpha1 * alpha2) / (1 - alpha1 * alpha2)


# -- projections ----------------------------------------------------------------

def project_halfspace(u: Vector, b: float, x: Vector) -> Vector:
    """Projection onto ``{x : <x, u> <= b}``."""
    uu = inner(u, u)
    if uu == 0.0:
        raise DomainError("halfspace normal must be nonzero")
    s = inner(x, u)
    if s <= b:
        return x
    return x + ((b - s) / uu) * u


def project_ball(center: Vector, r: float, x: Vector) -> Vector:
    """Projection onto the closed ball ``{x : ||x - center|| <= r}``."""
    if not r > 0:
        raise DomainError("ball radius must be positive")
    d = x - center
    dist = norm(d)
    if dist <= r:
        return x
    return center + (r / dist) * d


def project_box(lo, hi, x: Vector) -> Vector:
    """Componentwise clipping onto ``[lo, hi]``."""
    return Vector._wrap(x.space, np.clip(x.values, lo, hi))


def distance_sq_gradient(project: Callable[[Vector], Vector], x: Vector) -> Vector:
    """Gradient of ``0.5 d_C^2`` at ``x``: ``x - P_C(x)`` (1-cocoercive)."""
    return x - project(x)


# -- operator instances -----------------------------------------------------------

def zero_operator(space: Space) -> Operator:
    return Operator(lambda x: space.zero(), space, "cocoercive", math.inf, "0")


def affine_gradient(space: Space, c: Vector) -> Operator:
    """``x -> x - c``, the gradient of ``0.5||x - c||^2`` (1-cocoercive)."""
    return Operator(lambda x: x - c, space, "cocoercive", 1.0, "id-c")


def identity_resolvent(space: Space) -> Resolvent:
    """Resolvent of the zero operator."""
    return Resolvent(lambda gamma, x: x, space, "0")


def point_resolvent(c: Vector) -> Resolvent:
    """Resolvent of the normal cone of ``{c}``: the constant map ``c``."""
    return Resolvent(lambda gamma, x: c, c.space, "N{c}")


def linear_resolvent(space: Space) -> Resolvent:
    """Resolvent of the identity operator: ``x / (1 + gamma)``."""
    return Resolvent(lambda gamma, x: x / (1.0 + gamma), space, "id")


def normal_cone(project: Callable[[Vector], Vector], space: Space, label="N_C") -> Resolvent:
    """Resolvent of a normal cone: the projection, independent of gamma."""
    return Resolvent(lambda gamma, x: project(x), space, label)


# -- function instances -------------------------------------------------------------

def zero_function(space: Space) -> ProxFunction:
    return ProxFunction(
        prox=lambda gamma, x: x,
        space=space,
        value=lambda x: 0.0,
        gradient=lambda x: space.zero(),
        lipschitz=0.0,
        conjugate_prox=lambda gamma, x: space.zero(),
        label="0",
    )


def indicator_point(c: Vector) -> ProxFunction:
    """Indicator of ``{c}``; its conjugate is the linear form ``<c, .>``."""
    space = c.space

    def value(x):
        return 0.0 if np.array_equal(x.values, c.values) else math.inf

    return ProxFunction(
        prox=lambda gamma, x: c,
        space=space,
        value=value,
        conjugate_prox=lambda gamma, x: x - gamma * c,
        label="delta{c}",
    )


def indicator_box(space: Space, lo, hi) -> ProxFunction:
    """Indicator of ``[lo, hi]`` componentwise; conjugate is the support function."""
    lo_a = np.broadcast_to(np.asarray(lo, dtype=float), (space.dim,))
    hi_a = np.broadcast_to(np.asarray(hi, dtype=float), (space.dim,))
    if np.any(lo_a > hi_a):
        raise DomainError("empty box")

    def value(x):
        return 0.0 if np.all((x.values >= lo_a) & (x.values <= hi_a)) else math.inf

    def conj_prox(gamma, y):
        # prox of the support function y -> sum max(lo*y, hi*y)
        v = y.values
        out = np.where(v > gamma * hi_a, v - gamma * hi_a,
                       np.where(v < gamma * lo_a, v - gamma * lo_a, 0.0))
        return Vector._wrap(space, out)

    return ProxFunction(
        prox=lambda gamma, x: project_box(lo_a, hi_a, x),
        space=space,
        value=value,
        conjugate_prox=conj_prox,
        label="delta[box]",
    )


def indicator_halfspace(u: Vector, b: float) -> ProxFunction:
    def value(x):
        return 0.0 if inner(x, u) <= b else math.inf

    return ProxFunction(
        prox=lambda gamma, x: project_halfspace(u, b, x),
        space=u.space,
        value=value,
        label="delta[halfspace]",
    )


def indicator_ball(center: Vector, r: float) -> ProxFunction:
    """Indicator of a ball; conjugate ``<center, .> + r||.||`` has a closed-form prox."""

    def value(x):
        return 0.0 if norm(x - center) <= r else math.inf

    def conj_prox(gamma, y):
        z = y - gamma * center
        nz = norm(z)
        if nz <= gamma * r:
            return center.space.zero()
        return (1.0 - gamma * r / nz) * z

    return ProxFunction(
        prox=lambda gamma, x: project_ball(center, r, x),
        space=center.space,
        value=value,
        conjugate_prox=conj_prox,
        label="delta[ball]",
    )


def l1_norm(space: Space, weight: float = 1.0) -> ProxFunction:
    """``weight * sum |x_k|`` on a coordinate space; prox is soft-thresholding."""
    w = float(weight)

    def prox(gamma, x):
        v = x.values
        return Vector._wrap(space, np.sign(v) * np.maximum(np.abs(v) - gamma * w, 0.0))

    return ProxFunction(
        prox=prox,
        space=space,
        value=lambda x: w * float(np.abs(x.values).sum()),
        conjugate_prox=lambda gamma, y: project_box(-w, w, y),
        label="l1",
    )


def half_sq_distance_point(c: Vector) -> ProxFunction:
    """``0.5 ||x - c||^2``; conjugate ``0.5||y||^2 + <c, y>``."""
    return ProxFunction(
        prox=lambda gamma, x: (x + gamma * c) / (1.0 + gamma),
        space=c.space,
        value=lambda x: 0.5 * norm(x - c) ** 2,
        gradient=lambda x: x - c,
        lipschitz=1.0,
        conjugate_prox=lambda gamma, y: (y - gamma * c) / (1.0 + gamma),
        label="sqdist{c}",
    )


def half_sq_distance_set(project: Callable[[Vector], Vector], space: Space) -> ProxFunction:
    """``0.5 d_C^2``; gradient ``id - P_C`` and prox ``x + gamma/(1+gamma)(P_C x - x)``.

    The conjugate is ``sigma_C + 0.5||.||^2``; its prox follows from Moreau
    and is not duplicated here.
    """
    return ProxFunction(
        prox=lambda gamma, x: x + (gamma / (1.0 + gamma)) * (project(x) - x),
        space=space,
        value=lambda x: 0.5 * norm(x - project(x)) ** 2,
        gradient=lambda x: distance_sq_gradient(project, x),
        lipschitz=1.0,
        label="sqdist[C]",
    )
