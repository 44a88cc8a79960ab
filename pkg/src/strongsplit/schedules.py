"""Relaxation and Tikhonov parameter sequences, and step-size certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import CertificateRejected, DomainError, ScheduleError

__all__ = [
    "ParamSchedules",
    "StepSizeCertificate",
    "DEFAULT_BETA0",
    "make_default_schedules",
    "make_unregularized_schedules",
    "make_custom_schedules",
    "validate_pd_fb_stepsizes",
    "validate_pd_dr_stepsizes",
]

#: Initial Tikhonov parameter. ``1 - 1/(n+1)`` vanishes at n = 0, which the
#: convergence theory forbids; any value in (0, 1/2) keeps the sequence
#: monotone and admissible.
DEFAULT_BETA0 = 0.25


@dataclass(frozen=True)
class ParamSchedules:
    """The sequences ``beta_n`` (Tikhonov) and ``lambda_n`` (relaxation).

    ``strong`` is False for the ``beta_n = 1`` family, which only carries the
    classical weak-convergence guarantee.
    """

    beta: Callable[[int], float]
    lam: Callable[[int], float]
    family_tag: str
    lambda_cap: float
    strong: bool = True
    description: str = ""

    def at(self, n: int, cap: float = math.inf):
        """Return ``(beta_n, lambda_n)`` after checking them against the caps."""
        b = self.beta(n)
        lam = self.lam(n)
        if not 0.0 < b <= 1.0:
            raise ScheduleError(f"beta_{n} = {b} outside (0, 1]")
        if not 0.0 < lam <= min(self.lambda_cap, cap):
            raise ScheduleError(
                f"lambda_{n} = {lam} outside (0, {min(self.lambda_cap, cap)}]"
            )
        return b, lam

    def require_cap(self, cap: float, what: str = "scheme"):
        """Reject schedules whose declared cap exceeds the convergence bound."""
        if self.lambda_cap > cap:
            raise ScheduleError(
                f"schedule lambda cap {self.lambda_cap} exceeds the {what} bound {cap}"
            )


def _check_lambda(lambda_value, lambda_cap):
    if not 0.0 < lambda_cap:
        raise DomainError("lambda_cap must be positive")
    if not 0.0 < lambda_value <= lambda_cap:
        raise DomainError(f"lambda_value {lambda_value} outside (0, {lambda_cap}]")


def make_default_schedules(
    lambda_value: float, lambda_cap: float, beta0: float = DEFAULT_BETA0
) -> ParamSchedules:
    """``beta_0 = beta0``, ``beta_n = 1 - 1/(n+1)`` for n >= 1, constant lambda."""
    _check_lambda(lambda_value, lambda_cap)
    if not 0.0 < beta0 < 0.5:
        raise DomainError("beta0 must lie in (0, 1/2)")
    lam = float(lambda_value)

    def beta(n):
        return beta0 if n == 0 else 1.0 - 1.0 / (n + 1)

    return ParamSchedules(
        beta, lambda n: lam, "default_beta", float(lambda_cap), True,
        f"beta_0={beta0!r}, beta_n=1-1/(n+1), lambda_n={lam!r}",
    )


def make_unregularized_schedules(lambda_value: float, lambda_cap: float) -> ParamSchedules:
    """``beta_n = 1``: the classical relaxed iteration (weak convergence only)."""
    _check_lambda(lambda_value, lambda_cap)
    lam = float(lambda_value)
    return ParamSchedules(
        lambda n: 1.0, lambda n: lam, "constant_beta_one", float(lambda_cap), False,
        f"beta_n=1, lambda_n={lam!r}",
    )


def make_custom_schedules(
    beta: Callable[[int], float],
    lam: Callable[[int], float],
    lambda_cap: float,
    strong: bool = True,
    description: str = "custom",
) -> ParamSchedules:
    """Caller-certified sequences. Bounds are still checked at every step."""
    return ParamSchedules(beta, lam, "custom-certified", float(lambda_cap), strong, description)


@dataclass(frozen=True)
class StepSizeCertificate:
    """Accepted step sizes of a primal-dual scheme plus derived quantities."""

    scheme: str
    tau: float
    sigmas: tuple
    norm_squares: tuple
    product: float
    lambda_cap: float
    mu: float = math.inf
    nus: tuple = ()
    beta: float = math.inf
    rho: float = math.nan
    lhs: float = math.nan

    def summary(self) -> str:
        lines = [
            f"scheme      = {self.scheme}",
            f"tau         = {self.tau!r}",
            f"sigmas      = {list(self.sigmas)!r}",
            f"||L_i||^2   = {list(self.norm_squares)!r}",
            f"tau*sum(sigma_i*||L_i||^2) = {self.product:.6g}",
        ]
        if self.scheme == "pd_fb":
            lines += [
                f"mu          = {self.mu!r}",
                f"nus         = {list(self.nus)!r}",
                f"beta        = {self.beta!r}",
                f"rho         = {self.rho:.6g}",
                f"lhs         = {self.lhs:.6g} >= 1",
            ]
        else:
            lines.append(f"product     = {self.product:.6g} < 4")
        lines.append(f"lambda cap  = {self.lambda_cap:.6g}")
        return "\n".join(lines)


def _common(tau, sigmas, norm_squares):
    sigmas = tuple(float(s) for s in sigmas)
    norm_squares = tuple(float(q) for q in norm_squares)
    if not sigmas or len(sigmas) != len(norm_squares):
        raise DomainError("need one sigma per linear operator")
    if not tau > 0 or any(not s > 0 for s in sigmas):
        raise DomainError("step sizes must be positive")
    if any(not (0 <= q < math.inf) for q in norm_squares):
        raise DomainError("operator norms must be finite and nonnegative")
    product = float(tau) * math.fsum(s * q for s, q in zip(sigmas, norm_squares))
    return float(tau), sigmas, norm_squares, product


def validate_pd_fb_stepsizes(
    tau: float,
    sigmas: Sequence[float],
    norm_squares: Sequence[float],
    mu: float = math.inf,
    nus: Sequence[float] | None = None,
) -> StepSizeCertificate:
    """Certify step sizes for the forward-backward primal-dual scheme.

    Requires ``2 min{1/tau, 1/sigma_i} min{mu, nu_i} (1 - sqrt(P)) >= 1`` with
    ``P = tau sum sigma_i ||L_i||^2 < 1``. ``mu = inf`` encodes an absent
    smooth term and ``nu_i = inf`` a vanishing ``D_i^{-1}``; when every
    constant is infinite the relaxation cap takes its limit value 2.
    """
    tau, sigmas, norm_squares, product = _common(tau, sigmas, norm_squares)
    nus = tuple(float(v) for v in (nus if nus is not None else [math.inf] * len(sigmas)))
    if len(nus) != len(sigmas):
        raise DomainError("need one nu per linear operator")
    if not mu > 0 or any(not v > 0 for v in nus):
        raise DomainError("cocoercivity constants must be positive")
    beta = min((float(mu),) + nus)
    rho = min([1.0 / tau] + [1.0 / s for s in sigmas]) * (1.0 - math.sqrt(product))
    if math.isinf(beta):
        lhs = math.inf if rho > 0 else (0.0 if rho == 0 else -math.inf)
    else:
        lhs = 2.0 * beta * rho
    if product >= 1.0 or not lhs >= 1.0:
        raise CertificateRejected(
            f"2*min(1/tau,1/sigma_i)*min(mu,nu_i)*(1-sqrt({product:.6g})) = {lhs:.6g}"
            " violates >= 1 (requires tau*sum(sigma_i*||L_i||^2) < 1)",
            lhs,
        )
    if math.isinf(beta):
        cap = 2.0
    else:
        cap = (4.0 * beta * rho - 1.0) / (2.0 * beta * rho)
    return StepSizeCertificate(
        "pd_fb", tau, sigmas, norm_squares, product, cap, float(mu), nus, beta, rho, lhs
    )


def validate_pd_dr_stepsizes(
    tau: float, sigmas: Sequence[float], norm_squares: Sequence[float]
) -> StepSizeCertificate:
    """Certify step sizes for the Douglas-Rachford primal-dual scheme.

    Accepts iff ``tau sum sigma_i ||L_i||^2 < 4`` (strict); the relaxation
    cap is then 2.
    """
    tau, sigmas, norm_squares, product = _common(tau, sigmas, norm_squares)
    if not product < 4.0:
        raise CertificateRejected(
            f"tau*sum(sigma_i*||L_i||^2) = {product:.6g} must be < 4", product
        )
    return StepSizeCertificate("pd_dr", tau, sigmas, norm_squares, product, 2.0)
