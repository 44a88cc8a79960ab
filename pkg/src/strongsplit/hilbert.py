"""Real Hilbert spaces at desk scale.

Three kinds of space are supported:

* ``coordinate(d)``: R^d with the Euclidean inner product;
* ``grid(a, b, n)``: functions on [a, b] sampled at ``n`` uniform nodes, with
  the trapezoid-weighted inner product ``sum_k w_k x_k y_k`` standing in for
  the L^2 integral;
* ``product(S1, ..., Sm)``: the orthogonal sum, whose vectors store the
  concatenated blocks of their components.

Vectors are immutable wrappers around a read-only numpy array.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, EstimateFailed

__all__ = [
    "Space",
    "Vector",
    "LinearMap",
    "coordinate",
    "grid",
    "product",
    "inner",
    "norm",
    "axpby",
    "identity_map",
    "zero_map",
    "matrix_map",
    "operator_norm_estimate",
]


@dataclass(frozen=True)
class Space:
    """A finite-dimensional real inner-product space."""

    kind: str
    dim: int
    a: float = 0.0
    b: float = 0.0
    components: tuple = ()

    def __post_init__(self):
        if self.kind not in ("coordinate", "grid", "product"):
            raise DomainError(f"unknown space kind {self.kind!r}")
        if self.dim < 1:
            raise DomainError("space dimension must be positive")
        if self.kind == "grid" and (self.dim < 2 or not self.a < self.b):
            raise DomainError("grid needs n >= 2 nodes on an interval a < b")

    @cached_property
    def weights(self) -> Optional[np.ndarray]:
        """Quadrature weights, or ``None`` for a plain Euclidean space."""
        if self.kind == "coordinate":
            return None
        if self.kind == "grid":
            h = (self.b - self.a) / (self.dim - 1)
            w = np.full(self.dim, h)
            w[0] = w[-1] = h / 2
            w.setflags(write=False)
            return w
        parts = [c.weights for c in self.components]
        if all(p is None for p in parts):
            return None
        w = np.concatenate(
            [np.ones(c.dim) if p is None else p for c, p in zip(self.components, parts)]
        )
        w.setflags(write=False)
        return w

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.kind != "grid":
            raise DomainError("only grid spaces have nodes")
        t = np.linspace(self.a, self.b, self.dim)
        t.setflags(write=False)
        return t

    @cached_property
    def offsets(self) -> tuple:
        if self.kind != "product":
            return (0, self.dim)
        return tuple(np.cumsum([0] + [c.dim for c in self.components]).tolist())

    def element(self, values) -> "Vector":
        return Vector(self, values)

    def zero(self) -> "Vector":
        return Vector(self, np.zeros(self.dim))

    def constant(self, c: float) -> "Vector":
        return Vector(self, np.full(self.dim, float(c)))

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Vector":
        """Evaluate ``fn`` pointwise at the grid nodes."""
        return Vector(self, np.broadcast_to(fn(self.nodes), (self.dim,)))

    def join(self, blocks) -> "Vector":
        """Assemble a product-space vector from its component vectors."""
        if self.kind != "product" or len(blocks) != len(self.components):
            raise DimensionError("block count does not match the product space")
        for blk, comp in zip(blocks, self.components):
            _check(blk.space, comp)
        return Vector(self, np.concatenate([blk.values for blk in blocks]))

    def __repr__(self):
        if self.kind == "coordinate":
            return f"coordinate({self.dim})"
        if self.kind == "grid":
            return f"grid({self.a!r}, {self.b!r}, {self.dim})"
        return "product(" + ", ".join(map(repr, self.components)) + ")"


def coordinate(dim: int) -> Space:
    return Space("coordinate", int(dim))


def grid(a: float, b: float, n: int) -> Space:
    """Uniform grid on [a, b] with trapezoid weights."""
    return Space("grid", int(n), float(a), float(b))


def product(*spaces: Space) -> Space:
    if not spaces:
        raise DomainError("product of zero spaces")
    return Space("product", sum(s.dim for s in spaces), components=tuple(spaces))


def _check(s1: Space, s2: Space):
    if s1 is not s2 and s1 != s2:
        raise DimensionError(f"space mismatch: {s1!r} vs {s2!r}")


class Vector:
    """An element of a :class:`Space`."""

    __slots__ = ("space", "values")

    def __init__(self, space: Space, values):
        arr = np.array(values, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.shape != (space.dim,):
            raise DimensionError(
                f"expected {space.dim} values for {space!r}, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("vector entries must be finite")
        arr.setflags(write=False)
        self.space = space
        self.values = arr

    @classmethod
    def _wrap(cls, space, arr):
        # trusted fast path: arr is freshly computed and has the right shape
        v = cls.__new__(cls)
        arr.setflags(write=False)
        v.space = space
        v.values = arr
        return v

    def blocks(self) -> list:
        """Split a product-space vector into its component vectors."""
        sp = self.space
        if sp.kind != "product":
            return [self]
        off = sp.offsets
        return [
            Vector(c, self.values[off[i]:off[i + 1]])
            for i, c in enumerate(sp.components)
        ]

    def __add__(self, other):
        _check(self.space, other.space)
        return Vector._wrap(self.space, self.values + other.values)

    def __sub__(self, other):
        _check(self.space, other.space)
        return Vector._wrap(self.space, self.values - other.values)

    def __mul__(self, c):
        return Vector._wrap(self.space, float(c) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Vector._wrap(self.space, self.values / float(c))

    def __neg__(self):
        return Vector._wrap(self.space, -self.values)

    def __len__(self):
        return self.space.dim

    def __repr__(self):
        return f"Vector({self.space!r}, {np.array2string(self.values, threshold=8)})"


def inner(x: Vector, y: Vector) -> float:
    """Inner product; trapezoid-weighted on grids, block-summed on products."""
    _check(x.space, y.space)
    w = x.space.weights
    if w is None:
        return float(np.dot(x.values, y.values))
    return float(np.dot(w * x.values, y.values))


def norm(x: Vector) -> float:
    return float(np.sqrt(max(inner(x, x), 0.0)))


def axpby(a: float, x: Vector, b: float, y: Vector) -> Vector:
    """Return ``a*x + b*y``."""
    _check(x.space, y.space)
    return Vector._wrap(x.space, a * x.values + b * y.values)


@dataclass(frozen=True)
class LinearMap:
    """A bounded linear map together with its adjoint.

    ``norm_bound``, when given, is an analytic upper bound on the operator norm
    ``||L||`` (not its square) and is preferred over power iteration wherever a
    step-size certificate needs the norm.
    """

    apply: Callable[[Vector], Vector]
    adjoint: Callable[[Vector], Vector]
    domain: Space
    codomain: Space
    norm_bound: Optional[float] = None
    label: str = "L"

    def __call__(self, x: Vector) -> Vector:
        return self.apply(x)

    def norm_squared(self, tol: float = 1e-10, max_iter: int = 10_000) -> float:
        if self.norm_bound is not None:
            return float(self.norm_bound) ** 2
        return operator_norm_estimate(self, tol, max_iter) ** 2


def identity_map(space: Space) -> LinearMap:
    return LinearMap(lambda x: x, lambda y: y, space, space, 1.0, "id")


def zero_map(domain: Space, codomain: Optional[Space] = None) -> LinearMap:
    codomain = domain if codomain is None else codomain
    return LinearMap(
        lambda x: codomain.zero(), lambda y: domain.zero(), domain, codomain, 0.0, "0"
    )


def matrix_map(matrix, domain: Space, codomain: Optional[Space] = None) -> LinearMap:
    """Linear map given by a dense matrix acting on the stored values.

    The adjoint accounts for quadrature weights: ``L* = W_dom^-1 M^T W_cod``.
    """
    M = np.array(matrix, dtype=float)
    codomain = domain if codomain is None else codomain
    if M.shape != (codomain.dim, domain.dim):
        raise DimensionError(f"matrix shape {M.shape} incompatible with spaces")
    wd, wc = domain.weights, codomain.weights

    def apply(x):
        _check(x.space, domain)
        return Vector._wrap(codomain, M @ x.values)

    def adjoint(y):
        _check(y.space, codomain)
        vals = y.values if wc is None else wc * y.values
        out = M.T @ vals
        return Vector._wrap(domain, out if wd is None else out / wd)

    return LinearMap(apply, adjoint, domain, codomain, None, "matrix")


def operator_norm_estimate(L: LinearMap, tol: float = 1e-8, max_iter: int = 1000) -> float:
    """Estimate ``||L||`` by power iteration on ``L*L``.

    Starts from the all-ones vector; falls back to a fixed-seed random start
    when that vector lies in the null space of ``L``.

    Raises
    ------
    EstimateFailed
        If successive estimates do not agree to relative accuracy ``tol``
        within ``max_iter`` steps. The exception carries the last estimate.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    x = L.domain.constant(1.0)
    if norm(L(x)) == 0.0:
        rng = np.random.default_rng(0)
        x = L.domain.element(rng.standard_normal(L.domain.dim))
        if norm(L(x)) == 0.0:
            raise DomainError("operator appears to be zero")
    x = x / norm(x)
    est = norm(L(x))
    for _ in range(max_iter):
        y = L.adjoint(L(x))
        ny = norm(y)
        if ny == 0.0:
            break
        x = y / ny
        new = norm(L(x))
        if abs(new - est) <= tol * new:
            return new
        est = new
    raise EstimateFailed(
        f"power iteration did not converge in {max_iter} steps", est, x
    )
