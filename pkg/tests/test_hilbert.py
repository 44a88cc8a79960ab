import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from strongsplit import sfp
from strongsplit.errors import DimensionError, EstimateFailed
from strongsplit.hilbert import (
    LinearMap,
    axpby,
    coordinate,
    grid,
    identity_map,
    inner,
    matrix_map,
    norm,
    operator_norm_estimate,
    product,
    zero_map,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False).filter(
    lambda v: v == 0 or abs(v) > 1e-100
)


def vec_pair(dim):
    return st.tuples(arrays(float, dim, elements=finite), arrays(float, dim, elements=finite))


# -- spaces ---------------------------------------------------------------------------

def test_grid_weights_sum_to_length():
    for n in (2, 3, 17, 4096):
        s = grid(0.0, 2 * math.pi, n)
        assert np.all(s.weights > 0)
        assert abs(s.weights.sum() - 2 * math.pi) <= 1e-12 * 2 * math.pi


def test_product_dimension():
    s = product(coordinate(2), grid(0, 1, 5), coordinate(1))
    assert s.dim == 8


def test_vector_length_and_finiteness():
    s = coordinate(3)
    with pytest.raises(DimensionError):
        s.element([1.0, 2.0])
    with pytest.raises(ValueError):
        s.element([1.0, math.nan, 0.0])


# -- inner ------------------------------------------------------------------------------

def test_inner_orthogonal_basis():
    s = coordinate(2)
    assert inner(s.element([1, 0]), s.element([0, 1])) == 0.0


def test_inner_grid_sine():
    s = grid(0.0, 2 * math.pi, 4096)
    x = s.sample(np.sin)
    assert abs(inner(x, x) - math.pi) <= 1e-4


def test_inner_product_blocks():
    s = product(coordinate(2), coordinate(1))
    x = s.join([s.components[0].element([1, 0]), s.components[1].element([2])])
    y = s.join([s.components[0].element([1, 0]), s.components[1].element([3])])
    assert inner(x, y) == 7.0


def test_inner_space_mismatch():
    with pytest.raises(DimensionError):
        inner(coordinate(2).zero(), coordinate(3).zero())
    with pytest.raises(DimensionError):
        inner(coordinate(4).zero(), grid(0, 1, 4).zero())


@settings(max_examples=100, deadline=None)
@given(vec_pair(5))
def test_inner_symmetric_positive(pair):
    s = coordinate(5)
    x, y = s.element(pair[0]), s.element(pair[1])
    assert inner(x, y) == inner(y, x)
    assert inner(x, x) >= 0
    assert (inner(x, x) == 0) == (not np.any(pair[0]))


@settings(max_examples=100, deadline=None)
@given(vec_pair(7))
def test_cauchy_schwarz_grid(pair):
    s = grid(0.0, 1.0, 7)
    x, y = s.element(pair[0]), s.element(pair[1])
    lhs = inner(x, y) ** 2
    rhs = inner(x, x) * inner(y, y)
    assert lhs <= rhs * (1 + 1e-12) + 1e-12


def test_trapezoid_second_order():
    # <x, y> for affine x, y is a quadratic integrand: error ~ c h^2
    def err(n):
        s = grid(0.0, 2.0, n)
        x = s.sample(lambda t: 1 + 2 * t)
        y = s.sample(lambda t: 3 - t)
        exact = 32.0 / 3.0  # int_0^2 (1+2t)(3-t) dt
        return abs(inner(x, y) - exact)

    e1, e2 = err(101), err(201)
    assert e1 > 0
    assert 3.5 < e1 / e2 < 4.5


# -- axpby ------------------------------------------------------------------------------

def test_axpby_examples():
    s = coordinate(2)
    x, y = s.element([1, 1]), s.element([1, 0])
    np.testing.assert_array_equal(axpby(1, x, 0, y).values, x.values)
    np.testing.assert_array_equal(axpby(0, x, 0, y).values, [0, 0])
    np.testing.assert_array_equal(axpby(2, x, -1, y).values, [1, 2])
    with pytest.raises(DimensionError):
        axpby(1, x, 1, coordinate(3).zero())


# -- operator norm ------------------------------------------------------------------------

def test_norm_identity():
    assert abs(operator_norm_estimate(identity_map(coordinate(3))) - 1.0) <= 1e-8


def test_norm_diagonal():
    L = matrix_map(np.diag([3.0, 1.0]), coordinate(2))
    assert abs(operator_norm_estimate(L) - 3.0) <= 3e-8


def test_norm_sfp_operator():
    inst = sfp.make_instance(4096)
    est = operator_norm_estimate(inst.L)
    exact = math.sqrt(16 * math.pi ** 4 / 3)
    assert abs(est - exact) <= 1e-3 * exact


def test_norm_constant_attains_bound():
    # x = (2 pi)^{-1/2} has unit norm and ||Lx||^2 = 16 pi^4 / 3 analytically
    inst = sfp.make_instance(4096)
    x = inst.space.constant((2 * math.pi) ** -0.5)
    assert abs(norm(x) - 1) < 1e-12
    assert abs(norm(inst.L(x)) ** 2 / sfp.NORM_SQUARE - 1) < 1e-6


def test_norm_estimate_failure():
    theta = 1e-3
    M = np.array([[1.0, 0.0], [0.0, 1.0 - theta]])
    with pytest.raises(EstimateFailed) as info:
        operator_norm_estimate(matrix_map(M, coordinate(2)), tol=1e-14, max_iter=3)
    assert info.value.estimate > 0
    assert info.value.iterate is not None


def test_norm_null_start_falls_back():
    # all-ones is in the kernel; fallback random start still finds ||L|| = 1
    M = np.array([[1.0, -1.0]]) / math.sqrt(2)
    L = matrix_map(M, coordinate(2), coordinate(1))
    assert abs(operator_norm_estimate(L) - 1.0) < 1e-8


def test_norm_bound_takes_precedence():
    s = coordinate(2)
    L = LinearMap(lambda x: 2.0 * x, lambda y: 2.0 * y, s, s, norm_bound=2.5)
    assert L.norm_squared() == 6.25
    assert abs(zero_map(s).norm_squared()) == 0.0


# -- adjoints -----------------------------------------------------------------------------

def _adjoint_gap(L, rng):
    x = L.domain.element(rng.standard_normal(L.domain.dim))
    y = L.codomain.element(rng.standard_normal(L.codomain.dim))
    return abs(inner(L(x), y) - inner(x, L.adjoint(y))), norm(x) * norm(y)


@pytest.mark.parametrize("make", [
    lambda: identity_map(grid(0, 1, 9)),
    lambda: zero_map(coordinate(3), coordinate(2)),
    lambda: matrix_map(np.arange(12.0).reshape(4, 3), coordinate(3), coordinate(4)),
    lambda: matrix_map(np.arange(12.0).reshape(4, 3), grid(0, 1, 3), grid(0, 2, 4)),
    lambda: sfp.make_instance(512).L,
])
def test_adjoint_identity(make):
    L = make()
    rng = np.random.default_rng(0)
    for _ in range(50):
        gap, scale = _adjoint_gap(L, rng)
        assert gap <= 1e-8 * (1 + scale)
