import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fmscatter.mesh import (LagrangeBasis, MeshError, gauss_legendre, kinetic_matrix, laguerre,
                            laguerre_nodes)


@pytest.mark.parametrize("N", [5, 20, 40])
def test_nodes_match_mpmath(N):
    x = laguerre_nodes(N)
    with mpmath.workdps(40):
        ref = [mpmath.findroot(lambda t: mpmath.laguerre(N, 0, t), mpmath.mpf(v), verify=False) for v in x]
    assert np.allclose(x, np.array(ref, dtype=float), rtol=1e-12)
    assert np.all(np.diff(x) > 0)
    assert np.max(np.abs(laguerre(N, x)[0] / laguerre(N, x)[1])) < 1e-10 * x.max()


@pytest.mark.parametrize("N", [10, 30])
def test_gauss_laguerre_weights(N):
    b = LagrangeBasis(N)
    _, w = np.polynomial.laguerre.laggauss(N)
    assert np.allclose(b.lam * np.exp(-b.nodes), w, rtol=1e-9)


def test_cardinality_and_orthonormality():
    b = LagrangeBasis(20, 0.7)
    F = b.values(b.points)
    assert np.allclose(F, np.diag(1 / np.sqrt(b.weights)), atol=1e-10)
    # regularized functions: exact overlap delta_ij + (-1)^(i-j) / sqrt(x_i x_j),
    # orthonormal only at the Gauss approximation
    r = np.linspace(0.0, 150, 150001)
    V = b.values(r)
    S = np.trapezoid(V[:, :, None] * V[:, None, :], r, axis=0)
    i = np.arange(20)
    sign = (-1.0) ** np.subtract.outer(i, i)
    exact = np.eye(20) + sign / np.sqrt(np.outer(b.nodes, b.nodes))
    assert np.allclose(S, exact, rtol=1e-6, atol=1e-6)


def test_kinetic_matrix_hermitian_and_exact_on_polynomials():
    b = LagrangeBasis(30, 1.0)
    T = kinetic_matrix(b)
    assert np.allclose(T, T.T)
    # f = r^2 exp(-r/2) is in the span; -f'' = -(2 - 2r + r^2/4) exp(-r/2)
    f = b.points**2 * np.exp(-b.points / 2)
    c = np.sqrt(b.weights) * f
    got = (T @ c) / np.sqrt(b.weights)
    want = -(2 - 2 * b.points + b.points**2 / 4) * np.exp(-b.points / 2)
    assert np.allclose(got, want, atol=1e-10)


def test_invalid():
    with pytest.raises(MeshError):
        LagrangeBasis(0)
    with pytest.raises(MeshError):
        LagrangeBasis(5, -1.0)
    with pytest.raises(MeshError):
        gauss_legendre(0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(0, 59))
def test_gauss_legendre_exact_to_degree(order, deg):
    if deg > 2 * order - 1:
        return
    g = gauss_legendre(order)
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert np.dot(g.weights, g.abscissas**deg) == pytest.approx(exact, abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 25), st.floats(0.3, 3.0))
def test_expansion_reproduces_span(N, h):
    b = LagrangeBasis(N, h)
    rng = np.random.default_rng(N)
    c = rng.normal(size=N)
    assert np.allclose(b.expand(c, b.points), c / np.sqrt(b.weights))
