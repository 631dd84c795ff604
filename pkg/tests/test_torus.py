import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hnncalc.torus import TorusAlgebra, monomial_embedding, monomial_expectation, parse_alpha, torus_multiply

T7 = TorusAlgebra("1/7")
TS = TorusAlgebra(math.sqrt(2) - 1)


def clock_shift(q: int, p: int = 1):
    """q x q unitaries with U V = e^{2 pi i p/q} V U."""
    w = cmath.exp(2j * math.pi * p / q)
    U = np.diag([w**k for k in range(q)])
    V = np.roll(np.eye(q), 1, axis=0)
    assert np.allclose(U @ V, w * V @ U)
    return U, V


def rep(x, U, V):
    q = U.shape[0]
    out = np.zeros((q, q), dtype=complex)
    for (n, m), c in x.terms.items():
        out += c * np.linalg.matrix_power(U, n % q) @ np.linalg.matrix_power(V, m % q)
    return out


def test_parse_alpha():
    assert parse_alpha("1/7") == Fraction(1, 7)
    assert parse_alpha([2, 14]) == Fraction(1, 7)
    assert isinstance(parse_alpha(0.41421356237309503), float)
    assert TorusAlgebra("8/7").alpha == Fraction(1, 7)


def test_phase_law_examples():
    for T in (T7, TS):
        u, v = T.monomial(1, 0), T.monomial(0, 1)
        w = cmath.exp(2j * math.pi * float(T.alpha))
        assert torus_multiply(u, v) == T.monomial(1, 1)
        assert torus_multiply(v, u).isclose(T.monomial(1, 1) * (1 / w), 1e-12)
        uv = u * v
        assert (uv * uv).isclose(T.monomial(2, 2) * (1 / w), 1e-12)
        # u v = e^{2 pi i alpha} v u
        assert (u * v).isclose(w * (v * u), 1e-12)


def test_exact_phases_are_periodic():
    assert T7.phase(7) == 1
    assert T7.phase(3) == T7.phase(10) == T7.phase(-4)
    assert T7.phase(0) == 1


def test_product_matches_clock_shift_representation():
    U, V = clock_shift(7)
    rng = np.random.default_rng(1)
    for _ in range(50):
        x, y = T7.random_element(rng), T7.random_element(rng)
        assert np.allclose(rep(x * y, U, V), rep(x, U, V) @ rep(y, U, V), atol=1e-10)
        assert np.allclose(rep(x.adjoint(), U, V), rep(x, U, V).conj().T, atol=1e-10)


def test_power_phase_matches_repeated_product():
    for T in (T7, TS):
        for gen in ((1, 1), (2, 1), (1, -3), (0, 1)):
            g = T.monomial(*gen)
            acc = T.one()
            for k in range(1, 6):
                acc = acc * g
                assert acc.isclose(T.power_phase(gen, k) * T.monomial(k * gen[0], k * gen[1]), 1e-12)
            inv = g.adjoint()
            assert inv.isclose(T.power_phase(gen, -1) * T.monomial(-gen[0], -gen[1]), 1e-12)


def test_monomial_expectation_and_embedding():
    E = monomial_expectation(T7, (1, 0))
    assert E(T7.monomial(3, 0)) == T7.monomial(3, 0)
    assert E(T7.monomial(3, 1)).is_zero()
    th = monomial_embedding(T7, (1, 0), (0, 1))
    assert th(T7.monomial(2, 0)) == T7.monomial(0, 2)
    assert th.inverse(T7.monomial(0, -1)) == T7.monomial(-1, 0)
    # the embedding is multiplicative onto a twisted monomial subalgebra
    th2 = monomial_embedding(T7, (1, 0), (1, 1))
    for j in range(-3, 4):
        for k in range(-3, 4):
            a, b = T7.monomial(j, 0), T7.monomial(k, 0)
            assert th2(a * b).isclose(th2(a) * th2(b), 1e-12)
    with pytest.raises(ValueError):
        monomial_expectation(T7, (2, 2))


def test_trace_is_kronecker():
    tau = T7.trace_state()
    for n in range(-3, 4):
        for m in range(-3, 4):
            assert tau(T7.monomial(n, m)) == (1.0 if n == m == 0 else 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_trace_tracial_and_positive(seed, exact):
    T = T7 if exact else TS
    tau = T.trace_state()
    rng = np.random.default_rng(seed)
    x, y = T.random_element(rng, 4), T.random_element(rng, 4)
    assert abs(tau(x * y) - tau(y * x)) <= 1e-12 * max(1.0, x.norm1() * y.norm1())
    p = tau(x.adjoint() * x)
    assert p.real >= -1e-12 and abs(p.imag) <= 1e-12 * max(1.0, p.real)
