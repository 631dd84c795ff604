import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm, logm

from hnncalc.algebra import NotAnExpectation
from hnncalc.matrix import (
    DensityState,
    MultiMatrixAlgebra,
    connes_cocycle,
    gns_expectation,
    modular_auto,
)

M2 = MultiMatrixAlgebra([2])
TS = (0.3, 1.0, -2.5)


def unit(alg, b, i, j):
    return alg.basis_element((b, i, j))


def diag_basis(alg):
    return [unit(alg, 0, i, i) for i in range(alg.blocks[0])]


def random_density(alg, rng):
    blocks = []
    for d in alg.blocks:
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        blocks.append(g @ g.conj().T + 0.1 * np.eye(d))
    return DensityState.normalized(alg, blocks)


def oracle_h_it(h, t):
    return expm(1j * t * logm(h))


def brute_projection(alg, basis, density):
    """Orthogonal projection for <x, y> = Tr(h x* y), built from the full inner-product matrix."""
    dim = alg.dim
    H = np.zeros((dim, dim), dtype=complex)
    e = np.eye(dim)
    mats = [alg.to_blocks(alg.from_vec(e[k])) for k in range(dim)]
    for i in range(dim):
        for j in range(dim):
            H[i, j] = sum(np.trace(h @ a.conj().T @ b) for h, a, b in zip(density.density, mats[i], mats[j]))
    B = np.column_stack([alg.to_vec(b) for b in basis])
    G = B.conj().T @ H @ B
    return B @ np.linalg.solve(G, B.conj().T @ H)


def test_gns_diagonal_trace():
    phi = DensityState.tracial(M2)
    E = gns_expectation(M2, diag_basis(M2), phi)
    x = M2.from_blocks([np.array([[1, 2j], [3, 4 - 1j]])])
    assert E(x).isclose(M2.from_blocks([np.diag([1, 4 - 1j])]), 1e-12)
    P = brute_projection(M2, diag_basis(M2), phi)
    rng = np.random.default_rng(0)
    for _ in range(20):
        y = M2.random_element(rng)
        assert np.allclose(M2.to_vec(E(y)), P @ M2.to_vec(y), atol=1e-12)


def test_gns_matches_brute_force_on_direct_sum():
    alg = MultiMatrixAlgebra([2, 2])
    phi = DensityState.normalized(alg, [np.diag([0.1, 0.3]), np.diag([0.2, 0.4])])
    basis = [alg.from_blocks([np.diag([1, 0]), np.diag([1, 0])]), alg.from_blocks([np.diag([0, 1]), np.diag([0, 1])])]
    E = gns_expectation(alg, basis, phi)
    P = brute_projection(alg, basis, phi)
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = alg.random_element(rng)
        assert np.allclose(alg.to_vec(E(y)), P @ alg.to_vec(y), atol=1e-12)
        assert abs(phi(E(y)) - phi(y)) <= 1e-10


def test_gns_scalars():
    rng = np.random.default_rng(2)
    phi = random_density(M2, rng)
    E = gns_expectation(M2, [M2.one()], phi)
    for _ in range(10):
        x = M2.random_element(rng)
        assert E(x).isclose(phi(x) * M2.one(), 1e-12)


def test_gns_rejects_non_invariant_subalgebra():
    h = np.array([[0.5, 0.2], [0.2, 0.5]])
    phi = DensityState(M2, (h,))
    with pytest.raises(NotAnExpectation):
        gns_expectation(M2, diag_basis(M2), phi)
    # direct check that the projection breaks the bimodule law somewhere on matrix units
    P = brute_projection(M2, diag_basis(M2), phi)

    def E(z):
        return M2.from_vec(P @ M2.to_vec(z))

    worst = 0.0
    for d in diag_basis(M2):
        for i in range(2):
            for j in range(2):
                x = unit(M2, 0, i, j)
                for lhs, rhs in ((E(d * x), d * E(x)), (E(x * d), E(x) * d)):
                    worst = max(worst, float(np.linalg.norm(M2.to_vec(lhs - rhs))))
    assert worst > 1e-3


def test_density_validation():
    with pytest.raises(ValueError):
        DensityState(M2, (np.diag([1.0, 0.0]),))
    with pytest.raises(ValueError):
        DensityState(M2, (np.array([[0.5, 1.0], [0.0, 0.5]]),))
    with pytest.raises(ValueError):
        DensityState(M2, (np.diag([0.4, 0.4]),))


def test_modular_tracial_is_identity():
    phi = DensityState.tracial(M2)
    x = M2.random_element(np.random.default_rng(3))
    for t in TS:
        assert modular_auto(phi, t, x).isclose(x, 1e-12)


@pytest.mark.parametrize("t", TS)
def test_modular_e12(t):
    h = np.diag([1 / 3, 2 / 3])
    phi = DensityState(M2, (h,))
    e12 = unit(M2, 0, 0, 1)
    got = modular_auto(phi, t, e12)
    assert got.isclose((0.5 ** (1j * t)) * e12, 1e-12)
    direct = oracle_h_it(h, t) @ M2.to_blocks(e12)[0] @ oracle_h_it(h, -t)
    assert np.allclose(M2.to_blocks(got)[0], direct, atol=1e-12)


def test_cocycle_trivial_cases():
    rng = np.random.default_rng(4)
    phi, psi = random_density(M2, rng), random_density(M2, rng)
    assert connes_cocycle(phi, phi, 1.7).isclose(M2.one(), 1e-12)
    assert connes_cocycle(phi, psi, 0.0).isclose(M2.one(), 1e-12)


@pytest.mark.parametrize("t", TS)
def test_cocycle_diagonal_formula(t):
    alg = MultiMatrixAlgebra([3])
    lam, mu = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.1, 0.3])
    phi, psi = DensityState(alg, (np.diag(lam),)), DensityState(alg, (np.diag(mu),))
    want = alg.from_blocks([np.diag((lam / mu) ** (1j * t))])
    assert connes_cocycle(phi, psi, t).isclose(want, 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([[2], [3], [2, 2], [1, 2], [2, 1, 1]]))
def test_modular_properties(seed, blocks):
    alg = MultiMatrixAlgebra(blocks)
    rng = np.random.default_rng(seed)
    phi, psi = random_density(alg, rng), random_density(alg, rng)
    x, y = alg.random_element(rng), alg.random_element(rng)
    one = alg.one()
    for t in TS:
        # state invariance and automorphism
        assert abs(phi(modular_auto(phi, t, x)) - phi(x)) <= 1e-10 * max(1.0, x.norm1())
        lhs = modular_auto(phi, t, x * y)
        assert lhs.isclose(modular_auto(phi, t, x) * modular_auto(phi, t, y), 1e-9 * max(1.0, x.norm1() * y.norm1()))
        # group law
        assert modular_auto(phi, t, modular_auto(phi, 0.7, x)).isclose(modular_auto(phi, t + 0.7, x), 1e-9 * max(1.0, x.norm1()))
        # cocycle: unitary, chain rule, independent route
        u = connes_cocycle(phi, psi, t)
        assert (u * u.adjoint()).isclose(one, 1e-10)
        s = -0.45
        chain = u * modular_auto(psi, t, connes_cocycle(phi, psi, s))
        assert connes_cocycle(phi, psi, t + s).isclose(chain, 1e-8)
        direct = [oracle_h_it(hp, t) @ oracle_h_it(hq, -t) for hp, hq in zip(phi.density, psi.density)]
        assert all(np.allclose(a, b, atol=1e-8) for a, b in zip(alg.to_blocks(u), direct))


def test_from_functional_roundtrip():
    alg = MultiMatrixAlgebra([2, 3])
    phi = random_density(alg, np.random.default_rng(5))
    back = DensityState.from_functional(alg, phi.as_state())
    for h1, h2 in zip(phi.density, back.density):
        assert np.allclose(h1, h2, atol=1e-14)
