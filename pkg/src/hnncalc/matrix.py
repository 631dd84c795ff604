"""Finite-dimensional multi-matrix algebras and their modular calculus.

The algebra ``Mat(d1) + ... + Mat(dk)`` uses matrix units ``(b, i, j)`` as
basis.  States are given by block-diagonal density matrices, and the modular
group of ``phi = Tr(h .)`` is ``x -> h^{it} x h^{-it}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .algebra import (
    AlgebraElement,
    Backend,
    ConditionalExpectation,
    Embedding,
    NotAnExpectation,
    NotInDomain,
    State,
)

EIG_FLOOR = 1e-12
MAX_DIM = 4096


class MultiMatrixAlgebra(Backend):
    zero_tol = 1e-12

    def __init__(self, blocks: Sequence[int]):
        blocks = tuple(int(d) for d in blocks)
        if not blocks or any(d < 1 for d in blocks):
            raise ValueError(f"block dimensions must be >= 1, got {blocks}")
        if sum(d * d for d in blocks) > MAX_DIM:
            raise ValueError("algebra exceeds the configured dimension cap")
        self.blocks = blocks
        self.backend_id = "matrix:" + "+".join(f"M{d}" for d in blocks)
        self.offsets = np.cumsum([0] + [d * d for d in blocks])
        self.dim = int(self.offsets[-1])

    def one(self) -> AlgebraElement:
        return AlgebraElement(self, {(b, i, i): 1 for b, d in enumerate(self.blocks) for i in range(d)})

    def mul_basis(self, s, t):
        if s[0] == t[0] and s[2] == t[1]:
            return 1, (s[0], s[1], t[2])
        return None

    def adjoint_basis(self, s):
        return 1, (s[0], s[2], s[1])

    def format_symbol(self, s) -> str:
        return f"E{s[0]}_{s[1]}_{s[2]}"

    def default_bindings(self):
        return {self.format_symbol(s): self.basis_element(s) for s in self.symbols()}

    def symbols(self):
        return [(b, i, j) for b, d in enumerate(self.blocks) for i in range(d) for j in range(d)]

    # -- dense conversions --------------------------------------------------

    def to_blocks(self, x: AlgebraElement) -> list[np.ndarray]:
        out = [np.zeros((d, d), dtype=complex) for d in self.blocks]
        for (b, i, j), c in x.terms.items():
            out[b][i, j] += c
        return out

    def from_blocks(self, blocks: Sequence[np.ndarray]) -> AlgebraElement:
        terms = {}
        for b, m in enumerate(blocks):
            m = np.asarray(m, dtype=complex)
            if m.shape != (self.blocks[b],) * 2:
                raise ValueError(f"block {b} has shape {m.shape}, expected {(self.blocks[b],) * 2}")
            for (i, j), c in np.ndenumerate(m):
                terms[(b, i, j)] = c
        return AlgebraElement(self, terms)

    def to_vec(self, x: AlgebraElement) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        for (b, i, j), c in x.terms.items():
            v[self.offsets[b] + i * self.blocks[b] + j] += c
        return v

    def from_vec(self, v: np.ndarray) -> AlgebraElement:
        blocks = [
            v[self.offsets[b] : self.offsets[b + 1]].reshape(d, d) for b, d in enumerate(self.blocks)
        ]
        return self.from_blocks(blocks)

    def random_element(self, rng: np.random.Generator, n_terms: int = 3) -> AlgebraElement:
        return self.from_blocks(
            [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for d in self.blocks]
        )


def _blockwise_power(evals: list[np.ndarray], evecs: list[np.ndarray], s: complex) -> list[np.ndarray]:
    # lambda^s = exp(s ln lambda)
    return [(U * np.exp(s * np.log(lam))) @ U.conj().T for lam, U in zip(evals, evecs)]


@dataclass(frozen=True, eq=False)
class DensityState:
    """Faithful state ``phi(x) = sum_b Tr(h_b x_b)``."""

    algebra: MultiMatrixAlgebra
    density: tuple[np.ndarray, ...]

    def __post_init__(self):
        dens = tuple(np.asarray(h, dtype=complex) for h in self.density)
        if len(dens) != len(self.algebra.blocks):
            raise ValueError("one density block per algebra block required")
        for h, d in zip(dens, self.algebra.blocks):
            if h.shape != (d, d):
                raise ValueError(f"density block shape {h.shape} != {(d, d)}")
            if not np.allclose(h, h.conj().T, atol=1e-12):
                raise ValueError("density must be Hermitian")
        total = sum(np.trace(h) for h in dens)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"density must have total trace 1, got {total}")
        object.__setattr__(self, "density", dens)
        if min(float(np.min(lam)) for lam in self.modular.evals) <= EIG_FLOOR:
            raise ValueError("density has an eigenvalue below 1e-12: state is not faithful")

    @classmethod
    def normalized(cls, algebra: MultiMatrixAlgebra, blocks: Sequence[np.ndarray]) -> DensityState:
        blocks = [np.asarray(h, dtype=complex) for h in blocks]
        blocks = [(h + h.conj().T) / 2 for h in blocks]
        total = sum(np.trace(h).real for h in blocks)
        return cls(algebra, tuple(h / total for h in blocks))

    @classmethod
    def tracial(cls, algebra: MultiMatrixAlgebra, weights: Sequence[float] | None = None) -> DensityState:
        """Block-weighted trace; equal weight per matrix unit by default."""
        blocks = algebra.blocks
        if weights is None:
            weights = [d / sum(blocks) for d in blocks]
        return cls.normalized(algebra, [w / d * np.eye(d) for w, d in zip(weights, blocks)])

    @classmethod
    def from_functional(cls, algebra: MultiMatrixAlgebra, phi: State) -> DensityState:
        """Recover the density of a state on the algebra: ``h[j, i] = phi(e_ij)``."""
        blocks = []
        for b, d in enumerate(algebra.blocks):
            h = np.zeros((d, d), dtype=complex)
            for i in range(d):
                for j in range(d):
                    h[j, i] = phi(algebra.basis_element((b, i, j)))
            blocks.append(h)
        return cls.normalized(algebra, blocks)

    def __call__(self, x: AlgebraElement) -> complex:
        return complex(sum(np.sum(h.T * xb) for h, xb in zip(self.density, self.algebra.to_blocks(x))))

    def as_state(self, name: str = "phi") -> State:
        return State(name, self.algebra, self)

    @cached_property
    def modular(self) -> ModularData:
        return ModularData(self)


@dataclass(frozen=True, eq=False)
class ModularData:
    state: DensityState
    evals: list[np.ndarray] = field(init=False)
    evecs: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        evals, evecs = [], []
        for h in self.state.density:
            lam, U = np.linalg.eigh(h)
            evals.append(lam)
            evecs.append(U)
        object.__setattr__(self, "evals", evals)
        object.__setattr__(self, "evecs", evecs)
        for h, lam, U in zip(self.state.density, evals, evecs):
            if np.linalg.norm(h - (U * lam) @ U.conj().T) > 1e-10:
                raise ValueError("eigendecomposition failed to reconstruct the density")

    def power(self, s: complex) -> list[np.ndarray]:
        """Blockwise ``h^s``."""
        return _blockwise_power(self.evals, self.evecs, s)


def modular_auto(phi: DensityState, t: float, x: AlgebraElement) -> AlgebraElement:
    """``sigma_t^phi(x) = h^{it} x h^{-it}``."""
    alg = phi.algebra
    hp = phi.modular.power(1j * t)
    hm = phi.modular.power(-1j * t)
    return alg.from_blocks([a @ xb @ c for a, xb, c in zip(hp, alg.to_blocks(x), hm)])


def connes_cocycle(phi: DensityState, psi: DensityState, t: float) -> AlgebraElement:
    """``[D phi : D psi]_t = h_phi^{it} h_psi^{-it}``."""
    if phi.algebra is not psi.algebra:
        raise ValueError("states live on different algebras")
    a = phi.modular.power(1j * t)
    c = psi.modular.power(-1j * t)
    return phi.algebra.from_blocks([x @ y for x, y in zip(a, c)])


def _span_residual(basis: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(basis, v, rcond=None)
    return coef, float(np.linalg.norm(basis @ coef - v))


def gns_expectation(
    algebra: MultiMatrixAlgebra,
    image: Sequence[AlgebraElement],
    phi: DensityState,
    name: str = "E",
    seed: int = 0,
    trials: int = 50,
    tol: float = 1e-9,
) -> ConditionalExpectation:
    """The phi-orthogonal projection onto span(image), if it is an expectation.

    Raises :class:`NotAnExpectation` when the projection is not a bimodule
    map over the subalgebra (the subalgebra is not invariant under the
    modular group of ``phi``).
    """
    B = np.column_stack([algebra.to_vec(b) for b in image])
    one = algebra.to_vec(algebra.one())
    if _span_residual(B, one)[1] > 1e-9:
        raise ValueError(f"{name}: subalgebra does not contain the unit")
    for b in image:
        if _span_residual(B, algebra.to_vec(b.adjoint()))[1] > 1e-9:
            raise ValueError(f"{name}: subalgebra is not *-closed")
        for c in image:
            if _span_residual(B, algebra.to_vec(b * c))[1] > 1e-9:
                raise ValueError(f"{name}: subalgebra is not closed under products")
    # <b, x> = phi(b* x) = sum_b Tr(h b* x): row vector vec((h b*)^T)
    rows = []
    for b in image:
        hb = [h @ m.conj().T for h, m in zip(phi.density, algebra.to_blocks(b))]
        rows.append(np.concatenate([m.T.reshape(-1) for m in hb]))
    A = np.array(rows)
    G = A @ B
    P = B @ np.linalg.solve(G, A)

    def action(x: AlgebraElement) -> AlgebraElement:
        return algebra.from_vec(P @ algebra.to_vec(x))

    def contains(x: AlgebraElement) -> bool:
        v = algebra.to_vec(x)
        return float(np.linalg.norm(P @ v - v)) <= tol * max(1.0, float(np.linalg.norm(v)))

    E = ConditionalExpectation(name, algebra, action, contains)
    rng = np.random.default_rng(seed)
    dim = B.shape[1]
    for _ in range(trials):
        d1 = algebra.from_vec(B @ (rng.normal(size=dim) + 1j * rng.normal(size=dim)))
        d2 = algebra.from_vec(B @ (rng.normal(size=dim) + 1j * rng.normal(size=dim)))
        x = algebra.random_element(rng)
        lhs = algebra.to_vec(E(d1 * x * d2))
        rhs = algebra.to_vec(d1 * E(x) * d2)
        scale = max(1.0, float(np.linalg.norm(rhs)))
        if np.linalg.norm(lhs - rhs) > tol * scale:
            raise NotAnExpectation(
                f"{name}: phi-orthogonal projection is not a bimodule map "
                "(subalgebra not invariant under the modular group of phi)"
            )
    return E


def linear_embedding(
    algebra: MultiMatrixAlgebra,
    domain: Sequence[AlgebraElement],
    images: Sequence[AlgebraElement],
    name: str = "theta",
) -> Embedding:
    """Linear extension of ``domain[k] -> images[k]`` with inverse on the image."""
    if len(domain) != len(images):
        raise ValueError("domain and image bases differ in length")
    Bd = np.column_stack([algebra.to_vec(b) for b in domain])
    Bi = np.column_stack([algebra.to_vec(b) for b in images])

    def transfer(src, dst, label):
        def apply(x: AlgebraElement) -> AlgebraElement:
            v = algebra.to_vec(x)
            coef, res = _span_residual(src, v)
            if res > 1e-9 * max(1.0, float(np.linalg.norm(v))):
                raise NotInDomain(f"{name}{label}: element outside the domain (residual {res:.2e})")
            return algebra.from_vec(dst @ coef)

        return apply

    def sample(rng):
        k = Bd.shape[1]
        return algebra.from_vec(Bd @ (rng.normal(size=k) + 1j * rng.normal(size=k)))

    return Embedding(name, algebra, transfer(Bd, Bi, ""), transfer(Bi, Bd, "^-1"), sample)
