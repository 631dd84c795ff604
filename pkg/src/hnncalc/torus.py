"""Rotation algebra (noncommutative torus) generated by unitaries u, v.

Basis symbols are exponent pairs ``(n, m)`` standing for ``u^n v^m``, with
``u v = e^{2 pi i alpha} v u``.  Moving ``v^{m1}`` past ``u^{n2}`` costs the
phase ``e^{-2 pi i alpha m1 n2}``.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .algebra import AlgebraElement, Backend, ConditionalExpectation, Embedding, State

Monomial = tuple[int, int]


def parse_alpha(value) -> Fraction | float:
    """``"1/7"`` or ``[1, 7]`` -> exact Fraction; plain floats stay floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (list, tuple)):
        p, q = value
        return Fraction(int(p), int(q))
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


class TorusAlgebra(Backend):
    zero_tol = 1e-12

    def __init__(self, alpha):
        alpha = parse_alpha(alpha)
        alpha = alpha - math.floor(alpha)
        self.alpha = alpha
        self.exact = isinstance(alpha, Fraction)
        self.backend_id = f"torus:{alpha}"
        self._phase = lru_cache(maxsize=4096)(self._phase_uncached)

    def _phase_uncached(self, k: int) -> complex:
        if self.exact:
            # reduce k*alpha mod 1 exactly so equal angles give identical floats
            frac = (k * self.alpha) % 1
            q = frac.denominator
            p = frac.numerator
            if p == 0:
                return 1 + 0j
            if 4 * p == q:
                return 1j
            if 2 * p == q:
                return -1 + 0j
            if 4 * p == 3 * q:
                return -1j
            return cmath.exp(2j * math.pi * p / q)
        return cmath.exp(2j * math.pi * ((k * self.alpha) % 1.0))

    def phase(self, k: int) -> complex:
        """``e^{2 pi i alpha k}``."""
        return self._phase(k)

    def one(self) -> AlgebraElement:
        return AlgebraElement(self, {(0, 0): 1})

    def mul_basis(self, s, t):
        n1, m1 = s
        n2, m2 = t
        return self.phase(-m1 * n2), (n1 + n2, m1 + m2)

    def adjoint_basis(self, s):
        n, m = s
        # (u^n v^m)* = v^-m u^-n
        return self.phase(-m * n), (-n, -m)

    def sort_key(self, s):
        return (abs(s[0]) + abs(s[1]), s)

    def format_symbol(self, s) -> str:
        n, m = s
        parts = []
        if n:
            parts.append("u" if n == 1 else f"u^{n}")
        if m:
            parts.append("v" if m == 1 else f"v^{m}")
        return "*".join(parts) or "1"

    def default_bindings(self):
        return {"u": self.basis_element((1, 0)), "v": self.basis_element((0, 1))}

    def monomial(self, n: int, m: int) -> AlgebraElement:
        return self.basis_element((n, m))

    def random_element(self, rng: np.random.Generator, n_terms: int = 3) -> AlgebraElement:
        terms = {}
        for _ in range(n_terms):
            s = (int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))
            terms[s] = terms.get(s, 0) + complex(rng.normal(), rng.normal())
        return AlgebraElement(self, terms)

    def trace_state(self) -> State:
        return State.from_symbol_values("tau_alpha", self, lambda s: 1.0 if s == (0, 0) else 0.0)

    def power_phase(self, gen: Monomial, k: int) -> complex:
        """Phase c with ``(u^p v^q)^k = c * u^{kp} v^{kq}``."""
        p, q = gen
        return self.phase(-p * q * (k * (k - 1) // 2))


def _primitive(gen: Monomial) -> None:
    p, q = gen
    if math.gcd(p, q) != 1:
        raise ValueError(f"monomial generator {gen} must be primitive (gcd 1)")


def monomial_expectation(algebra: TorusAlgebra, gen: Monomial, name: str | None = None) -> ConditionalExpectation:
    """Trace-preserving expectation onto the subalgebra generated by ``u^p v^q``."""
    _primitive(gen)
    p, q = gen

    def keep(s):
        n, m = s
        return n * q - m * p == 0

    return ConditionalExpectation.from_symbol_filter(name or f"E<{algebra.format_symbol(gen)}>", algebra, keep)


def monomial_embedding(algebra: TorusAlgebra, source: Monomial, target: Monomial, name: str = "theta") -> Embedding:
    """Isomorphism of generated subalgebras sending ``source^k`` to ``target^k``."""
    _primitive(source)
    _primitive(target)

    def mapper(src, dst):
        def fn(s):
            n, m = s
            p, q = src
            if n * q - m * p != 0:
                return None
            k = n // p if p else m // q
            # s = src^k / c_src(k)  ->  dst^k / c_src(k) = c_dst(k)/c_src(k) * (k dst)
            c = algebra.power_phase(dst, k) / algebra.power_phase(src, k)
            return c, (k * dst[0], k * dst[1])

        return fn

    def sample(rng):
        terms = {}
        for _ in range(3):
            k = int(rng.integers(-3, 4))
            terms[(k * source[0], k * source[1])] = complex(rng.normal(), rng.normal())
        return AlgebraElement(algebra, terms)

    return Embedding.from_symbol_maps(name, algebra, mapper(source, target), mapper(target, source), sample)


def torus_multiply(p: AlgebraElement, q: AlgebraElement) -> AlgebraElement:
    if not isinstance(p.backend, TorusAlgebra):
        raise TypeError("torus_multiply needs rotation-algebra elements")
    return p * q
