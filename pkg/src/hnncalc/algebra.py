"""Base-algebra contract shared by every backend.

A backend is a unital *-algebra with a distinguished basis in which the
product of two basis symbols is a scalar multiple of a single basis symbol
(or zero).  Group algebras, rotation algebras and matrix algebras (in the
matrix-unit basis) all have this shape, which lets one generic
:class:`AlgebraElement` serve them all.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping

import numpy as np

Symbol = Hashable


class BackendMismatch(ValueError):
    pass


class NotAnExpectation(ValueError):
    """Raised when a candidate conditional expectation fails validation."""


class NotInDomain(ValueError):
    pass


class Backend(ABC):
    """Abstract base algebra with a monomial basis."""

    backend_id: str = "abstract"
    #: coefficients with magnitude at or below this are dropped
    zero_tol: float = 0.0
    #: comparison tolerance used by validation suites
    check_tol: float = 1e-9

    @abstractmethod
    def one(self) -> AlgebraElement: ...

    @abstractmethod
    def mul_basis(self, s: Symbol, t: Symbol) -> tuple[complex, Symbol] | None:
        """Product of two basis symbols as ``(coefficient, symbol)``, or None for zero."""

    @abstractmethod
    def adjoint_basis(self, s: Symbol) -> tuple[complex, Symbol]: ...

    @abstractmethod
    def format_symbol(self, s: Symbol) -> str:
        """Render ``s`` in the expression language (must re-parse via default bindings)."""

    @abstractmethod
    def random_element(self, rng: np.random.Generator, n_terms: int = 3) -> AlgebraElement: ...

    def sort_key(self, s: Symbol):
        return s

    def default_bindings(self) -> dict[str, AlgebraElement]:
        return {}

    def element(self, terms: Mapping[Symbol, complex] | Iterable[tuple[Symbol, complex]]) -> AlgebraElement:
        return AlgebraElement(self, terms)

    def basis_element(self, s: Symbol, coef: complex = 1.0) -> AlgebraElement:
        return AlgebraElement(self, {s: complex(coef)})

    def scalar(self, c: complex) -> AlgebraElement:
        return self.one() * c

    def zero(self) -> AlgebraElement:
        return AlgebraElement(self, {})


class AlgebraElement:
    """Finite linear combination of basis symbols of one backend.

    Instances are treated as immutable; all arithmetic returns new objects.
    """

    __slots__ = ("backend", "terms", "_key")

    def __init__(self, backend: Backend, terms=None):
        self.backend = backend
        tol = backend.zero_tol
        out: dict = {}
        if terms:
            items = terms.items() if isinstance(terms, Mapping) else terms
            for s, c in items:
                out[s] = out.get(s, 0) + c
        self.terms = {s: complex(c) for s, c in out.items() if abs(c) > tol}
        self._key = None

    # -- structure ---------------------------------------------------------

    def _check(self, other: AlgebraElement) -> None:
        if other.backend is not self.backend:
            raise BackendMismatch(
                f"backend mismatch: {self.backend.backend_id} vs {other.backend.backend_id}"
            )

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, s: Symbol) -> complex:
        return self.terms.get(s, 0j)

    def sorted_terms(self) -> list[tuple[Symbol, complex]]:
        key = self.backend.sort_key
        return sorted(self.terms.items(), key=lambda kv: key(kv[0]))

    def key(self) -> tuple:
        """Hashable canonical form (exact coefficients)."""
        if self._key is None:
            self._key = tuple(self.sorted_terms())
        return self._key

    def norm1(self) -> float:
        return sum(abs(c) for c in self.terms.values())

    def isclose(self, other: AlgebraElement | complex, tol: float = 1e-9) -> bool:
        if not isinstance(other, AlgebraElement):
            other = self.backend.scalar(other)
        self._check(other)
        symbols = set(self.terms) | set(other.terms)
        return all(abs(self.coefficient(s) - other.coefficient(s)) <= tol for s in symbols)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            other = self.backend.scalar(other)
        self._check(other)
        terms = dict(self.terms)
        for s, c in other.terms.items():
            terms[s] = terms.get(s, 0) + c
        return AlgebraElement(self.backend, terms)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement(self.backend, {s: -c for s, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, AlgebraElement):
            other = self.backend.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        c = complex(other)
        return AlgebraElement(self.backend, {s: c * x for s, x in self.terms.items()})

    def __rmul__(self, other):
        c = complex(other)
        return AlgebraElement(self.backend, {s: c * x for s, x in self.terms.items()})

    def __pow__(self, k: int):
        if k < 0:
            return adjoint(self) ** (-k)
        out = self.backend.one()
        for _ in range(k):
            out = out * self
        return out

    def adjoint(self) -> AlgebraElement:
        return adjoint(self)

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.backend is other.backend and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"AlgebraElement({format_element(self)})"

    def __str__(self):
        return format_element(self)


def add(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return a + b


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    a._check(b)
    mul = a.backend.mul_basis
    out: dict = {}
    for s, x in a.terms.items():
        for t, y in b.terms.items():
            r = mul(s, t)
            if r is None:
                continue
            c, u = r
            out[u] = out.get(u, 0) + c * x * y
    return AlgebraElement(a.backend, out)


def adjoint(a: AlgebraElement) -> AlgebraElement:
    adj = a.backend.adjoint_basis
    out: dict = {}
    for s, x in a.terms.items():
        c, u = adj(s)
        out[u] = out.get(u, 0) + c * x.conjugate()
    return AlgebraElement(a.backend, out)


def format_complex(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}i"
    sign = "+" if c.imag >= 0 or math.isnan(c.imag) else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}i"


def format_element(a: AlgebraElement) -> str:
    if a.is_zero():
        return "0"
    parts = []
    for s, c in a.sorted_terms():
        sym = a.backend.format_symbol(s)
        parts.append(f"({format_complex(c)})*{sym}")
    return " + ".join(parts)


# -- structure maps ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConditionalExpectation:
    """A linear projection onto a unital *-subalgebra of ``backend``."""

    name: str
    backend: Backend
    action: Callable[[AlgebraElement], AlgebraElement]
    contains: Callable[[AlgebraElement], bool] | None = None

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return self.action(x)

    @classmethod
    def from_symbol_filter(cls, name: str, backend: Backend, keep: Callable[[Symbol], bool]):
        """Expectation that keeps the basis symbols selected by ``keep`` and kills the rest."""

        def action(x: AlgebraElement) -> AlgebraElement:
            return AlgebraElement(backend, {s: c for s, c in x.terms.items() if keep(s)})

        def contains(x: AlgebraElement) -> bool:
            return all(keep(s) for s in x.terms)

        return cls(name, backend, action, contains)


@dataclass(frozen=True, eq=False)
class Embedding:
    """Unital *-isomorphism of a subalgebra D of ``backend`` into ``backend``.

    ``inverse`` is defined on the image only and raises :class:`NotInDomain`
    elsewhere; ``sample_domain`` draws random elements of D.
    """

    name: str
    backend: Backend
    forward: Callable[[AlgebraElement], AlgebraElement]
    inverse: Callable[[AlgebraElement], AlgebraElement]
    sample_domain: Callable[[np.random.Generator], AlgebraElement]

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return self.forward(x)

    @classmethod
    def from_symbol_maps(
        cls,
        name: str,
        backend: Backend,
        forward_symbol: Callable[[Symbol], tuple[complex, Symbol] | None],
        inverse_symbol: Callable[[Symbol], tuple[complex, Symbol] | None],
        sample_domain: Callable[[np.random.Generator], AlgebraElement],
    ):
        def lift(fn, label):
            def apply(x: AlgebraElement) -> AlgebraElement:
                out: dict = {}
                for s, c in x.terms.items():
                    r = fn(s)
                    if r is None:
                        raise NotInDomain(f"{name}{label}: symbol {backend.format_symbol(s)} outside domain")
                    k, u = r
                    out[u] = out.get(u, 0) + k * c
                return AlgebraElement(backend, out)

            return apply

        return cls(name, backend, lift(forward_symbol, ""), lift(inverse_symbol, "^-1"), sample_domain)


@dataclass(frozen=True, eq=False)
class State:
    name: str
    backend: Backend
    action: Callable[[AlgebraElement], complex]

    def __call__(self, x: AlgebraElement) -> complex:
        return complex(self.action(x))

    @classmethod
    def from_symbol_values(cls, name: str, backend: Backend, value: Callable[[Symbol], complex]):
        def action(x: AlgebraElement) -> complex:
            return sum((c * value(s) for s, c in x.terms.items()), 0j)

        return cls(name, backend, action)

    def compose(self, E: ConditionalExpectation, name: str | None = None) -> State:
        return State(name or f"{self.name}∘{E.name}", self.backend, lambda x: self.action(E(x)))


def ce_apply(E: ConditionalExpectation, x: AlgebraElement) -> AlgebraElement:
    if x.backend is not E.backend:
        raise BackendMismatch(f"{E.name} acts on {E.backend.backend_id}, got {x.backend.backend_id}")
    return E(x)


def kernel_part(E: ConditionalExpectation, x: AlgebraElement) -> AlgebraElement:
    """``x - E(x)``, the component of ``x`` killed by ``E``."""
    return x - ce_apply(E, x)


def state_eval(phi: State, x: AlgebraElement) -> complex:
    if x.backend is not phi.backend:
        raise BackendMismatch(f"state {phi.name} lives on {phi.backend.backend_id}")
    return phi(x)


# -- validation suites ---------------------------------------------------------


def check_expectation(
    E: ConditionalExpectation,
    states: Iterable[State],
    rng: np.random.Generator,
    samples: int = 100,
) -> list[str]:
    """Run the idempotence/unit/bimodule/positivity suite; return failure messages."""
    backend = E.backend
    tol = backend.check_tol
    states = list(states)
    failures: list[str] = []
    one = backend.one()
    if not E(one).isclose(one, tol):
        failures.append(f"{E.name}: E(1) != 1")
    for k in range(samples):
        x = backend.random_element(rng)
        ex = E(x)
        if not E(ex).isclose(ex, tol):
            failures.append(f"{E.name}: not idempotent (sample {k})")
        if E.contains is not None and not E.contains(ex):
            failures.append(f"{E.name}: value outside declared range (sample {k})")
        d1 = E(backend.random_element(rng))
        d2 = E(backend.random_element(rng))
        lhs = E(d1 * x * d2)
        rhs = d1 * ex * d2
        scale = max(1.0, d1.norm1() * ex.norm1() * d2.norm1())
        if not lhs.isclose(rhs, tol * scale):
            failures.append(f"{E.name}: bimodule law fails (sample {k})")
        pos = E(adjoint(x) * x)
        for phi in states:
            v = phi(pos)
            if v.real < -tol * max(1.0, x.norm1() ** 2) or abs(v.imag) > tol * max(1.0, x.norm1() ** 2):
                failures.append(f"{E.name}: {phi.name}(E(x*x)) = {v} not positive (sample {k})")
    return failures


def validate_expectation(E: ConditionalExpectation, states, rng, samples: int = 100) -> None:
    failures = check_expectation(E, states, rng, samples)
    if failures:
        raise NotAnExpectation("; ".join(failures[:5]))


def check_embedding(theta: Embedding, rng: np.random.Generator, samples: int = 100) -> list[str]:
    """Sampled unital *-homomorphism and injectivity checks."""
    backend = theta.backend
    tol = backend.check_tol
    failures: list[str] = []
    one = backend.one()
    if not theta(one).isclose(one, tol):
        failures.append(f"{theta.name}: not unital")
    for k in range(samples):
        x = theta.sample_domain(rng)
        y = theta.sample_domain(rng)
        tx, ty = theta(x), theta(y)
        scale = max(1.0, x.norm1() * y.norm1())
        if not theta(x * y).isclose(tx * ty, tol * scale):
            failures.append(f"{theta.name}: not multiplicative (sample {k})")
        if not theta(adjoint(x)).isclose(adjoint(tx), tol * max(1.0, x.norm1())):
            failures.append(f"{theta.name}: not *-preserving (sample {k})")
        if not theta.inverse(tx).isclose(x, tol * max(1.0, x.norm1())):
            failures.append(f"{theta.name}: not injective (sample {k})")
    return failures
