"""Elements of an HNN extension ``M = N *_D Theta`` and their normalization.

An element of ``M`` is a finite sum of alternating words

    n_0 u(theta_1)^{e_1} n_1 ... u(theta_l)^{e_l} n_l

with coefficients ``n_j`` in the base algebra ``N``.  Normalization splits
every pinchable junction ``u n u^{-1}`` (or ``u^{-1} n u``) into the part of
``n`` in the relevant subalgebra, which collapses through the relation
``u theta(d) u* = d``, and the part in the kernel of the expectation, which
stays as a reduced junction.  The canonical expectation onto ``N`` then
keeps only the length-0 words, since reduced words of positive length have
zero expectation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import (
    AlgebraElement,
    Backend,
    ConditionalExpectation,
    Embedding,
    State,
    adjoint as base_adjoint,
    check_embedding,
    check_expectation,
    NotAnExpectation,
)

Letter = tuple[int, int]  # (theta index, exponent +1/-1)

DEFAULT_TERM_CAP = 10**6


class ScenarioMismatch(ValueError):
    pass


class NotPinchable(ValueError):
    pass


class TermCapExceeded(RuntimeError):
    pass


class UnsupportedBackend(ValueError):
    pass


def term_cap() -> int:
    env = os.environ.get("HNN_TERM_CAP")
    return int(env) if env else DEFAULT_TERM_CAP


@dataclass(frozen=True, eq=False)
class Theta:
    name: str
    embedding: Embedding
    expectation: ConditionalExpectation


@dataclass(eq=False)
class Scenario:
    """The datum ``(N, E_D) *_D (Theta, {E_theta(D)})`` plus a reference state on D.

    ``phi`` is a state on D given on elements of N that lie in D.  ``trace`` is
    an optional candidate trace on N for the trace criterion.
    """

    name: str
    base: Backend
    e_d: ConditionalExpectation
    thetas: tuple[Theta, ...]
    phi: State
    trace: State | None = None
    bindings: dict[str, AlgebraElement] = field(default_factory=dict)
    seed: int = 0
    oracle: object | None = None  # groups.Group for group-backed scenarios
    density_data: dict = field(default_factory=dict)
    _modular: object | None = field(default=None, repr=False)

    @property
    def letter_names(self) -> list[str]:
        return [f"t{k + 1}" for k in range(len(self.thetas))]

    def reference_state(self) -> State:
        """``phi o E_D`` as a state on N."""
        return self.phi.compose(self.e_d, "phi∘E_D")

    def theta_state(self, k: int) -> State:
        """``phi o theta^{-1} o E_theta`` as a state on N."""
        th = self.thetas[k]
        return State(
            f"phi∘{th.name}^-1∘E_{th.name}",
            self.base,
            lambda x: self.phi(th.embedding.inverse(th.expectation(x))),
        )

    def validate(self, samples: int = 100) -> None:
        """Load-time validation of all structure maps; raises on failure."""
        rng = np.random.default_rng(self.seed)
        states = [self.reference_state()] + [self.theta_state(k) for k in range(len(self.thetas))]
        failures = check_expectation(self.e_d, states, rng, samples)
        for th in self.thetas:
            failures += check_expectation(th.expectation, states, rng, samples)
        if failures:
            raise NotAnExpectation("; ".join(failures[:5]))
        emb_fail = []
        for th in self.thetas:
            emb_fail += check_embedding(th.embedding, rng, samples)
            for _ in range(10):
                d = th.embedding.sample_domain(rng)
                if not self.e_d(d).isclose(d, self.base.check_tol * max(1.0, d.norm1())):
                    emb_fail.append(f"{th.name}: domain sample not fixed by E_D")
                    break
                td = th.embedding(d)
                if not th.expectation(td).isclose(td, self.base.check_tol * max(1.0, td.norm1())):
                    emb_fail.append(f"{th.name}: image not in range of E_{th.name}")
                    break
        if emb_fail:
            raise ValueError("; ".join(emb_fail[:5]))
        one = self.base.one()
        if abs(self.phi(one) - 1) > 1e-10:
            raise ValueError("reference state is not unital")

    def modular_support(self):
        if self._modular is None:
            from .matrix import MultiMatrixAlgebra

            if isinstance(self.base, MultiMatrixAlgebra):
                self._modular = MatrixModular(self)
            else:
                from .checks import check_trace_hypothesis

                report = check_trace_hypothesis(self, use_reference=True)
                if not report.passed:
                    raise UnsupportedBackend(
                        "modular action on symbolic backends needs a tracial reference state: "
                        + "; ".join(report.failures)
                    )
                self._modular = TracialModular(self)
        return self._modular


class TracialModular:
    """Trivial modular data: the reference state is a trace fixed by every theta."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def sigma(self, t: float, n: AlgebraElement) -> AlgebraElement:
        return n

    def cocycle(self, k: int, t: float) -> AlgebraElement:
        return self.scenario.base.one()


class MatrixModular:
    """Densities of ``phi o E_D`` and ``phi o theta^{-1} o E_theta`` on a matrix base."""

    def __init__(self, scenario: Scenario):
        from .matrix import DensityState

        alg = scenario.base
        self.scenario = scenario
        self.reference = DensityState.from_functional(alg, scenario.reference_state())
        self.theta_states = [
            DensityState.from_functional(alg, scenario.theta_state(k)) for k in range(len(scenario.thetas))
        ]

    def sigma(self, t: float, n: AlgebraElement) -> AlgebraElement:
        from .matrix import modular_auto

        return modular_auto(self.reference, t, n)

    def cocycle(self, k: int, t: float) -> AlgebraElement:
        from .matrix import connes_cocycle

        return connes_cocycle(self.theta_states[k], self.reference, t)


@dataclass(frozen=True, eq=False)
class HnnWord:
    coeffs: tuple[AlgebraElement, ...]
    letters: tuple[Letter, ...] = ()
    marks: frozenset = frozenset()

    def __post_init__(self):
        if len(self.coeffs) != len(self.letters) + 1:
            raise ValueError("a word with l letters needs l + 1 coefficients")
        for _, e in self.letters:
            if e not in (1, -1):
                raise ValueError("letter exponents must be +1 or -1")

    @property
    def length(self) -> int:
        return len(self.letters)

    def is_zero(self) -> bool:
        return any(c.is_zero() for c in self.coeffs)

    def key(self):
        return (self.letters, tuple(c.key() for c in self.coeffs[1:]))

    def is_reduced(self, scenario: Scenario, tol: float | None = None) -> bool:
        """Check the reduced-word condition at every pinchable junction."""
        tol = scenario.base.check_tol if tol is None else tol
        for j in range(1, self.length):
            (k0, e0), (k1, e1) = self.letters[j - 1], self.letters[j]
            if k0 != k1 or e0 == e1:
                continue
            n = self.coeffs[j]
            E = scenario.thetas[k0].expectation if e0 == 1 else scenario.e_d
            if not E(n).isclose(scenario.base.zero(), tol * max(1.0, n.norm1())):
                return False
        return True


def shadow_length(w: HnnWord) -> int:
    """Length of the letter word in the free group on Theta (coefficients ignored)."""
    stack: list[Letter] = []
    for k, e in w.letters:
        if stack and stack[-1] == (k, -e):
            stack.pop()
        else:
            stack.append((k, e))
    return len(stack)


class HnnElement:
    """Finite formal sum of words; words differing only in ``n_0`` are merged."""

    __slots__ = ("scenario", "words")

    def __init__(self, scenario: Scenario, words: Iterable[HnnWord] = ()):
        self.scenario = scenario
        merged: dict = {}
        for w in words:
            if w.coeffs[0].backend is not scenario.base:
                raise ScenarioMismatch("word coefficients live in a different base algebra")
            if w.is_zero():
                continue
            k = w.key()
            if k in merged:
                prev = merged[k]
                merged[k] = HnnWord((prev.coeffs[0] + w.coeffs[0],) + w.coeffs[1:], w.letters, prev.marks & w.marks)
            else:
                merged[k] = w
        self.words = tuple(w for w in merged.values() if not w.is_zero())

    # -- constructors -------------------------------------------------------

    @classmethod
    def base(cls, scenario: Scenario, n: AlgebraElement) -> HnnElement:
        return cls(scenario, [HnnWord((n,))])

    @classmethod
    def scalar(cls, scenario: Scenario, c: complex) -> HnnElement:
        return cls.base(scenario, scenario.base.scalar(c))

    @classmethod
    def letter(cls, scenario: Scenario, k: int, e: int = 1) -> HnnElement:
        one = scenario.base.one()
        return cls(scenario, [HnnWord((one, one), ((k, e),))])

    @classmethod
    def from_letters(cls, scenario: Scenario, letters: Sequence[Letter]) -> HnnElement:
        one = scenario.base.one()
        return cls(scenario, [HnnWord((one,) * (len(letters) + 1), tuple(letters))])

    # -- arithmetic ---------------------------------------------------------

    def _same(self, other: HnnElement) -> None:
        if other.scenario is not self.scenario:
            raise ScenarioMismatch("elements belong to different scenarios")

    def _coerce(self, other) -> HnnElement:
        if isinstance(other, HnnElement):
            self._same(other)
            return other
        if isinstance(other, AlgebraElement):
            return HnnElement.base(self.scenario, other)
        return HnnElement.scalar(self.scenario, complex(other))

    def __add__(self, other):
        other = self._coerce(other)
        return HnnElement(self.scenario, self.words + other.words)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        if isinstance(other, (HnnElement, AlgebraElement)):
            return multiply(self, self._coerce(other))
        c = complex(other)
        return HnnElement(self.scenario, [HnnWord((w.coeffs[0] * c,) + w.coeffs[1:], w.letters, w.marks) for w in self.words])

    def __rmul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self._coerce(other), self)
        return self * other

    def __pow__(self, k: int):
        if k < 0:
            return adjoint(self) ** (-k)
        out = HnnElement.scalar(self.scenario, 1)
        for _ in range(k):
            out = out * self
        return out

    def adjoint(self) -> HnnElement:
        return adjoint(self)

    def is_zero(self) -> bool:
        return not self.words

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __repr__(self):
        return f"HnnElement({format_hnn(self)})"

    def __str__(self):
        return format_hnn(self)


# -- normalization ---------------------------------------------------------------


def _pinchable(letters: Sequence[Letter], j: int) -> bool:
    (k0, e0), (k1, e1) = letters[j - 1], letters[j]
    return k0 == k1 and e0 == -e1


def pinch(scenario: Scenario, w: HnnWord, j: int) -> list[HnnWord]:
    """Split ``w`` at junction ``j`` (coefficient index, 1 <= j < l).

    Returns up to two words summing to ``w`` in M: the collapsed branch
    (length l - 2) and the kernel branch with junction ``j`` marked reduced.
    """
    if not (1 <= j < w.length) or not _pinchable(w.letters, j):
        raise NotPinchable(f"junction {j} is not of the form u n u^-1 or u^-1 n u")
    k, e = w.letters[j - 1]
    th = scenario.thetas[k]
    n = w.coeffs[j]
    if e == 1:
        # u theta(d) u* = d
        inner = th.expectation(n)
        collapsed = th.embedding.inverse(inner) if not inner.is_zero() else inner
    else:
        # u* d u = theta(d)
        inner = scenario.e_d(n)
        collapsed = th.embedding(inner) if not inner.is_zero() else inner
    kernel = n - inner
    out = []
    if not collapsed.is_zero():
        merged = w.coeffs[j - 1] * collapsed * w.coeffs[j + 1]
        coeffs = w.coeffs[: j - 1] + (merged,) + w.coeffs[j + 2 :]
        letters = w.letters[: j - 1] + w.letters[j + 1 :]
        marks = frozenset(i if i < j - 1 else i - 2 for i in w.marks if i < j - 1 or i > j + 1)
        nw = HnnWord(coeffs, letters, marks)
        if not nw.is_zero():
            out.append(nw)
    if not kernel.is_zero():
        coeffs = w.coeffs[:j] + (kernel,) + w.coeffs[j + 1 :]
        out.append(HnnWord(coeffs, w.letters, w.marks | {j}))
    return out


def _next_junction(w: HnnWord, order: str) -> int | None:
    rng = range(1, w.length) if order == "ltr" else range(w.length - 1, 0, -1)
    for j in rng:
        if j not in w.marks and _pinchable(w.letters, j):
            return j
    return None


def normalize(x: HnnElement, order: str = "ltr", cap: int | None = None) -> HnnElement:
    """Rewrite ``x`` as a sum of reduced words and length-0 words.

    ``order`` picks the junction scan direction ("ltr" or "rtl").  Raises
    :class:`TermCapExceeded` if a single input word branches into more than
    ``cap`` words (default from ``HNN_TERM_CAP`` or 10**6).
    """
    if order not in ("ltr", "rtl"):
        raise ValueError("order must be 'ltr' or 'rtl'")
    cap = term_cap() if cap is None else cap
    scenario = x.scenario
    out: list[HnnWord] = []
    for start in x.words:
        produced = 1
        work = [start]
        while work:
            w = work.pop()
            j = _next_junction(w, order)
            if j is None:
                out.append(w)
                continue
            branches = pinch(scenario, w, j)
            produced += len(branches) - 1
            if produced > cap:
                raise TermCapExceeded(
                    f"normalization exceeded the term cap ({cap}); raise HNN_TERM_CAP to continue"
                )
            work.extend(reversed(branches))
    return HnnElement(scenario, out)


def multiply(x: HnnElement, y: HnnElement, order: str = "ltr") -> HnnElement:
    return normalize(concatenate(x, y), order)


def concatenate(x: HnnElement, y: HnnElement) -> HnnElement:
    """Word-by-word product without normalization."""
    if x.scenario is not y.scenario:
        raise ScenarioMismatch("elements belong to different scenarios")
    words = []
    for a in x.words:
        la = a.length
        for b in y.words:
            coeffs = a.coeffs[:-1] + (a.coeffs[-1] * b.coeffs[0],) + b.coeffs[1:]
            marks = a.marks | frozenset(i + la for i in b.marks)
            words.append(HnnWord(coeffs, a.letters + b.letters, marks))
    return HnnElement(x.scenario, words)


def adjoint(x: HnnElement) -> HnnElement:
    words = []
    for w in x.words:
        coeffs = tuple(base_adjoint(c) for c in reversed(w.coeffs))
        letters = tuple((k, -e) for k, e in reversed(w.letters))
        marks = frozenset(w.length - j for j in w.marks)
        words.append(HnnWord(coeffs, letters, marks))
    return HnnElement(x.scenario, words)


def expect_onto_base(x: HnnElement) -> AlgebraElement:
    """Canonical expectation ``E^M_N``: normalize and keep the length-0 part."""
    total = x.scenario.base.zero()
    for w in normalize(x).words:
        if w.length == 0:
            total = total + w.coeffs[0]
    return total


def state_moment(x: HnnElement) -> complex:
    """``phi(E_D(E^M_N(x)))``."""
    s = x.scenario
    return s.phi(s.e_d(expect_onto_base(x)))


def modular_apply(x: HnnElement, t: float) -> HnnElement:
    """Modular automorphism of ``phi o E_D o E^M_N`` applied to ``x``.

    Coefficients go through the modular group of ``phi o E_D`` and each
    ``u(theta)`` picks up the Connes cocycle of ``phi o theta^{-1} o E_theta``
    relative to ``phi o E_D`` on its right.
    """
    s = x.scenario
    support = s.modular_support()
    cocycles = {}
    words = []
    for w in x.words:
        coeffs = [support.sigma(t, c) for c in w.coeffs]
        for i, (k, e) in enumerate(w.letters):
            if k not in cocycles:
                cocycles[k] = support.cocycle(k, t)
            c = cocycles[k]
            if e == 1:
                coeffs[i + 1] = c * coeffs[i + 1]
            else:
                coeffs[i] = coeffs[i] * base_adjoint(c)
        words.append(HnnWord(tuple(coeffs), w.letters))
    return normalize(HnnElement(s, words))


# -- formatting ---------------------------------------------------------------


def format_hnn(x: HnnElement) -> str:
    """Render in the expression language (re-parses to the same element)."""
    from .algebra import format_element

    if x.is_zero():
        return "0"
    names = x.scenario.letter_names
    parts = []
    for w in x.words:
        pieces = []
        for i, c in enumerate(w.coeffs):
            pieces.append(f"({format_element(c)})")
            if i < w.length:
                k, e = w.letters[i]
                pieces.append(names[k] + ("'" if e == -1 else ""))
        parts.append("*".join(pieces))
    return " + ".join(parts)
