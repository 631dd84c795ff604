"""Verification routines run against a scenario.

Each check returns a :class:`Report`; ``passed`` is False when any
mismatch was found and ``failures`` lists them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, adjoint as base_adjoint
from .engine import (
    HnnElement,
    HnnWord,
    Scenario,
    expect_onto_base,
    modular_apply,
    normalize,
    shadow_length,
    state_moment,
)
from .groups import Group, GroupSpec, enumerate_words, group_trace

TOL = 1e-9


class NotUnitary(ValueError):
    pass


@dataclass
class Report:
    check: str
    passed: bool = True
    failures: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def fail(self, msg: str) -> None:
        self.passed = False
        self.failures.append(msg)

    def summary(self) -> str:
        return "PASS" if self.passed else f"FAIL {len(self.failures)}"

    def to_dict(self) -> dict:
        return {"check": self.check, "passed": self.passed, "failures": self.failures, "details": self.details}


# -- random generators ---------------------------------------------------------


def random_word(s: Scenario, rng: np.random.Generator, max_len: int = 3, n_terms: int = 2) -> HnnElement:
    """Single word with random base coefficients and random letters."""
    length = int(rng.integers(0, max_len + 1))
    letters = tuple((int(rng.integers(len(s.thetas))), int(rng.choice([1, -1]))) for _ in range(length))
    coeffs = tuple(_random_coeff(s, rng, n_terms) for _ in range(length + 1))
    return HnnElement(s, [HnnWord(coeffs, letters)])


def _random_coeff(s: Scenario, rng, n_terms):
    x = s.base.random_element(rng, n_terms)
    if x.is_zero():
        return s.base.one()
    if s.base.zero_tol == 0:
        # exact backends keep integer coefficients so comparisons stay exact
        return x
    # keep magnitudes O(1) so absolute tolerances stay meaningful
    return x * (1.0 / max(1.0, x.norm1() / 2))


def _close(a: complex, b: complex, tol: float, scale: float = 1.0) -> bool:
    return abs(complex(a) - complex(b)) <= tol * max(1.0, scale)


# -- trace criterion -------------------------------------------------------------


def check_trace_hypothesis(
    s: Scenario, samples: int = 100, word_pairs: int = 50, use_reference: bool = False
) -> Report:
    """Check ``tau = tau|_D o E_D = tau|_D o theta^{-1} o E_theta`` for a trace tau on N.

    The candidate trace is the scenario's declared trace, or ``phi o E_D`` when
    none is declared (or ``use_reference`` is set).  When the hypothesis holds,
    traciality of ``tau o E^M_N`` is sample-checked on random word pairs.
    """
    report = Report("trace")
    tau = s.reference_state() if (use_reference or s.trace is None) else s.trace
    report.details["trace"] = tau.name
    rng = np.random.default_rng(s.seed)
    base = s.base
    xs = [base.random_element(rng) for _ in range(samples)]
    if hasattr(base, "symbols"):
        xs += [base.basis_element(sym) for sym in base.symbols()]

    def tau_d(x):
        return tau(x)

    violated: dict[str, int] = {}

    def note(label):
        violated[label] = violated.get(label, 0) + 1

    for i, x in enumerate(xs):
        y = xs[(i * 7 + 3) % len(xs)]
        scale = x.norm1() * max(1.0, y.norm1())
        if not _close(tau(x * y), tau(y * x), TOL, scale):
            note("tau(xy) = tau(yx)")
        if not _close(tau_d(s.e_d(x)), tau(x), TOL, scale):
            note("tau = tau|D o E_D")
        for th in s.thetas:
            val = tau_d(th.embedding.inverse(th.expectation(x)))
            if not _close(val, tau(x), TOL, scale):
                note(f"tau = tau|D o {th.name}^-1 o E_{th.name}")
    for label, count in violated.items():
        report.fail(f"violated: {label} ({count} samples)")
    if not report.passed:
        return report

    # sampled traciality of tau o E^M on words
    bad = 0
    for _ in range(word_pairs):
        a = random_word(s, rng)
        b = random_word(s, rng)
        lhs = tau(expect_onto_base(a * b))
        rhs = tau(expect_onto_base(b * a))
        if not _close(lhs, rhs, TOL, 1.0):
            bad += 1
    if bad:
        report.fail(f"tau o E^M not tracial on {bad}/{word_pairs} word pairs")
    report.details["word_pairs"] = word_pairs
    return report


# -- Haar / freeness -------------------------------------------------------------


def free_group_moment(letters: Sequence[tuple[int, int]], k: int) -> complex:
    """Oracle: trace in C[F_k] of the letter word."""
    F = Group(GroupSpec.free(k))
    gens = F.generators
    return group_trace(F.normal_form((gens[i], e) for i, e in letters))


def central_binomial_oracle(k: int) -> complex:
    """``tau((x + x^-1)^{2k})`` computed in the group algebra of Z."""
    from .groups import GroupAlgebra

    alg = GroupAlgebra(GroupSpec.free(1))
    x = alg.word("x")
    y = (x + x.adjoint()) ** (2 * k)
    return alg.trace_state()(y)


def check_haar(s: Scenario, theta: int = 0, n_max: int = 10, max_len: int = 6, k_max: int = 5) -> Report:
    """Powers of a stable unitary have zero moments; letter words match the free-group trace."""
    report = Report("haar")
    u = HnnElement.letter(s, theta, 1)
    ustar = u.adjoint()
    p = HnnElement.scalar(s, 1)
    q = HnnElement.scalar(s, 1)
    for n in range(1, n_max + 1):
        p = p * u
        q = q * ustar
        for sign, el in ((n, p), (-n, q)):
            m = state_moment(el)
            if abs(m) > TOL:
                report.fail(f"moment(u^{sign}) = {m}")
    m = state_moment(u * ustar)
    if not _close(m, 1, TOL):
        report.fail(f"moment(u u*) = {m}")
    h = u + ustar
    power = HnnElement.scalar(s, 1)
    binom = {}
    for j in range(1, 2 * k_max + 1):
        power = power * h
        if j % 2 == 0:
            k = j // 2
            val = state_moment(power)
            want = central_binomial_oracle(k)
            binom[k] = val.real
            if not _close(val, want, TOL, abs(want)):
                report.fail(f"moment((u+u*)^{j}) = {val}, oracle {want}")
    report.details["central_binomial"] = binom

    k = len(s.thetas)
    alphabet = [(i, e) for i in range(k) for e in (1, -1)]
    checked = reduced = 0
    for letters in enumerate_words(alphabet, max_len):
        m = state_moment(HnnElement.from_letters(s, letters))
        want = free_group_moment(letters, k)
        checked += 1
        one = HnnWord((s.base.one(),) * (len(letters) + 1), tuple(letters))
        if letters and shadow_length(one) == len(letters):
            reduced += 1
        if not _close(m, want, TOL):
            report.fail(f"letter word {letters}: moment {m}, free-group oracle {want}")
    report.details.update(letter_words=checked, reduced_letter_words=reduced)
    return report


# -- group oracle ---------------------------------------------------------------


def engine_word_from_group(s: Scenario, syllables) -> HnnElement:
    """Translate a word over ``a, t_i`` into a single HNN word over the base C[Z]."""
    oracle: Group = s.oracle
    letter_index = {name: i for i, name in enumerate(oracle.stable_letters())}
    base = s.base
    coeffs = []
    letters = []
    k = 0
    for g, e in syllables:
        if g == "a":
            k += e
            continue
        step = 1 if e > 0 else -1
        for _ in range(abs(e)):
            coeffs.append(k)
            letters.append((letter_index[g], step))
            k = 0
    coeffs.append(k)
    elems = tuple(base.basis_element((("a", j),) if j else ()) for j in coeffs)
    return HnnElement(s, [HnnWord(elems, tuple(letters))])


def oracle_compare(s: Scenario, max_len: int = 6, limit_failures: int = 20) -> Report:
    """Engine moments vs the group trace of the Britton normal form, for all words up to ``max_len``."""
    if s.oracle is None:
        raise ValueError("oracle comparison needs a group scenario")
    report = Report("oracle")
    oracle: Group = s.oracle
    alphabet = [syl[0] for syl in oracle.alphabet()]
    count = mismatches = 0
    for word in enumerate_words(alphabet, max_len):
        count += 1
        engine = state_moment(engine_word_from_group(s, word))
        exact = group_trace(oracle.normal_form(word))
        if abs(engine - exact) > 1e-10:
            mismatches += 1
            if mismatches <= limit_failures:
                report.fail(f"{oracle.to_string(word)}: engine {engine}, oracle {exact}")
    if mismatches > limit_failures:
        report.failures.append(f"... {mismatches - limit_failures} more")
    report.details.update(words=count, mismatches=mismatches)
    return report


# -- full hypothesis ---------------------------------------------------------------


def check_full_hypothesis(s: Scenario, v: AlgebraElement, n_max: int = 10) -> Report:
    """Check ``E_D(v^n) = E_theta(v^n) = 0`` for ``1 <= |n| <= n_max``."""
    base = s.base
    one = base.one()
    tol = base.check_tol
    vs = base_adjoint(v)
    if not (v * vs).isclose(one, tol) or not (vs * v).isclose(one, tol):
        raise NotUnitary("v is not unitary")
    report = Report("full-hypothesis")
    per_n = {}
    maps = [("E_D", s.e_d)] + [(f"E_{th.name}", th.expectation) for th in s.thetas]
    pos, neg = one, one
    for n in range(1, n_max + 1):
        pos, neg = pos * v, neg * vs
        for sign, x in ((n, pos), (-n, neg)):
            row = {}
            for label, E in maps:
                zero = E(x).isclose(base.zero(), tol)
                row[label] = zero
                if not zero:
                    report.fail(f"n={sign}: {label}(v^n) != 0")
            per_n[sign] = row
    report.details["per_n"] = per_n
    return report


# -- confluence and properties ---------------------------------------------------


def check_confluence(s: Scenario, n_words: int = 10, n_probes: int = 20, max_len: int = 4) -> Report:
    """Left-to-right and right-to-left normalizations agree on probe moments."""
    report = Report("confluence")
    rng = np.random.default_rng(s.seed)
    for i in range(n_words):
        x = random_word(s, rng, max_len) + random_word(s, rng, max_len)
        x_l = normalize(x, "ltr")
        x_r = normalize(x, "rtl")
        for _ in range(n_probes):
            a = random_word(s, rng, 2)
            b = random_word(s, rng, 2)
            ml = state_moment(a.adjoint() * x_l * b)
            mr = state_moment(a.adjoint() * x_r * b)
            if not _close(ml, mr, TOL, abs(ml)):
                report.fail(f"word {i}: ltr {ml} vs rtl {mr}")
    report.details.update(words=n_words, probes=n_probes)
    return report


def check_properties(s: Scenario, seed: int | None = None, samples: int = 20, max_len: int = 4) -> Report:
    """Bimodule law, involution compatibility, positivity, and the shadow-length fast path."""
    report = Report("properties")
    rng = np.random.default_rng(s.seed if seed is None else seed)
    base = s.base
    tol = base.check_tol
    for i in range(samples):
        x = random_word(s, rng, max_len)
        n = _random_coeff(s, rng, 2)
        m = _random_coeff(s, rng, 2)
        ex = expect_onto_base(x)
        lhs = expect_onto_base(HnnElement.base(s, n) * x * HnnElement.base(s, m))
        if not lhs.isclose(n * ex * m, tol * max(1.0, ex.norm1() * n.norm1() * m.norm1())):
            report.fail(f"sample {i}: bimodule law")
        if not expect_onto_base(x.adjoint()).isclose(base_adjoint(ex), tol * max(1.0, ex.norm1())):
            report.fail(f"sample {i}: E(x*) != E(x)*")
        w = x.words[0] if x.words else None
        if w is not None and shadow_length(w) != 0 and not ex.isclose(base.zero(), tol):
            report.fail(f"sample {i}: nonzero shadow length but E^M(w) != 0")
        y = x + random_word(s, rng, max_len)
        p = state_moment(y.adjoint() * y)
        if p.real < -1e-9 or abs(p.imag) > 1e-9 * max(1.0, abs(p)):
            report.fail(f"sample {i}: moment(x*x) = {p}")
    letter = HnnElement.letter(s, 0, 1)
    # exact for symbolic backends (zero_tol == 0), within check_tol for floating ones
    unit_tol = tol if base.zero_tol else 0.0
    for name, y in (("u u*", letter * letter.adjoint()), ("u* u", letter.adjoint() * letter)):
        if len(y.words) != 1 or y.words[0].length != 0 or not y.words[0].coeffs[0].isclose(base.one(), unit_tol):
            report.fail(f"{name} != 1")
    return report


def check_modular(s: Scenario, ts: Sequence[float] = (0.3, 1.0, -2.5), samples: int = 50) -> Report:
    """Invariance of the moment functional under modular_apply, and multiplicativity."""
    report = Report("modular")
    rng = np.random.default_rng(s.seed)
    for t in ts:
        worst = 0.0
        for i in range(samples):
            x = random_word(s, rng, 3)
            d = abs(state_moment(modular_apply(x, t)) - state_moment(x))
            worst = max(worst, d)
            if d > 1e-8:
                report.fail(f"t={t} sample {i}: moment drift {d:.2e}")
        report.details[f"max_drift[{t}]"] = worst
        for i in range(5):
            x = random_word(s, rng, 2)
            y = random_word(s, rng, 2)
            lhs = modular_apply(x * y, t)
            rhs = modular_apply(x, t) * modular_apply(y, t)
            a = random_word(s, rng, 2)
            d = abs(state_moment(a * lhs) - state_moment(a * rhs))
            if d > 1e-8:
                report.fail(f"t={t}: modular_apply not multiplicative (probe drift {d:.2e})")
    return report


def cocycle_is_trivial(s: Scenario, t: float, tol: float = 1e-10) -> bool:
    support = s.modular_support()
    one = s.base.one()
    return all(support.cocycle(k, t).isclose(one, tol) for k in range(len(s.thetas)))

