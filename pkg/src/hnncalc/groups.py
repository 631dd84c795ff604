"""Groups with computable normal forms and their group algebras.

Supported families: free abelian groups Z^d, free groups F_k, and HNN
extensions of Z given by relations ``t_i a^{m_i} t_i^{-1} = a^{n_i}``
(Baumslag-Solitar groups when there is a single stable letter).

Group elements are tuples of syllables ``(generator, exponent)`` in normal
form, e.g. ``(("t", 1), ("a", 1), ("t", -1))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import AlgebraElement, Backend, ConditionalExpectation, Embedding, State

Syllable = tuple[str, int]
GroupWord = tuple[Syllable, ...]

_FREE_NAMES = ("x", "y", "z", "w")
_ABELIAN_NAMES = ("a", "b", "c", "d")


class UnsupportedSubgroup(ValueError):
    pass


@dataclass(frozen=True)
class GroupSpec:
    kind: str  # "free-abelian" | "free" | "hnn-of-Z"
    rank: int = 1
    relations: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("free-abelian", "free", "hnn-of-Z"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "hnn-of-Z":
            if not self.relations:
                raise ValueError("hnn-of-Z needs at least one relation (m, n)")
            for m, n in self.relations:
                if m == 0 or n == 0:
                    raise ValueError("hnn-of-Z parameters must be nonzero")
        elif self.rank < 1:
            raise ValueError("rank must be positive")

    @classmethod
    def hnn_of_z(cls, m: int, n: int) -> GroupSpec:
        """``<a, t | t a^m t^-1 = a^n>``."""
        return cls("hnn-of-Z", relations=((m, n),))

    @classmethod
    def free_abelian(cls, d: int) -> GroupSpec:
        return cls("free-abelian", rank=d)

    @classmethod
    def free(cls, k: int) -> GroupSpec:
        return cls("free", rank=k)

    def __str__(self):
        if self.kind == "hnn-of-Z":
            inner = ", ".join(f"{m},{n}" for m, n in self.relations)
            return f"hnn-of-Z({inner})"
        return f"{self.kind}({self.rank})"


def _names(prefix_pool: Sequence[str], k: int, fallback: str) -> tuple[str, ...]:
    if k <= len(prefix_pool):
        return tuple(prefix_pool[:k])
    return tuple(f"{fallback}{i}" for i in range(1, k + 1))


@dataclass(frozen=True)
class Group:
    spec: GroupSpec
    generators: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        spec = self.spec
        if spec.kind == "free-abelian":
            gens = _names(_ABELIAN_NAMES, spec.rank, "a")
        elif spec.kind == "free":
            gens = _names(_FREE_NAMES, spec.rank, "x")
        else:
            k = len(spec.relations)
            gens = ("a",) + (("t",) if k == 1 else tuple(f"t{i}" for i in range(1, k + 1)))
        object.__setattr__(self, "generators", gens)

    # -- basic structure ----------------------------------------------------

    @property
    def identity(self) -> GroupWord:
        return ()

    def alphabet(self) -> list[GroupWord]:
        """Single letters ``g`` and ``g^-1`` for every generator."""
        return [((g, e),) for g in self.generators for e in (1, -1)]

    def stable_letters(self) -> tuple[str, ...]:
        return self.generators[1:] if self.spec.kind == "hnn-of-Z" else ()

    def multiply(self, g: GroupWord, h: GroupWord) -> GroupWord:
        return self.normal_form(g + h)

    def inverse(self, g: GroupWord) -> GroupWord:
        return self.normal_form(tuple((s, -e) for s, e in reversed(g)))

    def sort_key(self, g: GroupWord):
        rank = {s: i for i, s in enumerate(self.generators)}
        return (sum(abs(e) for _, e in g), tuple((rank[s], e) for s, e in g))

    # -- normal forms -------------------------------------------------------

    def normal_form(self, word: Iterable[Syllable] | str) -> GroupWord:
        """Canonical representative: equal in G iff identical output."""
        if isinstance(word, str):
            word = self.parse(word)
        kind = self.spec.kind
        if kind == "free-abelian":
            return self._nf_abelian(word)
        if kind == "free":
            return self._nf_free(word)
        return self._nf_hnn(word)

    def _check_gen(self, s: str) -> None:
        if s not in self.generators:
            raise ValueError(f"unknown generator {s!r} for {self.spec}")

    def _nf_abelian(self, word) -> GroupWord:
        exps = dict.fromkeys(self.generators, 0)
        for s, e in word:
            self._check_gen(s)
            exps[s] += e
        return tuple((s, e) for s, e in exps.items() if e)

    def _nf_free(self, word) -> GroupWord:
        out: list[list] = []
        for s, e in word:
            self._check_gen(s)
            if e == 0:
                continue
            if out and out[-1][0] == s:
                out[-1][1] += e
                if out[-1][1] == 0:
                    out.pop()
            else:
                out.append([s, e])
        return tuple((s, e) for s, e in out)

    def _nf_hnn(self, word) -> GroupWord:
        rel = dict(zip(self.generators[1:], self.spec.relations))
        # Britton reduction: slots[i] is the a-exponent after letters[i-1]
        slots = [0]
        letters: list[tuple[str, int]] = []
        for s, e in word:
            self._check_gen(s)
            if s == "a":
                slots[-1] += e
                continue
            step = 1 if e > 0 else -1
            for _ in range(abs(e)):
                if letters and letters[-1][0] == s and letters[-1][1] == -step:
                    m, n = rel[s]
                    k = slots[-1]
                    # t a^k t^-1 with m | k  ->  a^{k n / m};  t^-1 a^k t with n | k -> a^{k m / n}
                    if letters[-1][1] == 1 and k % m == 0:
                        letters.pop()
                        slots.pop()
                        slots[-1] += k // m * n
                        continue
                    if letters[-1][1] == -1 and k % n == 0:
                        letters.pop()
                        slots.pop()
                        slots[-1] += k // n * m
                        continue
                letters.append((s, step))
                slots.append(0)
        # coset representatives: push subgroup parts of each slot to the right
        for i, (s, e) in enumerate(letters):
            m, n = rel[s]
            # a^n t = t a^m  and  a^m t^-1 = t^-1 a^n
            mod, carry = (n, m) if e == 1 else (m, n)
            q, r = divmod(slots[i], abs(mod))
            if mod < 0:
                q = -q
            slots[i] = r
            slots[i + 1] += q * carry
        out: list[Syllable] = []
        for i, k in enumerate(slots):
            if k:
                out.append(("a", k))
            if i < len(letters):
                s, e = letters[i]
                if out and out[-1][0] == s:
                    out[-1] = (s, out[-1][1] + e)
                else:
                    out.append((s, e))
        return tuple(out)

    # -- string forms -------------------------------------------------------

    _token = re.compile(r"\s*([A-Za-z][A-Za-z0-9]*)(?:\s*\^\s*(-?\d+))?\s*\*?")

    def parse(self, text: str) -> list[Syllable]:
        """Parse ``"t a^2 t^-1"`` (space or ``*`` separated) into syllables."""
        out: list[Syllable] = []
        pos = 0
        text = text.strip()
        if text in ("", "1", "e"):
            return out
        while pos < len(text):
            mt = self._token.match(text, pos)
            if not mt or mt.end() == pos:
                raise ValueError(f"cannot parse group word at offset {pos}: {text!r}")
            g, e = mt.group(1), int(mt.group(2) or 1)
            self._check_gen(g)
            out.append((g, e))
            pos = mt.end()
        return out

    def to_string(self, g: GroupWord) -> str:
        if not g:
            return "1"
        return " ".join(s if e == 1 else f"{s}^{e}" for s, e in g)


def group_trace(w: GroupWord) -> complex:
    """Canonical trace on the group algebra: 1 on the identity, 0 elsewhere."""
    return 1.0 + 0j if len(w) == 0 else 0j


def enumerate_words(alphabet: Sequence, max_len: int):
    """All words (tuples of letters) of length 0..max_len, shortest first."""
    level: list[tuple] = [()]
    yield ()
    for _ in range(max_len):
        level = [w + (x,) for w in level for x in alphabet]
        yield from level


class GroupAlgebra(Backend):
    """Complex group algebra C[G] with the canonical trace."""

    zero_tol = 0.0

    def __init__(self, group: Group | GroupSpec):
        if isinstance(group, GroupSpec):
            group = Group(group)
        self.group = group
        self.backend_id = f"group:{group.spec}"
        self._single_z = group.spec.kind == "free-abelian" and group.spec.rank == 1

    def one(self) -> AlgebraElement:
        return AlgebraElement(self, {(): 1})

    def mul_basis(self, s, t):
        if self._single_z:
            k = (s[0][1] if s else 0) + (t[0][1] if t else 0)
            return 1, ((("a", k),) if k else ())
        return 1, self.group.normal_form(s + t)

    def adjoint_basis(self, s):
        return 1, self.group.inverse(s)

    def sort_key(self, s):
        return self.group.sort_key(s)

    def format_symbol(self, s) -> str:
        if not s:
            return "1"
        return "*".join(g if e == 1 else f"{g}^{e}" for g, e in s)

    def default_bindings(self) -> dict[str, AlgebraElement]:
        return {g: self.basis_element(((g, 1),)) for g in self.group.generators}

    def word(self, text: str | Iterable[Syllable]) -> AlgebraElement:
        return self.basis_element(self.group.normal_form(text))

    def random_element(self, rng: np.random.Generator, n_terms: int = 3) -> AlgebraElement:
        alphabet = self.group.alphabet()
        terms = {}
        for _ in range(n_terms):
            length = int(rng.integers(0, 5))
            w: list = []
            for _ in range(length):
                w.extend(alphabet[int(rng.integers(len(alphabet)))])
            g = self.group.normal_form(w)
            terms[g] = terms.get(g, 0) + complex(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        return AlgebraElement(self, terms)

    def trace_state(self) -> State:
        return State.from_symbol_values("tau", self, lambda s: 1.0 if not s else 0.0)


def _membership(group: Group, H: dict):
    """Predicate on normal-form words for a supported subgroup description."""
    spec = group.spec
    if "multiples" in H:
        if spec.kind != "free-abelian":
            raise UnsupportedSubgroup("'multiples' subgroups are only supported in free abelian groups")
        moduli = list(H["multiples"])
        if len(moduli) != spec.rank:
            raise UnsupportedSubgroup(f"need {spec.rank} moduli, got {len(moduli)}")
        mods = dict(zip(group.generators, moduli))

        def member(g):
            return all((e == 0) if mods[s] == 0 else (e % mods[s] == 0) for s, e in g)

        return member
    if "generators" in H:
        if spec.kind not in ("free", "free-abelian"):
            raise UnsupportedSubgroup("generator subgroups need a free or free abelian group")
        gens = set(H["generators"])
        unknown = gens - set(group.generators)
        if unknown:
            raise UnsupportedSubgroup(f"unknown generators {sorted(unknown)}")

        def member(g):
            return all(s in gens for s, _ in g)

        return member
    raise UnsupportedSubgroup(f"unsupported subgroup description {H!r}")


def subgroup_expectation(algebra: GroupAlgebra, H: dict, name: str | None = None) -> ConditionalExpectation:
    """Trace-preserving expectation C[G] -> C[H]: keep elements of H, kill the rest.

    ``H`` is ``{"multiples": [m1, ..., md]}`` (the sublattice m1 Z x ... x md Z of
    Z^d; a zero modulus kills the coordinate) or ``{"generators": [...]}``.
    """
    member = _membership(algebra.group, H)
    return ConditionalExpectation.from_symbol_filter(name or f"E[{H}]", algebra, member)


def power_embedding(algebra: GroupAlgebra, n: int, m: int, name: str = "theta") -> Embedding:
    """On C[Z]: the isomorphism C[nZ] -> C[mZ], a^{nk} -> a^{mk}."""
    if not algebra._single_z:
        raise UnsupportedSubgroup("power embeddings need the base group Z")

    def scale(src: int, dst: int):
        def fn(s):
            k = s[0][1] if s else 0
            if k % src:
                return None
            j = k // src * dst
            return 1, ((("a", j),) if j else ())

        return fn

    def sample(rng):
        terms = {}
        for _ in range(3):
            k = int(rng.integers(-3, 4)) * n
            terms[(("a", k),) if k else ()] = complex(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        return AlgebraElement(algebra, terms)

    return Embedding.from_symbol_maps(name, algebra, scale(n, m), scale(m, n), sample)


class AffineRep:
    """Homomorphism of hnn-of-Z groups into the affine group of Q.

    ``a -> x + 1`` and ``t_i -> (n_i/m_i) x``.  It is not faithful, but it is
    an independent check that a rewrite does not change the group element.
    """

    def __init__(self, group: Group):
        from fractions import Fraction

        self._F = Fraction
        self.maps = {"a": (Fraction(1), Fraction(1))}
        for s, (m, n) in zip(group.generators[1:], group.spec.relations):
            self.maps[s] = (Fraction(n, m), Fraction(0))

    def __call__(self, word: Iterable[Syllable]):
        F = self._F
        A, b = F(1), F(0)  # x -> A x + b
        for s, e in word:
            p, q = self.maps[s]
            if e < 0:
                p, q = 1 / p, -q / p
            for _ in range(abs(e)):
                # compose: (current) o (p x + q)
                A, b = A * p, A * q + b
        return A, b
