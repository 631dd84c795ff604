"""Word-expression language.

    expr   := ['-'] term (('+' | '-') term)*
    term   := factor ('*' factor)*
    factor := atom ('^' int)? ("'")?
    atom   := ident | scalar | '(' expr ')'

Scalars are decimal literals with an optional ``i``/``j`` suffix for
imaginary values.  Identifiers are base-element bindings or stable letters
``t1 ... tk``.  Negative powers require a unitary operand.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from .engine import HnnElement, Scenario, concatenate


class ExpressionError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(message if offset is None else f"{message} (at offset {offset})")


@dataclass(frozen=True)
class Ident:
    name: str
    offset: int


@dataclass(frozen=True)
class Scalar:
    value: complex


@dataclass(frozen=True)
class Power:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Adjoint:
    operand: "Node"


@dataclass(frozen=True)
class Product:
    factors: tuple


@dataclass(frozen=True)
class Sum:
    terms: tuple  # (sign, node) pairs


Node = Union[Ident, Scalar, Power, Adjoint, Product, Sum]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?[ij]?|\.\d+(?:[eE][+-]?\d+)?[ij]?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^'()])
    """,
    re.VERBOSE,
)


def tokenize(src: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ExpressionError(f"unexpected character {src[pos]!r}", len(src[:pos].encode()))
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), len(src[:pos].encode())))
        pos = m.end()
    out.append(("end", "", len(src.encode())))
    return out


class _Parser:
    def __init__(self, src: str):
        self.tokens = tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, off = self.take()
        if kind != "op" or text != op:
            raise ExpressionError(f"expected {op!r}, got {text or 'end of input'!r}", off)

    def expr(self) -> Node:
        terms = []
        sign = 1
        kind, text, _ = self.peek()
        if kind == "op" and text in "+-":
            self.take()
            sign = -1 if text == "-" else 1
        terms.append((sign, self.term()))
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                terms.append((-1 if text == "-" else 1, self.term()))
            else:
                break
        if len(terms) == 1 and terms[0][0] == 1:
            return terms[0][1]
        return Sum(tuple(terms))

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def factor(self) -> Node:
        node = self.atom()
        kind, text, off = self.peek()
        if kind == "op" and text == "^":
            self.take()
            sign = 1
            kind, text, off = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                sign = -1 if text == "-" else 1
                kind, text, off = self.peek()
            if kind != "number" or not text.isdigit():
                raise ExpressionError(f"power must be an integer, got {text or 'end of input'!r}", off)
            self.take()
            node = Power(node, sign * int(text))
        kind, text, off = self.peek()
        if kind == "op" and text == "'":
            self.take()
            node = Adjoint(node)
        return node

    def atom(self) -> Node:
        kind, text, off = self.take()
        if kind == "ident":
            return Ident(text, off)
        if kind == "number":
            if text[-1] in "ij":
                return Scalar(complex(0, float(text[:-1])))
            return Scalar(complex(float(text)))
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected {text or 'end of input'!r}", off)


def _identifiers(node: Node):
    if isinstance(node, Ident):
        yield node
    elif isinstance(node, (Power, Adjoint)):
        yield from _identifiers(node.base if isinstance(node, Power) else node.operand)
    elif isinstance(node, Product):
        for f in node.factors:
            yield from _identifiers(f)
    elif isinstance(node, Sum):
        for _, t in node.terms:
            yield from _identifiers(t)


def parse_expression(src: str, bindings: Mapping[str, object] | None = None) -> Node:
    """Parse ``src``; if ``bindings`` is given, every identifier must resolve in it."""
    p = _Parser(src)
    node = p.expr()
    kind, text, off = p.peek()
    if kind != "end":
        raise ExpressionError(f"unexpected trailing {text!r}", off)
    if bindings is not None:
        for ident in _identifiers(node):
            if ident.name not in bindings:
                raise ExpressionError(f"unresolved identifier {ident.name!r}", ident.offset)
    return node


def scenario_names(s: Scenario) -> dict[str, object]:
    names: dict[str, object] = dict(s.bindings)
    for k, name in enumerate(s.letter_names):
        names[name] = k
    return names


def evaluate(node: Node, s: Scenario, reduce: bool = True) -> HnnElement:
    """Evaluate ``node`` in ``s``.

    With ``reduce=False`` products are plain concatenations, so the result
    is the fully expanded sum of words; :func:`normalize` brings it to
    reduced form.
    """
    names = scenario_names(s)

    def mul(x: HnnElement, y: HnnElement) -> HnnElement:
        return x * y if reduce else concatenate(x, y)

    def power(x: HnnElement, k: int) -> HnnElement:
        out = HnnElement.scalar(s, 1)
        for _ in range(k):
            out = mul(out, x)
        return out

    def ev(n: Node) -> HnnElement:
        if isinstance(n, Ident):
            if n.name not in names:
                raise ExpressionError(f"unresolved identifier {n.name!r}", n.offset)
            val = names[n.name]
            if isinstance(val, int):
                return HnnElement.letter(s, val, 1)
            return HnnElement.base(s, val)
        if isinstance(n, Scalar):
            return HnnElement.scalar(s, n.value)
        if isinstance(n, Adjoint):
            return ev(n.operand).adjoint()
        if isinstance(n, Power):
            x = ev(n.base)
            if n.exponent < 0:
                xs = x.adjoint()
                one = HnnElement.scalar(s, 1)
                if not _is_one(x * xs, one):
                    raise ExpressionError("negative power of a non-unitary element")
                return power(xs, -n.exponent)
            return power(x, n.exponent)
        if isinstance(n, Product):
            out = ev(n.factors[0])
            for f in n.factors[1:]:
                out = mul(out, ev(f))
            return out
        if isinstance(n, Sum):
            out = HnnElement(s)
            for sign, t in n.terms:
                v = ev(t)
                out = out + (v if sign == 1 else -v)
            return out
        raise TypeError(f"unknown node {n!r}")

    return ev(node)


def _is_one(x: HnnElement, one: HnnElement) -> bool:
    diff = x - one
    tol = x.scenario.base.check_tol
    return all(w.length == 0 and w.coeffs[0].isclose(x.scenario.base.zero(), tol) for w in diff.words)


def parse_and_evaluate(src: str, s: Scenario) -> HnnElement:
    return evaluate(parse_expression(src, scenario_names(s)), s)
