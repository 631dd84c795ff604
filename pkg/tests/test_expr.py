import numpy as np
import pytest
from conftest import get
from hypothesis import given, settings, strategies as st

from hnncalc.checks import random_word
from hnncalc.engine import HnnElement, format_hnn, normalize, state_moment
from hnncalc.expr import (
    Adjoint,
    ExpressionError,
    Ident,
    Power,
    Product,
    Scalar,
    Sum,
    evaluate,
    parse_and_evaluate,
    parse_expression,
    scenario_names,
)


def test_grammar_shape():
    node = parse_expression("t1 * a^2 * t1'")
    assert node == Product((Ident("t1", 0), Power(Ident("a", 5), 2), Adjoint(Ident("t1", 11))))
    assert parse_expression("x^2'") == Adjoint(Power(Ident("x", 0), 2))
    assert parse_expression("2.5i") == Scalar(2.5j)
    assert isinstance(parse_expression("a - b + c"), Sum)
    assert parse_expression("-a") == Sum(((-1, Ident("a", 1)),))


def test_example_word(bs23):
    x = evaluate(parse_expression("t1 * a^2 * t1'"), bs23, reduce=False)
    w = x.words[0]
    assert len(x.words) == 1 and w.letters == ((0, 1), (0, -1))
    assert w.coeffs[1] == bs23.base.word("a^2")
    # the reducing evaluator applies t a^2 t^-1 = a^3
    y = parse_and_evaluate("t1 * a^2 * t1'", bs23)
    assert len(y.words) == 1 and y.words[0].length == 0 and y.words[0].coeffs[0] == bs23.base.word("a^3")


def test_binomial_expansion_word_count(bs23):
    x = evaluate(parse_expression("(t1 + t1')^4"), bs23, reduce=False)
    assert len(x.words) == 16
    assert all(w.length == 4 for w in x.words)
    y = normalize(x)
    assert len(y.words) == 5
    assert abs(state_moment(y) - 6) == 0
    assert abs(state_moment(x) - 6) == 0


@pytest.mark.parametrize(
    "src, offset",
    [("t1 ^ 1.5", 5), ("t1 *", 4), ("(t1", 3), ("t1 ) ", 3), ("t1 # a", 3), ("é + t1", 0)],
)
def test_syntax_errors(src, offset):
    with pytest.raises(ExpressionError) as info:
        parse_expression(src)
    assert info.value.offset == offset


def test_byte_offsets_count_utf8():
    with pytest.raises(ExpressionError) as info:
        parse_expression("a + é")
    assert info.value.offset == 4


def test_unresolved_identifier(bs23):
    with pytest.raises(ExpressionError) as info:
        parse_and_evaluate("t1 * b", bs23)
    assert info.value.offset == 5
    with pytest.raises(ExpressionError):
        parse_and_evaluate("t2", bs23)


def test_negative_powers(bs23):
    x = parse_and_evaluate("a^-3", bs23)
    assert x.words[0].coeffs[0] == bs23.base.word("a^-3")
    assert abs(state_moment(parse_and_evaluate("t1^-2 * t1^2", bs23)) - 1) == 0
    with pytest.raises(ExpressionError):
        parse_and_evaluate("(a + 1)^-1", bs23)


def test_scalars(bs23):
    x = parse_and_evaluate("2 * a - 0.5i", bs23)
    assert state_moment(x) == -0.5j


def test_names(bs23):
    names = scenario_names(bs23)
    assert names["t1"] == 0 and "a" in names


SCEN = ["bs23", "bs_two_letters", "torus_1_7", "torus_sqrt2", "tensor_case1", "dsum"]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(SCEN))
def test_print_parse_roundtrip(seed, name):
    s = get(name)
    rng = np.random.default_rng(seed)
    x = normalize(random_word(s, rng, 4) + random_word(s, rng, 3))
    y = parse_and_evaluate(format_hnn(x), s)
    for _ in range(20):
        p, q = random_word(s, rng, 2), random_word(s, rng, 2)
        mx = state_moment(p * x * q)
        my = state_moment(p * y * q)
        assert abs(mx - my) <= 1e-9 * max(1.0, abs(mx))


def test_roundtrip_zero(bs23):
    assert format_hnn(HnnElement(bs23)) == "0"
    assert parse_and_evaluate("0", bs23).is_zero()
