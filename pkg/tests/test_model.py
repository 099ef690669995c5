"""Structure-equation parser: canonical forms, errors, round trips."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from abch.model import (
    BidegreeViolation,
    ComplexModel,
    DuplicateEquation,
    ModelSyntaxError,
    UnknownGenerator,
    parse_model,
    render_model,
)
from abch.scalars import QQi


def test_torus_has_no_equations():
    m = parse_model("n=2")
    assert m.n == 2 and not m.d20 and not m.d11


def test_iwasawa_structure_constants():
    m = parse_model("n=3; d phi3 = -1 * phi1 ^ phi2".replace("; ", "\n"))
    assert m.d20 == {3: {(1, 2): QQi(-1)}}
    assert m.d11 == {}


def test_kodaira_thurston_structure_constants():
    m = parse_model("n=2\nd phi2 = phi1 ^ phibar1")
    assert m.d11 == {2: {(1, 1): QQi(1)}}
    assert m.d20 == {}


def test_sign_normalisation():
    # phi2 ^ phi1 = -phi1 ^ phi2; phibar1 ^ phi2 = -phi2 ^ phibar1
    m = parse_model("n=2\nd phi1 = phi2 ^ phi1 + phibar1 ^ phi2")
    assert m.d20 == {1: {(1, 2): QQi(-1)}}
    assert m.d11 == {1: {(2, 1): QQi(-1)}}


def test_term_merging_and_cancellation():
    m = parse_model("n=2\nd phi1 = phi1 ^ phi2 - phi1 ^ phi2")
    assert m.d20 == {} and m.d11 == {}


def test_complex_coefficients():
    m = parse_model("n=2\nd phi2 = (1/2 + 3/4i) * phi1 ^ phi2 + i * phi1 ^ phibar2")
    assert m.d20[2][(1, 2)] == QQi(Fraction(1, 2), Fraction(3, 4))
    assert m.d11[2][(1, 2)] == QQi(0, 1)


def test_bidegree_violation():
    with pytest.raises(BidegreeViolation) as err:
        parse_model("n=2\nd phi2 = phibar1 ^ phibar2")
    assert err.value.line == 2


def test_unknown_generator():
    with pytest.raises(UnknownGenerator):
        parse_model("n=2\nd phi2 = phi1 ^ phi3")
    with pytest.raises(UnknownGenerator):
        parse_model("n=2\nd phi5 = phi1 ^ phi2")


def test_duplicate_equation():
    with pytest.raises(DuplicateEquation):
        parse_model("n=2\nd phi1 = phi1 ^ phi2\nd phi1 = phi1 ^ phi2")


def test_syntax_errors_carry_position():
    with pytest.raises(ModelSyntaxError) as err:
        parse_model("n=2\nd phi1 = phi1 * phi2")
    assert err.value.line == 2
    with pytest.raises(ModelSyntaxError):
        parse_model("n=2\nd phi1 = 1/0 * phi1 ^ phi2")
    with pytest.raises(ModelSyntaxError):
        parse_model("d phi1 = phi1 ^ phi2")  # n not declared yet


def test_comments_and_crlf():
    m = parse_model("# header\r\nn = 2\r\nname = t  \r\n# done\r\n")
    assert m.n == 2 and m.name == "t"


small = st.integers(min_value=-3, max_value=3)
coeffs = st.builds(
    lambda a, b, c, d: QQi(Fraction(a, 1 + abs(c)), Fraction(b, 1 + abs(d))),
    small, small, small, small,
).filter(lambda c: not c.is_zero())


@st.composite
def models(draw):
    n = draw(st.integers(min_value=1, max_value=3))
    d20, d11 = {}, {}
    for k in range(1, n + 1):
        if draw(st.booleans()):
            pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
            chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
            entries = {pair: draw(coeffs) for pair in chosen}
            if entries:
                d20[k] = dict(sorted(entries.items()))
        if draw(st.booleans()):
            pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
            chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=3))
            entries = {pair: draw(coeffs) for pair in chosen}
            if entries:
                d11[k] = dict(sorted(entries.items()))
    return ComplexModel(n=n, name="rand", d20=d20, d11=d11)


@settings(max_examples=80, deadline=None)
@given(models())
def test_round_trip(model):
    assert parse_model(render_model(model)) == model
