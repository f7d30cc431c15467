import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellcast.expressions import (
    BUILTINS,
    ExpressionError,
    ExpressionSyntaxError,
    Term,
    builtin,
    evaluate,
    expression_from,
    parse,
    render,
)
from bellcast.scenario import Behavior, SignalingError

from conftest import random_behavior, random_ns_behavior

UNIFORM_VALUES = {"S3": 0.0, "Sprime": 0.5, "I": 0.5, "R3": -0.625, "T": 1.0, "B": 0.0, "Mermin3": 0.0}


@pytest.mark.parametrize("name,value", sorted(UNIFORM_VALUES.items()))
def test_builtins_on_uniform(name, value):
    assert evaluate(builtin(name), Behavior.uniform(3)) == pytest.approx(value, abs=1e-15)


def test_r3_terms_match_printed_form():
    r3 = builtin("R3")
    assert len(r3.terms) == 7
    first = r3.terms[0]
    assert first.coefficient == 1.0 and first.factors == ((0, 0, 1), (1, 0, 1), (2, 0, 1))
    negatives = {t.factors for t in r3.terms[1:]}
    assert all(t.coefficient == -1.0 for t in r3.terms[1:])
    printed = {
        ((0, 1, 1), (1, 0, 1), (2, 0, 1)),
        ((0, 0, 1), (1, 1, 1), (2, 0, 1)),
        ((0, 0, 1), (1, 0, 1), (2, 1, 1)),
        ((0, 0, 1), (1, 1, -1), (2, 1, -1)),
        ((0, 1, -1), (1, 0, 1), (2, 1, -1)),
        ((0, 1, -1), (1, 1, -1), (2, 0, 1)),
    }
    assert negatives == printed


def test_rn_reduces_to_r3():
    assert builtin("RN", 3).terms == builtin("R3").terms


@pytest.mark.parametrize("n", [3, 4, 5, 6, 8])
def test_rn_term_count(n):
    assert len(builtin("RN", n).terms) == 2 * n + 1


def test_rn_uniform_value():
    # (1 - 2n) / 2^n
    for n in (3, 4, 6):
        assert evaluate(builtin("RN", n), Behavior.uniform(n)) == pytest.approx((1 - 2 * n) / 2**n)


def test_builtin_errors():
    with pytest.raises(ExpressionError):
        builtin("nope")
    with pytest.raises(ExpressionError):
        builtin("RN", 2)
    with pytest.raises(ExpressionError):
        builtin("S3", 4)


def test_builtin_names_and_aliases():
    assert set(BUILTINS) == {"S3", "Sprime", "I", "R3", "RN", "T", "B", "Mermin3"}
    assert builtin("sprime").terms == builtin("Sprime").terms
    assert builtin("CHSH", 2).terms == builtin("B", 2).terms


def test_correlator_expansion():
    e = parse("<a1^0 a2^0 a3^0>")
    assert len(e.terms) == 8
    assert sorted(t.coefficient for t in e.terms) == [-1] * 4 + [1] * 4


def test_parse_single_probability():
    e = parse("P(a1^0+,a2^0+)")
    assert e.n == 2
    assert len(e.terms) == 1
    assert e.terms[0] == Term(1.0, ((0, 0, 1), (1, 0, 1)))


def test_parse_coefficients_and_signs():
    e = parse("2.5*P(a1^1-) - <a1^0 a2^1> + 1e-1 P(a2^0+)", n=3)
    assert e.n == 3
    assert e.terms[0].coefficient == 2.5
    assert [t.coefficient for t in e.terms[1:5]] == [-1, 1, 1, -1]
    assert e.terms[-1].coefficient == pytest.approx(0.1)


@pytest.mark.parametrize("text", ["P(a1^0+,a1^1-)", "<a2^0 a2^1>", "P(a1^2+)", "P(a1^0+", "P()", "3", "P(a0^0+)",
                                  "P(a1^0+) P(a2^0+)", ""])
def test_parse_errors(text):
    with pytest.raises(ExpressionError):
        parse(text)


def test_syntax_error_position():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse("P(a1^0+) + Q")
    assert exc.value.pos == 11


def test_render_parse_round_trip(rng):
    expr = builtin("I")
    again = parse(render(expr), n=3)
    for _ in range(20):
        b = random_behavior(rng)
        assert evaluate(again, b) == pytest.approx(evaluate(expr, b), abs=1e-12)


def test_expression_from_name_or_text():
    assert expression_from("R3").name == "R3"
    assert expression_from("P(a1^0+)", 2).n == 2


def test_partial_terms_need_no_signaling():
    signaling = Behavior.deterministic(3, lambda s: (1, 1 if s[0] == 0 else -1, 1))
    with pytest.raises(SignalingError):
        evaluate(builtin("T"), signaling)
    # full-term expressions are fine on any behavior
    evaluate(builtin("R3"), signaling)


def test_partial_terms_on_no_signaling(rng):
    b = random_ns_behavior(rng)
    # T from its definition, via two-party marginals at an arbitrary c setting
    want = (sum(b.prob((0, 0, 1), (1, 1, c)) for c in (1, -1))
            + sum(b.prob((0, 1, 1), (-1, 1, c)) for c in (1, -1))
            + sum(b.prob((1, 0, 1), (1, -1, c)) for c in (1, -1))
            + sum(b.prob((1, 1, 1), (-1, -1, c)) for c in (1, -1)))
    assert evaluate(builtin("T"), b) == pytest.approx(want, abs=1e-12)


def test_scenario_mismatch():
    with pytest.raises(ExpressionError):
        evaluate(builtin("R3"), Behavior.uniform(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_i_is_s3_plus_sprime(seed):
    b = random_behavior(np.random.default_rng(seed))
    total = evaluate(builtin("S3"), b) + evaluate(builtin("Sprime"), b)
    assert evaluate(builtin("I"), b) == pytest.approx(total, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_evaluate_linear(seed, q):
    rng = np.random.default_rng(seed)
    p1, p2 = random_ns_behavior(rng), random_ns_behavior(rng)
    for name in ("S3", "R3", "T", "B", "Mermin3"):
        e = builtin(name)
        want = q * evaluate(e, p1) + (1 - q) * evaluate(e, p2)
        assert evaluate(e, p1.mix(p2, q)) == pytest.approx(want, abs=1e-12)


def test_s3_correlator_form(rng):
    from bellcast.scenario import correlator

    b = random_behavior(rng)
    signs = {(0, 0, 0): 1, (0, 0, 1): 1, (0, 1, 0): 1, (0, 1, 1): -1,
             (1, 0, 0): 1, (1, 0, 1): -1, (1, 1, 0): -1, (1, 1, 1): -1}
    want = sum(k * correlator(b, s) for s, k in signs.items())
    assert evaluate(builtin("S3"), b) == pytest.approx(want, abs=1e-12)


def test_algebraic_max():
    assert builtin("Sprime").algebraic_max() == 4
    assert builtin("R3").algebraic_max() == 1
