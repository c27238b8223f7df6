"""Parser diagnostics, round-tripping and fuzz robustness."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shype import format_model
from shype.errors import ShypeError
from shype.parser import parse_expr, parse_model, parse_term

from conftest import MODELS, load_model


def test_diagnostic_carries_location_and_renders():
    src = "variables { B }\nsubcomponent S = init:(.S\n"
    model, diags = parse_model(src, "broken.shype")
    errors = [d for d in diags if d.severity == "error"]
    assert errors
    text = str(errors[0])
    assert text.startswith("broken.shype:2:")
    assert ": error: " in text


def test_diagnostic_has_hint_for_unknown_section():
    _, diags = parse_model("variablez { B }\n", "m.shype")
    assert any(d.hint for d in diags if d.severity == "error")


def test_unknown_function_rejected():
    with pytest.raises(ShypeError):
        parse_expr("cos(X)")


def test_trailing_garbage_rejected():
    with pytest.raises(ShypeError):
        parse_expr("1 + 2 )")


def test_parse_expr_precedence():
    from shype import expr as ex
    assert ex.eval_expr(parse_expr("2 + 3 * 4"), {}) == 14.0
    assert ex.eval_expr(parse_expr("(2 + 3) * 4"), {}) == 20.0
    assert ex.eval_expr(parse_expr("-2 * 3"), {}) == -6.0


def test_comments_and_optional_params():
    src = (
        "variables { X }  # a comment\n"
        "iv { i -> X }\n"
        "subcomponent S = init:(i, 1, const).S + stop:(i, 0, const).S\n"
        "controller C = stop.C  # loop forever\n"
        "system = S <*> init.C\n"
        "ec {\n"
        "  init = (true, X ~ 0)\n"
        "  stop = (X >= 5, true)\n"
        "}\n"
    )
    model, diags = parse_model(src, "tiny.shype")
    assert model is not None
    assert not [d for d in diags if d.severity == "error"]
    assert not model.params


@pytest.mark.parametrize("name", sorted(p.stem for p in MODELS.glob("*.shype")))
def test_model_corpus_round_trips(name):
    model = load_model(name)
    text = format_model(model)
    back, diags = parse_model(text, f"{name}.fmt")
    assert not [d for d in diags if d.severity == "error"], diags
    assert back == model


def test_term_round_trip():
    from shype.formatter import fmt_term
    model = load_model("assembler_con")
    t = parse_term("(C1 || C2) <*> Cm", model)
    assert parse_term(fmt_term(t), model) == t


def test_term_malformed_rejected():
    model = load_model("assembler_con")
    with pytest.raises(ShypeError):
        parse_term("(C1 || ", model)


_junk = st.text(
    alphabet="modelvarsub{}()<>*.|+~=,:#\n 0123456789abcXYZ_", max_size=300)


@settings(max_examples=300, deadline=None)
@given(_junk)
def test_parser_never_panics(src):
    # arbitrary input yields a model or diagnostics, never an exception
    model, diags = parse_model(src, "fuzz.shype")
    if model is None:
        assert any(d.severity == "error" for d in diags)


@settings(max_examples=200, deadline=None)
@given(_junk)
def test_expr_parser_never_panics(src):
    try:
        parse_expr(src)
    except ShypeError:
        pass
