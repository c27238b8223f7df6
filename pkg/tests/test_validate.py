"""Static well-definedness checks on parsed models."""

import pytest

from shype import parse_model, validate_well_defined

from conftest import MODELS, load_model


@pytest.mark.parametrize("name", sorted(p.stem for p in MODELS.glob("*.shype")))
def test_model_corpus_is_well_defined(name):
    report = validate_well_defined(load_model(name))
    assert report.ok, [str(v) for v in report.violations]


def _violations(src):
    model, diags = parse_model(src, "<test>")
    assert model is not None, diags
    report = validate_well_defined(model)
    assert not report.ok
    return {v.clause for v in report.violations}


_BASE = """\
variables {{ X }}
types {{ const = 1 }}
iv {{ i -> X }}
subcomponent S = init:(i, 0, const).S + a:(i, 1, const).S
controller C = {controller}
system = S <*> init.C
ec {{
  init = (true, X ~ 0)
  a = (X >= 1, true)
{extra_ec}}}
"""


def test_controller_only_event_rejected():
    src = _BASE.format(controller="a.C + ghost.C",
                       extra_ec="  ghost = (X >= 2, true)\n")
    assert "controller event not in uncontrolled system" in _violations(src)


def test_missing_event_condition_rejected():
    src = (
        "variables { X }\n"
        "types { const = 1 }\n"
        "iv { i -> X }\n"
        "subcomponent S = init:(i, 0, const).S + a:(i, 1, const).S\n"
        "controller C = a.C\n"
        "system = S <*> init.C\n"
        "ec { init = (true, X ~ 0) }\n"
    )
    assert "missing event condition" in _violations(src)


def test_reset_of_unknown_variable_rejected():
    src = _BASE.format(controller="a.C",
                       extra_ec="").replace("X ~ 0", "X ~ 0 and Y ~ 1")
    assert "reset of unknown variable" in _violations(src)


def test_undefined_influence_type_rejected():
    src = _BASE.format(controller="a.C", extra_ec="").replace(
        "types { const = 1 }\n", "")
    assert "undefined influence type" in _violations(src)


def test_init_must_be_unconditional():
    src = _BASE.format(controller="a.C", extra_ec="").replace(
        "init = (true, X ~ 0)", "init = (X >= 0, X ~ 0)")
    assert "init activation" in _violations(src)


def test_duplicate_event_in_subcomponent_rejected():
    src = _BASE.format(controller="a.C", extra_ec="").replace(
        "a:(i, 1, const).S", "a:(i, 1, const).S + a:(i, 2, const).S")
    assert "duplicate event in subcomponent" in _violations(src)


def test_shared_events_must_synchronize():
    src = (
        "variables { X }\n"
        "types { const = 1 }\n"
        "iv { i -> X  j -> X }\n"
        "subcomponent S = init:(i, 0, const).S + a:(i, 1, const).S\n"
        "subcomponent R = init:(j, 0, const).R + a:(j, 2, const).R\n"
        "controller C = a.C\n"
        "system = (S <init> R) <*> init.C\n"
        "ec {\n"
        "  init = (true, X ~ 0)\n"
        "  a = (X >= 1, true)\n"
        "}\n"
    )
    assert "shared events not synchronised" in _violations(src)
