import pathlib
from dataclasses import replace

import pytest

from shype import expr as ex
from shype.parser import parse_model

ROOT = pathlib.Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"


def load_model(name):
    """Parse a model from models/ and fail loudly on diagnostics."""
    path = MODELS / f"{name}.shype"
    model, diags = parse_model(path.read_text(), str(path))
    errors = [d for d in diags if d.severity == "error"]
    assert not errors, errors
    assert model is not None
    return model


def with_params(model, **overrides):
    """Copy of the model with some parameters replaced by literals."""
    params = dict(model.params)
    for k, v in overrides.items():
        assert k in params, k
        params[k] = ex.Num(float(v))
    return replace(model, params=params)


@pytest.fixture(scope="session")
def buffer_model():
    return load_model("buffer")


@pytest.fixture(scope="session")
def assembler_model():
    return load_model("assembler")
