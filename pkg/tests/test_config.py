import json
from pathlib import Path

import jsonschema
import pytest

from orbitspace.config import AnalysisConfig, ConfigError, evaluate_token
from orbitspace.estimator import example_config_path

from oracles import SO2_CONFIG

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "schema.json").read_text())


def example():
    return json.loads(example_config_path().read_text())


@pytest.mark.parametrize("data", [example(), SO2_CONFIG])
def test_configs_follow_schema(data):
    jsonschema.validate(data, SCHEMA)


def test_schema_rejects_missing_mib():
    data = example()
    del data["mib"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(data, SCHEMA)


@pytest.mark.parametrize("token, value", [("-1/2", -0.5), ("sqrt(3)/2", 3**0.5 / 2), (1, 1.0), ("cos(pi)", -1.0)])
def test_tokens(token, value):
    assert evaluate_token(token) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("token", ["__import__('os')", "x1", "2**"])
def test_bad_tokens(token):
    with pytest.raises((ConfigError, ValueError)):
        evaluate_token(token)


def test_example_loads():
    cfg = AnalysisConfig.from_json(example_config_path())
    assert cfg.mib.weights.degrees == (6, 4, 2)
    assert [g.word for g in cfg.group.generators] == ["C3", "sigma_v", "R"]


def test_wrong_matrix_shape():
    data = example()
    data["generators"]["C3"] = [[1, 0], [0, 1]]
    with pytest.raises(ConfigError):
        AnalysisConfig.from_dict(data)


def test_variable_count():
    data = example()
    data["variables"] = ["a", "b"]
    with pytest.raises(ConfigError):
        AnalysisConfig.from_dict(data)


def test_defaults_filled():
    cfg = AnalysisConfig.from_dict(SO2_CONFIG)
    assert cfg.section == {"r2": 1.0, "grid": 400} and cfg.seed == 0
    assert cfg.variables == ("x1", "x2")
