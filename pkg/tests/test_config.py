import json
import logging

from newtonheight.config import CONFIG_ENV_VAR, DEFAULTS, NODE_BUDGET, load_config


def test_defaults(monkeypatch):
    monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
    config = load_config()
    assert config == DEFAULTS
    assert config is not DEFAULTS
    assert config["budget"] == NODE_BUDGET == 2**28
    assert config["lambda_min"] == 64.0 and config["lambda_max"] == 8192.0


def test_missing_file_falls_back(tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        config = load_config(str(tmp_path / "absent.toml"))
    assert config == DEFAULTS
    assert "not found" in caplog.text


def test_toml_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 42\nthreads = 1\nlogging_level = "DEBUG"\n')
    config = load_config(str(path))
    assert config["seed"] == 42
    assert config["threads"] == 1
    assert config["logging_level"] == "DEBUG"
    assert config["gauss_order"] == DEFAULTS["gauss_order"]


def test_json_overrides_and_unknown_keys(tmp_path, caplog):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"cutoff_radius": 0.25, "colour": "blue"}))
    with caplog.at_level(logging.WARNING):
        config = load_config(str(path))
    assert config["cutoff_radius"] == 0.25
    assert "colour" not in config
    assert "colour" in caplog.text


def test_malformed_file_falls_back(tmp_path, caplog):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with caplog.at_level(logging.ERROR):
        assert load_config(str(path)) == DEFAULTS
    assert "decoding" in caplog.text


def test_environment_variable(tmp_path, monkeypatch):
    path = tmp_path / "env.toml"
    path.write_text("sublevel_grid = 512\n")
    monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
    assert load_config()["sublevel_grid"] == 512
