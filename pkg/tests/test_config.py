import json

import pytest

from maxdisk.config import RunConfig, load_config


def test_defaults_share_lemma_config():
    cfg = load_config()
    assert cfg.driver.lemma is cfg.lemma


def test_json_roundtrip(tmp_path):
    cfg = load_config()
    cfg.labyrinth.N = 16
    cfg.lemma.a3_power = 3.0
    cfg.lemma.runge_ladder = ((16, 8), (32, 16))
    path = tmp_path / "run.json"
    path.write_text(cfg.to_json())
    back = load_config(path)
    assert back.to_dict() == cfg.to_dict()
    assert back.driver.lemma is back.lemma


def test_partial_document(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"labyrinth": {"N": 32}}))
    cfg = load_config(path)
    assert cfg.labyrinth.N == 32 and cfg.runge.alpha == 10.0


@pytest.mark.parametrize("bad", [
    {"runge": {"resolution": 1000}},
    {"lemma": {"third_coord_tol": 0.0}},
])
def test_validation_errors(bad):
    with pytest.raises(ValueError):
        RunConfig.from_dict(bad)


def test_unknown_field():
    with pytest.raises(TypeError):
        RunConfig.from_dict({"seed": {"radius": 2.0}})
