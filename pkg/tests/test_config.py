import json

import pytest
import yaml

from risbeam import config as cfgmod
from risbeam.pattern import two_beam_boxes
from risbeam.scene import SceneConfig


def test_bundled_reference_scene():
    cfg = cfgmod.load()
    sc = cfgmod.scene_config(cfg)
    assert sc == SceneConfig()
    assert cfgmod.boxes(cfg) == two_beam_boxes(100e6)
    assert cfg["pattern"]["height"] == "calibrate"
    assert cfg["solver"]["mode"] == "ris"


def test_unknown_keys_rejected(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("scene: {rowz: 3}\n")
    with pytest.raises(cfgmod.ConfigError, match="scene.rowz"):
        cfgmod.load(p)
    p.write_text("pattern: {boxes: [{elevation: [0, 1], azimuth: [0, 1], frequency: [0, 1], hieght: 2}]}\n")
    with pytest.raises(cfgmod.ConfigError, match="hieght"):
        cfgmod.load(p)


@pytest.mark.parametrize("text", ["[1, 2]", "scene: 3", "pattern: {height: tall}",
                                  "solver: {mode: hybrid}", "scene: {rows: [1,\n",
                                  "pattern: {boxes: [{elevation: [0, 1]}]}"])
def test_bad_documents(tmp_path, text):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.load(p)


def test_invalid_values_become_config_errors():
    cfg = cfgmod.normalize({"scene": {"power": -1}})
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.scene_config(cfg)
    cfg = cfgmod.normalize({"solver": {"init": "zeros"}})
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.solver_options(cfg)


def test_empty_document_gives_defaults(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("")
    assert cfgmod.load(p) == cfgmod.normalize({})


def test_round_trip_through_yaml_and_json():
    cfg = cfgmod.as_plain(cfgmod.load())
    assert cfgmod.normalize(yaml.safe_load(cfgmod.dump(cfg))) == cfg
    assert cfgmod.normalize(json.loads(json.dumps(cfg))) == cfg


@pytest.mark.parametrize("spec,want", [("f=25e6", ("f", 25e6)), ("el=-22.5", ("el", -22.5)),
                                       (" az = 33.75", ("az", 33.75))])
def test_parse_cut(spec, want):
    assert cfgmod.parse_cut(spec) == want


@pytest.mark.parametrize("spec", ["x=1", "f", "el=abc", "=3"])
def test_parse_cut_rejects(spec):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_cut(spec)
