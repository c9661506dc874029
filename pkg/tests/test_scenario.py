import copy

import numpy as np
import pytest

from distgeo.dist import frame_at
from distgeo.errors import DimensionMismatchError, ExprSyntaxError, ScenarioError
from distgeo.scenario import (FIXTURES, builtin_fixture, dumps_scenario, load_scenario,
                              loads_scenario, scenario_from_dict, scenario_to_dict,
                              write_scenario)
from distgeo.sff import sobol_points

HEIS_TOML = """
spec_version = 1
name = "demo"

[manifold]
coords = ["x", "y", "z"]
metric = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]

[distribution]
generators = [["1", "0", "-y/2"], ["0", "1", "x/2"]]

[sampling]
box = [[-1, 1], [-1, 1], [-1, 1]]
seed = 3
samples = 16

[tolerances]
classify = 1e-9

[run]
q0 = [0, 0, 0]
v0 = [1, 0, 0]
T = 0.5
dt = 0.01
"""


def _doc(name="HEIS"):
    return copy.deepcopy(FIXTURES[name])


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixture_round_trip(name, tmp_path):
    sc = builtin_fixture(name)
    assert sc.name == name
    text = dumps_scenario(sc)
    back = loads_scenario(text)
    assert dumps_scenario(back) == text
    assert scenario_to_dict(back) == scenario_to_dict(sc)
    path = tmp_path / f"{name}.toml"
    write_scenario(sc, path)
    assert scenario_to_dict(load_scenario(path)) == scenario_to_dict(sc)


def test_parse_full_document():
    sc = loads_scenario(HEIS_TOML)
    assert sc.name == "demo"
    assert sc.manifold.chart == ("x", "y", "z")
    assert len(sc.distribution.generators) == 2
    assert sc.box == ((-1.0, 1.0),) * 3
    assert (sc.seed, sc.samples) == (3, 16)
    assert sc.tol("classify") == 1e-9 and sc.tol("identity") == 1e-8
    assert sc.run == {"q0": (0.0, 0.0, 0.0), "v0": (1.0, 0.0, 0.0), "T": 0.5, "dt": 0.01}
    assert sc.force is None and sc.orientation is None


def test_fixture_name_case_and_unknown():
    assert builtin_fixture("heis").name == "HEIS"
    with pytest.raises(ScenarioError, match="unknown fixture"):
        builtin_fixture("TORUS")


def test_dimension_mismatch():
    doc = _doc()
    doc["distribution"]["generators"][0] = ["1", "0"]
    with pytest.raises(DimensionMismatchError):
        scenario_from_dict(doc)
    doc = _doc()
    doc["manifold"]["metric"] = [["1", "0"], ["0", "1"]]
    with pytest.raises(DimensionMismatchError):
        scenario_from_dict(doc)
    doc = _doc()
    doc["sampling"]["box"] = [[0, 1]]
    with pytest.raises(DimensionMismatchError):
        scenario_from_dict(doc)
    doc = _doc()
    doc["run"]["q0"] = [0, 0]
    with pytest.raises(DimensionMismatchError):
        scenario_from_dict(doc)


def test_expression_errors_are_scenario_errors():
    doc = _doc()
    doc["distribution"]["generators"][0][2] = "-y/"
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(doc)
    assert isinstance(info.value.__cause__, ExprSyntaxError)
    doc = _doc()
    doc["manifold"]["metric"][0][0] = "w + 1"
    with pytest.raises(ScenarioError):
        scenario_from_dict(doc)


@pytest.mark.parametrize("mutate, match", [
    (lambda d: d.update(extra=1), "unknown key"),
    (lambda d: d["manifold"].update(signature=1), "unknown key"),
    (lambda d: d.update(spec_version=2), "spec_version"),
    (lambda d: d.pop("spec_version"), "spec_version"),
    (lambda d: d["sampling"].update(box=[[1, 1], [0, 1], [0, 1]]), "empty"),
    (lambda d: d["sampling"].update(box=[[2, 1], [0, 1], [0, 1]]), "empty"),
    (lambda d: d["sampling"].update(samples=0), "positive"),
    (lambda d: d["sampling"].update(seed=1.5), "integer"),
    (lambda d: d["run"].update(dt=-1), "positive"),
    (lambda d: d["tolerances"].update(classify=0) if "tolerances" in d
     else d.update(tolerances={"classify": 0}), "positive"),
    (lambda d: d["distribution"].update(generators=[]), "non-empty"),
    (lambda d: d.pop("manifold"), "manifold"),
    (lambda d: d["manifold"]["metric"][0].__setitem__(1, "x"), "manifold"),
])
def test_rejections(mutate, match):
    doc = _doc()
    mutate(doc)
    with pytest.raises(ScenarioError, match=match):
        scenario_from_dict(doc)


def test_toml_syntax_and_io_errors(tmp_path):
    with pytest.raises(ScenarioError, match="TOML"):
        loads_scenario("spec_version = = 1")
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_bytes(b"\xff\xfe")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_numbers_accepted_as_expressions():
    doc = _doc("FLAT2")
    doc["manifold"]["metric"] = [[1, 0, 0], [0, 1.5, 0], [0, 0, 1]]
    sc = scenario_from_dict(doc)
    assert sc.manifold.metric_texts()[1][1] == "1.5"


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_frames_on_sampled_points(name):
    sc = builtin_fixture(name)
    pts = sobol_points(sc.box, sc.samples, sc.seed)
    assert pts.shape == (64, 3)
    for p in pts:
        f = frame_at(sc.distribution, p)
        F = np.vstack([f.E, f.Z])
        assert np.max(np.abs(F @ F.T - np.eye(3))) < 1e-10
