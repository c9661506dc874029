"""TOML scenarios and the built-in fixtures.

Schema (``spec_version = 1`` is required, unknown keys are rejected)::

    spec_version = 1
    name = "HEIS"                          # optional

    [manifold]
    coords = ["x", "y", "z"]
    metric = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]

    [distribution]                         # optional
    generators = [["1", "0", "-y/2"], ["0", "1", "x/2"]]
    normal_orientation = ["-x", "-y", "-z"]   # optional, corank 1 only

    [force]                                # optional
    components = ["1", "0", "0"]

    [sampling]                             # required for classification
    box = [[-1, 1], [-1, 1], [-1, 1]]
    seed = 0
    samples = 64

    [tolerances]                           # optional overrides
    classify = 1e-8
    identity = 1e-8
    section = 1e-8

    [run]                                  # optional integration defaults
    q0 = [0, 0, 0]
    v0 = [1, 0, 0]
    T = 1.0
    dt = 1e-3
"""

import math
from dataclasses import dataclass, field

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import tomli_w

from .dist import DistributionModel
from .errors import DimensionMismatchError, InputError, ScenarioError
from .riemann import ManifoldModel, VectorFieldModel

__all__ = ["ScenarioModel", "load_scenario", "loads_scenario", "write_scenario",
           "dumps_scenario", "scenario_from_dict", "scenario_to_dict",
           "builtin_fixture", "FIXTURES", "SPEC_VERSION"]

SPEC_VERSION = 1
TOLERANCE_KEYS = ("classify", "identity", "section")
_SECTIONS = {
    "manifold": {"coords", "metric"},
    "distribution": {"generators", "normal_orientation"},
    "force": {"components"},
    "sampling": {"box", "seed", "samples"},
    "tolerances": set(TOLERANCE_KEYS),
    "run": {"q0", "v0", "T", "dt"},
}


@dataclass(frozen=True)
class ScenarioModel:
    manifold: ManifoldModel
    distribution: DistributionModel = None
    force: VectorFieldModel = None
    box: tuple = None
    seed: int = 0
    samples: int = 64
    tolerances: dict = field(default_factory=dict)
    orientation: VectorFieldModel = None
    run: dict = field(default_factory=dict)
    name: str = None

    def tol(self, key, default=1e-8):
        return self.tolerances.get(key, default)


def _fail(msg):
    raise ScenarioError(msg)


def _text(value, where):
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        _fail(f"{where}: expected an expression string, got {value!r}")
    return value if isinstance(value, str) else repr(float(value))


def _parse_field(texts, chart, where):
    if not isinstance(texts, list):
        _fail(f"{where}: expected a list of expressions")
    if len(texts) != len(chart):
        raise DimensionMismatchError(
            f"{where} has {len(texts)} components but the chart has dimension {len(chart)}")
    try:
        return VectorFieldModel.from_text([_text(t, where) for t in texts], chart)
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _number_list(values, m, where):
    if not isinstance(values, list) or len(values) != m:
        raise DimensionMismatchError(f"{where} must have {m} entries")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"{where}: expected numbers, got {v!r}")
        out.append(float(v))
    return tuple(out)


def scenario_from_dict(data):
    """Validate a decoded TOML document into a :class:`ScenarioModel`."""
    if not isinstance(data, dict):
        _fail("scenario must be a table")
    allowed = set(_SECTIONS) | {"spec_version", "name"}
    for key in data:
        if key not in allowed:
            _fail(f"unknown key {key!r}")
    for sec, keys in _SECTIONS.items():
        if sec in data:
            if not isinstance(data[sec], dict):
                _fail(f"[{sec}] must be a table")
            for key in data[sec]:
                if key not in keys:
                    _fail(f"unknown key {key!r} in [{sec}]")
    if data.get("spec_version") != SPEC_VERSION:
        _fail(f"spec_version must be {SPEC_VERSION}")
    name = data.get("name")
    if name is not None and not isinstance(name, str):
        _fail("name must be a string")

    man = data.get("manifold")
    if man is None or "coords" not in man or "metric" not in man:
        _fail("[manifold] with coords and metric is required")
    coords = man["coords"]
    if not isinstance(coords, list) or not coords:
        _fail("manifold.coords must be a non-empty list of names")
    m = len(coords)
    metric = man["metric"]
    if not isinstance(metric, list) or len(metric) != m or any(
            not isinstance(r, list) or len(r) != m for r in metric):
        raise DimensionMismatchError(f"manifold.metric must be a {m}x{m} grid")
    try:
        manifold = ManifoldModel.from_text(
            coords, [[_text(e, "manifold.metric") for e in row] for row in metric])
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError(f"manifold: {exc}") from exc

    distribution = orientation = None
    if "distribution" in data:
        d = data["distribution"]
        gens = d.get("generators")
        if not isinstance(gens, list) or not gens:
            _fail("distribution.generators must be a non-empty list")
        fields = tuple(_parse_field(g, manifold.chart, f"distribution.generators[{i}]")
                       for i, g in enumerate(gens))
        try:
            distribution = DistributionModel(manifold, fields)
        except InputError as exc:
            raise ScenarioError(f"distribution: {exc}") from exc
        if "normal_orientation" in d:
            orientation = _parse_field(d["normal_orientation"], manifold.chart,
                                       "distribution.normal_orientation")

    force = None
    if "force" in data:
        force = _parse_field(data["force"].get("components"), manifold.chart,
                             "force.components")

    box, seed, samples = None, 0, 64
    if "sampling" in data:
        s = data["sampling"]
        if "box" in s:
            raw = s["box"]
            if not isinstance(raw, list) or len(raw) != m:
                raise DimensionMismatchError(f"sampling.box must have {m} intervals")
            box = tuple(_number_list(iv, 2, f"sampling.box[{i}]") for i, iv in enumerate(raw))
            for i, (lo, hi) in enumerate(box):
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    _fail(f"sampling.box[{i}] is empty")
        seed = s.get("seed", 0)
        samples = s.get("samples", 64)
        for key, val in (("seed", seed), ("samples", samples)):
            if isinstance(val, bool) or not isinstance(val, int):
                _fail(f"sampling.{key} must be an integer")
        if samples < 1:
            _fail("sampling.samples must be positive")

    tolerances = {}
    for key, val in data.get("tolerances", {}).items():
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
            _fail(f"tolerances.{key} must be a positive number")
        tolerances[key] = float(val)

    run = {}
    r = data.get("run", {})
    for key in ("q0", "v0"):
        if key in r:
            run[key] = _number_list(r[key], m, f"run.{key}")
    for key in ("T", "dt"):
        if key in r:
            val = r[key]
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not val > 0:
                _fail(f"run.{key} must be a positive number")
            run[key] = float(val)

    return ScenarioModel(manifold, distribution, force, box, seed, samples,
                         tolerances, orientation, run, name)


def scenario_to_dict(s):
    out = {"spec_version": SPEC_VERSION}
    if s.name is not None:
        out["name"] = s.name
    out["manifold"] = {"coords": list(s.manifold.chart), "metric": s.manifold.metric_texts()}
    if s.distribution is not None:
        d = {"generators": [X.texts() for X in s.distribution.generators]}
        if s.orientation is not None:
            d["normal_orientation"] = s.orientation.texts()
        out["distribution"] = d
    if s.force is not None:
        out["force"] = {"components": s.force.texts()}
    sampling = {"seed": s.seed, "samples": s.samples}
    if s.box is not None:
        sampling["box"] = [list(iv) for iv in s.box]
    out["sampling"] = sampling
    if s.tolerances:
        out["tolerances"] = dict(s.tolerances)
    if s.run:
        out["run"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in s.run.items()}
    return out


def loads_scenario(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"TOML syntax error: {exc}") from exc
    return scenario_from_dict(data)


def load_scenario(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        return loads_scenario(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not UTF-8") from exc


def dumps_scenario(s):
    return tomli_w.dumps(scenario_to_dict(s))


def write_scenario(s, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scenario(s))


# -- fixtures -------------------------------------------------------------------

_I3 = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]

FIXTURES = {
    "FLAT2": {
        "spec_version": 1, "name": "FLAT2",
        "manifold": {"coords": ["x", "y", "z"], "metric": _I3},
        "distribution": {"generators": [["1", "0", "0"], ["0", "1", "0"]]},
        "sampling": {"box": [[-1, 1], [-1, 1], [-1, 1]], "seed": 0, "samples": 64},
        "run": {"q0": [0, 0, 0], "v0": [1, 0.5, 0], "T": 1.0, "dt": 1e-3},
    },
    "HEIS": {
        "spec_version": 1, "name": "HEIS",
        "manifold": {"coords": ["x", "y", "z"], "metric": _I3},
        "distribution": {"generators": [["1", "0", "-y/2"], ["0", "1", "x/2"]]},
        "sampling": {"box": [[-1, 1], [-1, 1], [-1, 1]], "seed": 0, "samples": 64},
        "run": {"q0": [0, 0, 0], "v0": [1, 0, 0], "T": 1.0, "dt": 1e-3},
    },
    "SPHERE": {
        "spec_version": 1, "name": "SPHERE",
        "manifold": {"coords": ["x", "y", "z"], "metric": _I3},
        # tangent to the spheres about the origin; independent where x != 0
        "distribution": {"generators": [["-y", "x", "0"], ["-z", "0", "x"]],
                         "normal_orientation": ["-x", "-y", "-z"]},
        "sampling": {"box": [[0.5, 2.5], [-1, 1], [-1, 1]], "seed": 0, "samples": 64},
        "run": {"q0": [2, 0, 0], "v0": [0, 1, 0], "T": 1.0, "dt": 1e-3},
    },
    "KNIFE": {
        "spec_version": 1, "name": "KNIFE",
        "manifold": {"coords": ["x", "y", "theta"], "metric": _I3},
        "distribution": {"generators": [["cos(theta)", "sin(theta)", "0"], ["0", "0", "1"]]},
        "force": {"components": ["1", "0", "0"]},
        "sampling": {"box": [[-1, 1], [-1, 1], [-3, 3]], "seed": 0, "samples": 64},
        "run": {"q0": [0, 0, 0], "v0": [0, 0, 1], "T": 6.283, "dt": 1e-3},
    },
}


def builtin_fixture(name):
    key = str(name).upper()
    if key not in FIXTURES:
        raise ScenarioError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}")
    return scenario_from_dict(FIXTURES[key])
