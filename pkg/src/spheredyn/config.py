"""Scenario files: YAML, versioned with ``schema_version``, validated on load.

Every error carries the line of the offending entry so it can be fixed
without hunting. The layout (all sections but ``model``, ``initial`` and
``run`` are optional)::

    schema_version: 1
    model: {kind: chain_pendulum, n: 2, masses: [1, 1], lengths: [1, 1], gravity: 9.81}
    forces: {tau: [0, 0, 0.1], d: [0, 0, 0]}
    initial: {q: [[...], ...], omega: [[...], ...], repair: false}
    run: {formulation: omega, method: rk4, step: 1.0e-3, horizon: 5.0, repair: project,
          dh_method: analytic, outputs: {trajectory: trajectory.csv, summary: summary.json}}
    compare: {bound: 1.0e-6}
    check: {seed: 0, samples: 50, curves: 5, horizon: 1.0, fine_step: 1.0e-4, fine_horizon: 0.5}
    tolerances: {state: 1.0e-9, identities: 1.0e-10, kinematics: 1.0e-12, legendre: 1.0e-10,
                 agreement: 1.0e-6, energy: 1.0e-6, dalembert: 5.0e-5, el_residual: 1.0e-5}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .errors import ConfigError, InvalidParams
from .geometry import STATE_TOL, Rep, SystemState
from .hamiltonian import DH_METHODS
from .integrate import IntegratorSpec, Method, Repair
from .library import ChainForceParams, ChainPendulumParams

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "state": STATE_TOL,
    "identities": 1e-10,
    "kinematics": 1e-12,
    "legendre": 1e-10,
    "agreement": 1e-6,
    "energy": 1e-6,
    "dalembert": 5e-5,
    "el_residual": 1e-5,
}

DEFAULT_CHECK = {"seed": 0, "samples": 50, "curves": 5, "horizon": 1.0, "fine_step": 1e-4, "fine_horizon": 0.5}

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}
_vec3 = {"type": "array", "items": _number, "minItems": 3, "maxItems": 3}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "model", "initial", "run"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {
            "type": "object",
            "required": ["kind", "masses", "lengths"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "chain_pendulum"},
                "n": {"type": "integer", "minimum": 1},
                "masses": {"type": "array", "items": _positive, "minItems": 1},
                "lengths": {"type": "array", "items": _positive, "minItems": 1},
                "gravity": {"type": "number", "minimum": 0},
            },
        },
        "forces": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tau": _vec3, "d": _vec3},
        },
        "initial": {
            "type": "object",
            "required": ["q", "omega"],
            "additionalProperties": False,
            "properties": {
                "q": {"type": "array", "items": _vec3, "minItems": 1},
                "omega": {"type": "array", "items": _vec3, "minItems": 1},
                "repair": {"type": "boolean"},
            },
        },
        "run": {
            "type": "object",
            "required": ["step", "horizon"],
            "additionalProperties": False,
            "properties": {
                "formulation": {"enum": [r.value for r in Rep]},
                "method": {"enum": [m.value for m in Method]},
                "step": _positive,
                "horizon": {"type": "number", "minimum": 0},
                "repair": {"enum": [r.value for r in Repair]},
                "dh_method": {"enum": list(DH_METHODS)},
                "outputs": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"trajectory": {"type": "string"}, "summary": {"type": "string"}},
                },
            },
        },
        "compare": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"bound": _positive},
        },
        "check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "samples": {"type": "integer", "minimum": 1},
                "curves": {"type": "integer", "minimum": 1},
                "horizon": _positive,
                "fine_step": _positive,
                "fine_horizon": _positive,
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {key: _positive for key in DEFAULT_TOLERANCES},
        },
    },
}


@dataclass
class Scenario:
    model: ChainPendulumParams
    forces: ChainForceParams | None
    initial: SystemState  # OMEGA representation
    formulation: Rep
    integrator: IntegratorSpec
    dh_method: str = "analytic"
    trajectory_file: str = "trajectory.csv"
    summary_file: str = "summary.json"
    compare_bound: float = 1e-6
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    check: dict = field(default_factory=lambda: dict(DEFAULT_CHECK))
    source: str = "<config>"


def _node_at(root: yaml.Node | None, path) -> yaml.Node | None:
    """Follow a key/index path through a composed YAML tree, as deep as it goes."""
    node = root
    for part in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == part), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            nxt = node.value[part]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node


def _line(root, path) -> int | None:
    node = _node_at(root, path)
    return None if node is None else node.start_mark.line + 1


def _dotted(path) -> str:
    # list positions are shown 1-based, matching link numbers
    out = ""
    for part in path:
        out += f"[{part + 1}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def parse_scenario(text: str, source: str = "<config>") -> Scenario:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"not valid YAML: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None, source)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)

    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        raise ConfigError(f"{_dotted(path)}: {err.message}", _line(root, path), source)

    def fail(path, message):
        raise ConfigError(f"{_dotted(path)}: {message}", _line(root, path), source)

    m = data["model"]
    n = m.get("n", len(m["masses"]))
    for key in ("masses", "lengths"):
        if len(m[key]) != n:
            fail(["model", key], f"expected {n} entries, got {len(m[key])}")
    try:
        params = ChainPendulumParams(tuple(m["masses"]), tuple(m["lengths"]), m.get("gravity", 9.81))
    except InvalidParams as exc:
        fail(["model"], str(exc))

    forces = None
    if "forces" in data:
        f = data["forces"]
        forces = ChainForceParams(tau=f.get("tau"), d=f.get("d"))

    tol = dict(DEFAULT_TOLERANCES)
    tol.update(data.get("tolerances", {}))
    state_tol = tol["state"]

    init = data["initial"]
    for key in ("q", "omega"):
        if len(init[key]) != n:
            fail(["initial", key], f"expected {n} vectors (one per link), got {len(init[key])}")
    q = np.array(init["q"], dtype=float)
    omega = np.array(init["omega"], dtype=float)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(omega))):
        fail(["initial"], "initial state must be finite")
    norms = np.linalg.norm(q, axis=1)
    repair = bool(init.get("repair", False))
    for i in range(n):
        if norms[i] == 0:
            fail(["initial", "q", i], f"link {i + 1} has q = 0")
        if not repair and abs(norms[i] - 1.0) > state_tol:
            fail(
                ["initial", "q", i],
                f"link {i + 1} has |q| = {norms[i]:.6g}, not 1 within {state_tol:g} (set initial.repair: true to normalize)",
            )
    q = q / norms[:, None]
    radial = np.sum(q * omega, axis=1)
    for i in range(n):
        if not repair and abs(radial[i]) / max(1.0, np.linalg.norm(omega[i])) > state_tol:
            fail(
                ["initial", "omega", i],
                f"link {i + 1} has omega not orthogonal to q (q . omega = {radial[i]:.3e})",
            )
    omega = omega - q * radial[:, None]

    r = data["run"]
    try:
        spec = IntegratorSpec(
            method=r.get("method", "rk4"),
            step=float(r["step"]),
            horizon=float(r["horizon"]),
            repair=r.get("repair", "project"),
        )
    except ValueError as exc:
        fail(["run", "step"], str(exc))
    outputs = r.get("outputs", {})
    check = dict(DEFAULT_CHECK)
    check.update(data.get("check", {}))

    return Scenario(
        model=params,
        forces=forces,
        initial=SystemState(q, omega, Rep.OMEGA, 0.0),
        formulation=Rep(r.get("formulation", "omega")),
        integrator=spec,
        dh_method=r.get("dh_method", "analytic"),
        trajectory_file=outputs.get("trajectory", "trajectory.csv"),
        summary_file=outputs.get("summary", "summary.json"),
        compare_bound=float(data.get("compare", {}).get("bound", 1e-6)),
        tolerances=tol,
        check=check,
        source=source,
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file. OSError propagates unchanged."""
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))
