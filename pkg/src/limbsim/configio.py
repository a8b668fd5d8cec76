"""Config-file loading: actuator parameter files, fleet descriptions, and
bundled data access.

Actuator parameters use a flat ``key = value`` text format with ``#``
comments; fleets, scripts, and manifests are JSON documents with explicit
units in their key names.
"""

from __future__ import annotations

import json
from dataclasses import fields as dataclass_fields
from dataclasses import replace as dataclass_replace
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Union

from .transforms import translation as _translation

from .actuator import ActuatorParams
from .errors import ConfigError
from .graph import (
    ConnectionGraph,
    attach,
    build_graph,
    make_central_body,
    make_dual_wheel,
    make_limb,
    make_pallet,
    make_single_wheel,
    parse_port,
)
from .kinematics import LimbGeometry

_ACTUATOR_KEYS = {f.name for f in dataclass_fields(ActuatorParams)}


def parse_actuator_params(text: str) -> ActuatorParams:
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _ACTUATOR_KEYS:
            raise ConfigError(f"line {lineno}: unknown actuator key {key!r}")
        try:
            values[key] = float(value.strip())
        except ValueError:
            raise ConfigError(f"line {lineno}: {value.strip()!r} is not a number")
    return ActuatorParams(**values)


def load_actuator_params(path: Union[str, Path]) -> ActuatorParams:
    return parse_actuator_params(Path(path).read_text())


def dump_actuator_params(params: ActuatorParams) -> str:
    lines = ["# actuator parameters (units in field docs)"]
    for f in dataclass_fields(ActuatorParams):
        lines.append(f"{f.name} = {getattr(params, f.name)!r}")
    return "\n".join(lines) + "\n"


# --- fleets -------------------------------------------------------------------

_MODULE_FACTORIES = {
    "limb": lambda mid, spec: make_limb(mid, _geometry(spec.get("geometry"))),
    "single_wheel": lambda mid, spec: make_single_wheel(mid),
    "dual_wheel": lambda mid, spec: make_dual_wheel(mid),
    "central_body": lambda mid, spec: make_central_body(mid, spec.get("fixtures", 4)),
    "pallet": lambda mid, spec: make_pallet(
        mid, spec.get("fixtures", 6), spec.get("spacing_m", 0.25)
    ),
}


def _geometry(spec: Optional[dict]) -> Optional[LimbGeometry]:
    if spec is None:
        return None
    known = {f.name for f in dataclass_fields(LimbGeometry)}
    unknown = set(spec) - known
    if unknown:
        raise ConfigError(f"unknown limb geometry keys: {sorted(unknown)}")
    return LimbGeometry(**spec)


def graph_from_fleet(fleet: dict) -> ConnectionGraph:
    """Build a connection graph from a fleet description dict.

    A fleet either names a registry ``template`` or lists explicit
    ``modules`` (id, kind, options) and ``edges`` (pairs of "module:port").
    """
    aliases = fleet.get("aliases", {})
    if "template" in fleet:
        from .templates import instantiate_template

        return instantiate_template(fleet["template"], aliases=aliases)
    if "modules" not in fleet:
        raise ConfigError("fleet needs either 'template' or 'modules'")
    modules = []
    default_geometry = fleet.get("limb_geometry")
    for spec in fleet["modules"]:
        try:
            kind = spec["kind"]
            mid = spec["id"]
        except KeyError as missing:
            raise ConfigError(f"fleet module entry missing {missing}")
        if kind not in _MODULE_FACTORIES:
            raise ConfigError(f"unknown module kind {kind!r}")
        if kind == "limb" and "geometry" not in spec and default_geometry:
            spec = {**spec, "geometry": default_geometry}
        node = _MODULE_FACTORIES[kind](mid, spec)
        if "pose_m" in spec:
            x, y, z = spec["pose_m"]
            node = dataclass_replace(node, base_pose=_translation(x, y, z))
        modules.append(node)
    graph = build_graph(modules)
    for pair in fleet.get("edges", []):
        if len(pair) != 2:
            raise ConfigError(f"fleet edge must be a pair, got {pair!r}")
        graph = attach(graph, parse_port(pair[0]), parse_port(pair[1]))
    graph.check_invariants()
    return graph


def load_fleet(path: Union[str, Path]) -> dict:
    try:
        fleet = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"fleet file {path}: {exc}")
    if not isinstance(fleet, dict):
        raise ConfigError(f"fleet file {path} must hold a JSON object")
    return fleet


def bundled_fleet(name: str) -> dict:
    text = resources.files("limbsim.data.fleets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def bundled_script_text(name: str) -> str:
    return resources.files("limbsim.data.scripts").joinpath(f"{name}.json").read_text()


def list_bundled_scripts() -> list:
    box = resources.files("limbsim.data.scripts")
    return sorted(p.name[:-5] for p in box.iterdir() if p.name.endswith(".json"))
