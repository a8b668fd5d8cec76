"""Scripted reconfiguration behaviors with graph pre/postconditions.

Scripts are data (JSON files), not code: ordered steps with explicit units,
parameter substitution ("$name"), optional derivation of the handshake
approach distance, and rebinding of module ids so one script drives many
fleets.  Execution is atomic: any mid-script failure rolls the world back to
the pre-script snapshot.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Mapping, Optional, Tuple, Union

import numpy as np

from .actuator import InputMode
from .configio import bundled_script_text
from .errors import (
    BusyError,
    ConfigError,
    DomainError,
    LimbsimError,
    NotAVehicleError,
    OccupiedFixtureError,
    PostconditionFailed,
    PreconditionFailed,
    SequenceError,
    StepFailed,
)
from .graph import ModuleKind, PortKind, PortRef, parse_port
from .kinematics import Pose, solve_ik
from .runtime import TWO_PI, World

# --- handshake geometry -------------------------------------------------------


def handshake_approach_distance(d0: float, g_contact: float) -> float:
    """Per-limb horizontal travel for the symmetric gripper handshake."""
    if g_contact < 0:
        raise DomainError("contact spacing must be non-negative")
    if d0 < g_contact:
        raise DomainError(
            f"initial spacing {d0} m is below contact spacing {g_contact} m; already overlapping"
        )
    return (d0 - g_contact) / 2.0


# --- script model ----------------------------------------------------------------


@dataclass(frozen=True)
class SequenceStep:
    op: str  # joint_move | ik_move | gripper | attach | detach | wait_settle
    data: Mapping

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)


@dataclass(frozen=True)
class SequenceScript:
    name: str
    steps: Tuple[SequenceStep, ...]
    preconditions: Tuple[Mapping, ...] = ()
    postconditions: Tuple[Mapping, ...] = ()
    parameters: Mapping[str, float] = field(default_factory=dict)


_STEP_OPS = {"joint_move", "ik_move", "gripper", "attach", "detach", "wait_settle"}


def _resolve_value(value, params):
    if isinstance(value, str):
        negate = value.startswith("-$")
        if not (negate or value.startswith("$")):
            raise ConfigError(f"string values must be $param references, got {value!r}")
        key = value[2:] if negate else value[1:]
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r}")
        return -params[key] if negate else params[key]
    return value


def _resolve(data, params):
    if isinstance(data, dict):
        return {k: _resolve(v, params) for k, v in data.items()}
    if isinstance(data, list):
        return [_resolve(v, params) for v in data]
    if isinstance(data, str) and (data.startswith("$") or data.startswith("-$")):
        return _resolve_value(data, params)
    return data


def _rebind_text(text: str, bindings: Mapping[str, str]) -> str:
    if text in bindings:  # full port reference
        return bindings[text]
    if ":" in text:
        module, port = text.split(":", 1)
        return f"{bindings.get(module, module)}:{port}"
    if "." in text:
        module, rest = text.split(".", 1)
        return f"{bindings.get(module, module)}.{rest}"
    return bindings.get(text, text)


def _rebind(data, bindings):
    if isinstance(data, dict):
        return {
            (_rebind_text(k, bindings) if isinstance(k, str) else k): _rebind(v, bindings)
            for k, v in data.items()
        }
    if isinstance(data, list):
        return [_rebind(v, bindings) for v in data]
    if isinstance(data, str) and not data.startswith("$") and not data.startswith("-$"):
        return _rebind_text(data, bindings)
    return data


def parse_script(doc: dict) -> SequenceScript:
    params = dict(doc.get("parameters", {}))
    for name, spec in doc.get("derived", {}).items():
        formula = spec.get("formula")
        if formula == "handshake_d1":
            params[name] = handshake_approach_distance(
                params[spec["d0"]], params[spec["g_contact"]]
            )
        else:
            raise ConfigError(f"unknown derived formula {formula!r}")
    steps = []
    for i, raw in enumerate(doc.get("steps", [])):
        op = raw.get("op")
        if op not in _STEP_OPS:
            raise ConfigError(f"step {i}: unknown op {op!r}")
        steps.append(SequenceStep(op=op, data=_resolve({k: v for k, v in raw.items() if k != "op"}, params)))
    script = SequenceScript(
        name=doc.get("name", "unnamed"),
        steps=tuple(steps),
        preconditions=tuple(doc.get("preconditions", [])),
        postconditions=tuple(doc.get("postconditions", [])),
        parameters=params,
    )
    _check_script_wellformed(script)
    return script


def _check_script_wellformed(script: SequenceScript) -> None:
    """Every attach must be preceded by a close on one of its gripper
    endpoints that is still in effect, or rely on the attach's own implicit
    close (attach closes its grippers as part of the same atomic step)."""
    opened: set = set()
    for i, step in enumerate(script.steps):
        if step.op == "gripper":
            port = step["port"]
            if step["action"] == "open":
                opened.add(port)
            else:
                opened.discard(port)
        elif step.op == "attach":
            for port in step["ports"]:
                if port in opened:
                    raise ConfigError(
                        f"step {i}: attach on {port} after an explicit open with no re-close"
                    )


def load_script(
    name_or_path: Union[str, Path],
    overrides: Optional[dict] = None,
) -> SequenceScript:
    """Load a bundled script by name or any script file by path.

    ``overrides`` may carry ``parameters`` (merged over the script's own),
    ``bindings`` (module or port renames), and replacement pre/postconditions.
    A script document may also declare ``extends``: its base is loaded first
    and the document's own fields act as overrides.
    """
    path = Path(str(name_or_path))
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text())
    else:
        doc = json.loads(bundled_script_text(str(name_or_path)))
    doc = _apply_extends(doc)
    if overrides:
        doc = _merge_overrides(doc, overrides)
    return parse_script(doc)


def _apply_extends(doc: dict) -> dict:
    base_name = doc.get("extends")
    if not base_name:
        return doc
    base = _apply_extends(json.loads(bundled_script_text(base_name)))
    return _merge_overrides(base, doc)


def _merge_overrides(doc: dict, overrides: dict) -> dict:
    out = dict(doc)
    if "parameters" in overrides:
        out["parameters"] = {**doc.get("parameters", {}), **overrides["parameters"]}
    for key in ("preconditions", "postconditions", "steps", "name", "derived"):
        if key in overrides:
            out[key] = overrides[key]
    bindings = overrides.get("bindings")
    if bindings:
        for key in ("steps", "preconditions", "postconditions"):
            if key in out:
                out[key] = _rebind(out[key], bindings)
    out.pop("extends", None)
    return out


# --- predicates ---------------------------------------------------------------------


def _eval_predicate(world: World, pred: Mapping, initial_edges=None) -> bool:
    graph = world.graph
    kind = pred.get("predicate")
    if kind == "port_free":
        return not graph.is_linked(parse_port(pred["port"]))
    if kind == "port_linked":
        return graph.is_linked(parse_port(pred["port"]))
    if kind == "gripper_open":
        return not graph.is_closed(parse_port(pred["port"]))
    if kind == "gripper_closed":
        return graph.is_closed(parse_port(pred["port"]))
    if kind == "edge_exists":
        a, b = (parse_port(p) for p in pred["ports"])
        edge = graph.edge_at(a)
        return edge is not None and edge.touches(b)
    if kind == "edge_absent":
        a, b = (parse_port(p) for p in pred["ports"])
        edge = graph.edge_at(a)
        return edge is None or not edge.touches(b)
    if kind == "link_count":
        module = pred["module"]
        count = sum(1 for e in graph.edges if module in (e.a.module, e.b.module))
        return count == pred["count"]
    if kind == "component_matches":
        from .templates import get_template, validate_component

        return validate_component(graph, get_template(pred["template"]), pred["member"]).ok
    if kind == "edges_unchanged":
        return initial_edges is not None and graph.edges == initial_edges
    raise ConfigError(f"unknown predicate {kind!r}")


# --- execution -------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceEvent:
    step: int
    op: str
    t_start_s: float
    t_end_s: float
    detail: str = ""


def _world_port_frame(world: World, ref: PortRef) -> np.ndarray:
    node = world.graph.module(ref.module)
    if node.kind is ModuleKind.LIMB:
        # a limb port sits where the rigid fixture it holds sits (identity coupling)
        edge = world.graph.edge_at(ref)
        if edge is not None:
            other = world.graph.module(edge.other(ref).module)
            if other.kind is not ModuleKind.LIMB:
                return other.base_pose @ other.port(edge.other(ref).port).mount
        raise SequenceError(f"cannot locate limb port {ref} in the world")
    return node.base_pose @ node.port(ref.port).mount


def _execute_step(world: World, step: SequenceStep, log: List[SequenceEvent], index: int):
    t0 = world.time_s
    detail = ""
    if step.op == "joint_move":
        mode = InputMode(step.get("mode", "trapezoidal"))
        targets = step["targets_rad"]
        for joint, angle in targets.items():
            world.apply_joint_command(joint, float(angle) / TWO_PI, mode)
        world.run_until_settled(list(targets), tol_rev=step.get("tol_rev"))
        detail = f"{len(targets)} joints"
    elif step.op == "ik_move":
        root = parse_port(step["root"])
        tip = parse_port(step["tip"])
        if "delta_m" in step.data:
            targets = world.apply_ik_command(root, tip, delta_m=step["delta_m"])
        else:
            fixture = parse_port(step["target_fixture"])
            frame = np.linalg.inv(_world_port_frame(world, root)) @ _world_port_frame(
                world, fixture
            )
            chain = world.chain_between(root, tip)
            q0 = world.chain_angles(chain)
            mask = np.array([True, True, True, False, False, False])
            q_sol = solve_ik(chain, Pose.from_matrix(frame), task_mask=mask, seed=q0, pos_tol=1e-6)
            targets = {}
            for jid, angle in zip(chain.joint_ids, q_sol):
                targets[jid] = angle / TWO_PI
                world.apply_joint_command(jid, angle / TWO_PI, InputMode.TRAPEZOIDAL)
        world.run_until_settled(list(targets), tol_rev=step.get("tol_rev"))
        detail = f"{len(targets)} joints"
    elif step.op == "gripper":
        port = parse_port(step["port"])
        if step["action"] == "close":
            world.set_gripper(port, closed=True)
        else:
            edge = world.graph.edge_at(port)
            if edge is None:
                world.set_gripper(port, closed=False)
            else:  # opening a holding gripper releases its link
                world.detach(*edge.endpoints())
        detail = f"{step['action']} {port}"
    elif step.op == "attach":
        a, b = (parse_port(p) for p in step["ports"])
        world.attach(a, b)
        detail = f"{a}+{b}"
    elif step.op == "detach":
        a, b = (parse_port(p) for p in step["ports"])
        world.detach(a, b)
        detail = f"{a}-{b}"
    elif step.op == "wait_settle":
        world.run_until_settled(tol_rev=step.get("tol_rev"))
    log.append(SequenceEvent(index, step.op, t0, world.time_s, detail))


def run_sequence(
    world: World,
    script: SequenceScript,
    log_as: Optional[str] = None,
    overrides: Optional[dict] = None,
) -> List[SequenceEvent]:
    """Execute a script atomically.

    Preconditions are checked against the entering world, postconditions
    against the exiting world; any step failure or unmet condition restores
    the pre-script snapshot and raises.
    """
    if world.busy_with is not None:
        raise BusyError(f"world busy running sequence {world.busy_with!r}")
    checkpoint = world.checkpoint()
    initial_edges = world.graph.edges
    events: List[SequenceEvent] = []
    world.busy_with = script.name
    entry = {"tick": world.state.step_count, "op": "sequence", "name": log_as or script.name}
    if overrides:
        entry["overrides"] = overrides
    world.command_log.append(entry)
    try:
        with world._suppressed_log():
            for i, pred in enumerate(script.preconditions):
                if not _eval_predicate(world, pred, initial_edges):
                    raise PreconditionFailed(
                        f"script {script.name!r} precondition {i} failed: {json.dumps(dict(pred))}"
                    )
            for i, step in enumerate(script.steps):
                try:
                    _execute_step(world, step, events, i)
                except (PreconditionFailed, PostconditionFailed):
                    raise
                except LimbsimError as exc:
                    raise StepFailed(
                        f"script {script.name!r} step {i} ({step.op}) failed: {exc}",
                        step=i,
                        cause=exc.code,
                    ) from exc
            for i, pred in enumerate(script.postconditions):
                if not _eval_predicate(world, pred, initial_edges):
                    raise PostconditionFailed(
                        f"script {script.name!r} postcondition {i} failed: {json.dumps(dict(pred))}"
                    )
    except Exception:
        # atomicity covers engine bugs too, not just domain failures
        world.restore(checkpoint)
        raise
    finally:
        world.busy_with = None
    return events


def run_sequence_by_name(world: World, name: str, overrides: Optional[dict] = None):
    script = load_script(name, overrides=overrides)
    return run_sequence(world, script, log_as=name, overrides=overrides)


# --- vehicle mode transitions ----------------------------------------------------------

VEHICLE_MODE_POSES = {
    "suspension": {"j1": 0.0, "j2": 0.5, "j3": -1.0, "j4": 0.0},
    "steering": {"j1": math.pi / 2, "j2": 0.4, "j3": -0.8, "j4": -math.pi / 2},
}


def vehicle_mode_transition(world: World, target_mode: str, member: Optional[str] = None):
    """Repose the bridging limb between suspension and steering; the edge set
    must be (and is asserted) identical before and after."""
    if target_mode not in VEHICLE_MODE_POSES:
        raise DomainError(f"unknown vehicle mode {target_mode!r}")
    from .templates import find_matching_component, get_template

    template = get_template("vehicle")
    comps = find_matching_component(world.graph, template)
    if member is not None:
        comps = [c for c in comps if member in c]
    if not comps:
        raise NotAVehicleError("no connected component validates as a vehicle")
    comp = comps[0]
    root = sorted(comp)[0]
    limb = next(m for m in sorted(comp) if world.graph.module(m).kind is ModuleKind.LIMB)
    edges_before = world.graph.edges
    start_tick = world.state.step_count
    with world._suppressed_log():
        targets = {}
        for jid, angle in VEHICLE_MODE_POSES[target_mode].items():
            joint = f"{limb}.{jid}"
            targets[joint] = angle / TWO_PI
            world.apply_joint_command(joint, angle / TWO_PI, InputMode.TRAPEZOIDAL)
        world.run_until_settled(list(targets))
    if world.graph.edges != edges_before:
        raise SequenceError("vehicle transition must not change the edge set")
    world.set_vehicle_mode(root, target_mode)
    world.command_log.append(
        {"tick": start_tick, "op": "set_mode", "mode": target_mode, "member": limb}
    )
    return {"component": sorted(comp), "mode": target_mode, "limb": limb}


# --- inchworm --------------------------------------------------------------------------


def inchworm_step(world: World, from_fixture: PortRef, to_fixture: PortRef):
    """Walk a pallet-mounted limb one fixture over: reach the free gripper to
    the target fixture, grasp it, release the old hold."""
    graph = world.graph
    from_spec = graph.port_spec(from_fixture)
    to_spec = graph.port_spec(to_fixture)
    if from_spec.kind is not PortKind.FIXTURE or to_spec.kind is not PortKind.FIXTURE:
        raise SequenceError("inchworm endpoints must be fixtures")
    edge = graph.edge_at(from_fixture)
    if edge is None:
        raise PreconditionFailed(f"no limb grasps {from_fixture}")
    holder = edge.other(from_fixture)
    limb = graph.module(holder.module)
    if limb.kind is not ModuleKind.LIMB:
        raise PreconditionFailed(f"{from_fixture} is held by {holder.module}, not a limb")
    if graph.is_linked(to_fixture):
        raise OccupiedFixtureError(f"target fixture {to_fixture} is occupied")
    free_port = PortRef(holder.module, "tool" if holder.port == "base" else "base")
    if graph.is_linked(free_port):
        raise PreconditionFailed(f"free gripper {free_port} is already linked")

    pallet_links_before = sum(
        1 for e in graph.edges if from_fixture.module in (e.a.module, e.b.module)
    )
    checkpoint = world.checkpoint()
    start_tick = world.state.step_count
    try:
        frame = np.linalg.inv(_world_port_frame(world, from_fixture)) @ _world_port_frame(
            world, to_fixture
        )
        chain = world.chain_between(from_fixture, free_port)
        q0 = world.chain_angles(chain)
        mask = np.array([True, True, True, False, False, False])
        q_sol = solve_ik(chain, Pose.from_matrix(frame), task_mask=mask, seed=q0, pos_tol=1e-6)
        with world._suppressed_log():
            watch = []
            for jid, angle in zip(chain.joint_ids, q_sol):
                world.apply_joint_command(jid, angle / TWO_PI, InputMode.TRAPEZOIDAL)
                watch.append(jid)
            world.run_until_settled(watch)
            world.attach(free_port, to_fixture)
            world.detach(*edge.endpoints())
    except LimbsimError as exc:
        world.restore(checkpoint)
        if isinstance(exc, SequenceError):
            raise
        raise StepFailed(f"inchworm step failed: {exc}", cause=exc.code) from exc

    pallet_links_after = sum(
        1
        for e in world.graph.edges
        if from_fixture.module in (e.a.module, e.b.module)
    )
    if pallet_links_before != pallet_links_after:
        world.restore(checkpoint)
        raise PostconditionFailed("inchworm must preserve the pallet link count")
    displacement = float(
        np.linalg.norm(
            (_world_port_frame(world, to_fixture) - _world_port_frame(world, from_fixture))[:3, 3]
        )
    )
    world.command_log.append(
        {"tick": start_tick, "op": "inchworm", "from": str(from_fixture), "to": str(to_fixture)}
    )
    return {"from": str(from_fixture), "to": str(to_fixture), "displacement_m": displacement}
