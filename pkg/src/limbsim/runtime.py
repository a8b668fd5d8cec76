"""Fixed-step world simulation.

A ``World`` owns an immutable state snapshot (graph + per-joint actuator
states + base poses), advances it in exact ticks, and records telemetry and
a command log so any run can be replayed bit-for-bit from its manifest.
Single writer: one World is driven by one loop; snapshots published to
readers are immutable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import transforms as tf
from .actuator import ActuatorParams, ActuatorState, InputMode, step_actuator
from .configio import graph_from_fleet
from .errors import (
    DomainError,
    InvariantBreach,
    JointLimitError,
    NearSingularError,
    StepFailed,
    UnknownTargetError,
)
from .graph import (
    ConnectionGraph,
    ModuleKind,
    PortRef,
    attach as graph_attach,
    detach_ports as graph_detach_ports,
    extract_chain,
    parse_port,
    set_gripper as graph_set_gripper,
)
from .kinematics import KinematicChain, Pose, forward_kinematics, is_near_singular, solve_ik

TWO_PI = 2.0 * math.pi

# templates whose components drive as differential/unicycle platforms
_WHEELED_TEMPLATES = ("vehicle", "dragon", "minimal", "cargo", "cargo_minimal", "bike")
_GAIT_TEMPLATES = ("spinbot",)


@dataclass(frozen=True)
class SimConfig:
    tick_s: float = 1e-3
    telemetry_decimation: int = 1  # emit every Nth tick
    wheel_radius_m: float = 0.37
    base_speed_cap_m_s: float = 1.0
    wheelbase_m: float = 0.6
    spinbot_cycle_s: float = 12.0
    spinbot_step_m: float = 0.1
    spinbot_swing_rad: float = 0.4
    near_singular_threshold: float = 1e-3
    settle_tol_rev: float = 1e-4
    settle_timeout_s: float = 30.0
    static_loads: Mapping[str, float] = field(default_factory=dict)  # joint -> Nm

    def __post_init__(self):
        if self.tick_s <= 0:
            raise DomainError("tick must be positive")
        if self.telemetry_decimation < 1:
            raise DomainError("telemetry decimation must be >= 1")
        if self.base_speed_cap_m_s <= 0:
            raise DomainError("base speed cap must be positive")

    def to_dict(self) -> dict:
        out = {
            "tick_s": self.tick_s,
            "telemetry_decimation": self.telemetry_decimation,
            "wheel_radius_m": self.wheel_radius_m,
            "base_speed_cap_m_s": self.base_speed_cap_m_s,
            "wheelbase_m": self.wheelbase_m,
            "spinbot_cycle_s": self.spinbot_cycle_s,
            "spinbot_step_m": self.spinbot_step_m,
            "spinbot_swing_rad": self.spinbot_swing_rad,
            "near_singular_threshold": self.near_singular_threshold,
            "settle_tol_rev": self.settle_tol_rev,
            "settle_timeout_s": self.settle_timeout_s,
            "static_loads": dict(self.static_loads),
        }
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "SimConfig":
        return cls(**data)


@dataclass(frozen=True)
class PlanarPose:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0  # rad


@dataclass(frozen=True)
class TelemetryRecord:
    time_s: float
    joint_id: str
    pos_rev: float
    vel_rev_s: float
    current_a: float


@dataclass(frozen=True, eq=False)
class WorldState:
    graph: ConnectionGraph
    joints: Mapping[str, ActuatorState]
    wheel_speeds: Mapping[str, float]  # drive axis -> rad/s
    base_poses: Mapping[str, PlanarPose]  # component root -> planar pose
    vehicle_modes: Mapping[str, str]  # component root -> suspension|steering
    gait_ticks: Mapping[str, int]  # component root -> ticks into gait cycle
    step_count: int = 0


def gripper_gravity_loads(graph: ConnectionGraph, gripper_mass_kg: float, lever_m: float = 0.35) -> Dict[str, float]:
    """Static wrist-load estimate: the tool-side gripper mass hangs off each
    limb's distal joints; expressed as holding torque on j3/j4."""
    loads: Dict[str, float] = {}
    g = 9.81
    for m in graph.modules.values():
        if m.kind is ModuleKind.LIMB:
            loads[f"{m.module_id}.j3"] = gripper_mass_kg * g * lever_m
            loads[f"{m.module_id}.j4"] = gripper_mass_kg * g * lever_m * 1.3
    return loads


def _limb_joint_ids(graph: ConnectionGraph) -> List[str]:
    out = []
    for m in sorted(graph.modules):
        node = graph.modules[m]
        if node.kind is ModuleKind.LIMB:
            out.extend(f"{m}.{j.joint_id}" for j in node.chain.joints)
    return out


def _drive_axes(graph: ConnectionGraph) -> List[str]:
    out = []
    for m in sorted(graph.modules):
        node = graph.modules[m]
        out.extend(f"{m}.{a}" for a in node.drive_axes)
    return out


def _joint_spec(graph: ConnectionGraph, joint_id: str):
    module_id, _, jid = joint_id.rpartition(".")
    node = graph.modules.get(module_id)
    if node is None or node.kind is not ModuleKind.LIMB:
        raise UnknownTargetError(f"unknown joint {joint_id!r}")
    for spec in node.chain.joints:
        if spec.joint_id == jid:
            return spec
    raise UnknownTargetError(f"unknown joint {joint_id!r}")


class World:
    """Single-writer simulation session around an immutable WorldState."""

    def __init__(
        self,
        graph: ConnectionGraph,
        sim: Optional[SimConfig] = None,
        actuator: Optional[ActuatorParams] = None,
        fleet: Optional[dict] = None,
        behaviors: Optional[Mapping[str, str]] = None,
        preset_pose: Optional[Mapping[str, float]] = None,  # joint -> rad
        seed: int = 0,
    ):
        self.sim = sim or SimConfig()
        self.actuator = actuator or ActuatorParams()
        if abs(self.actuator.tick - self.sim.tick_s) > 1e-12:
            self.actuator = replace(self.actuator, loop_rate=1.0 / self.sim.tick_s)
        self.fleet = fleet or {}
        self.seed = seed
        presets = preset_pose or {}
        joints = {
            jid: ActuatorState.at_rest(self.actuator, position=presets.get(jid, 0.0) / TWO_PI)
            for jid in _limb_joint_ids(graph)
        }
        wheels = {axis: 0.0 for axis in _drive_axes(graph)}
        self.state = WorldState(
            graph=graph,
            joints=joints,
            wheel_speeds=wheels,
            base_poses={},
            vehicle_modes={},
            gait_ticks={},
            step_count=0,
        )
        self.telemetry: List[TelemetryRecord] = []
        self.command_log: List[dict] = []
        self.on_batch: List[Callable[["World"], None]] = []
        self.busy_with: Optional[str] = None
        self._behaviors: Dict[str, str] = dict(behaviors or {})
        self._classification: Dict[str, Optional[str]] = {}
        self._suppress_log = 0
        self._classify()

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_fleet(
        cls,
        fleet: dict,
        sim: Optional[SimConfig] = None,
        actuator: Optional[ActuatorParams] = None,
        seed: int = 0,
    ) -> "World":
        graph = graph_from_fleet(fleet)
        sim_cfg = sim
        if sim_cfg is None and fleet.get("sim"):
            sim_cfg = SimConfig.from_dict(fleet["sim"])
        act = actuator
        if act is None and fleet.get("actuator"):
            act = ActuatorParams(**fleet["actuator"])
        behaviors = dict(fleet.get("behaviors") or {})
        presets = dict(fleet.get("preset_pose_rad") or {})
        if fleet.get("template"):
            if not behaviors:
                # a fleet declared by template name pins that behavior for its
                # (single) component, which disambiguates spinbot from bike
                root = sorted(graph.components()[0])[0]
                behaviors[root] = fleet["template"]
            from .templates import get_template

            template = get_template(fleet["template"], aliases=fleet.get("aliases"))
            for joint, angle in template.preset_pose.items():
                presets.setdefault(joint, angle)
        return cls(graph, sim=sim_cfg, actuator=act, fleet=fleet,
                   behaviors=behaviors, preset_pose=presets, seed=seed)

    # -- time ------------------------------------------------------------------

    @property
    def time_s(self) -> float:
        return self.state.step_count * self.sim.tick_s

    @property
    def graph(self) -> ConnectionGraph:
        return self.state.graph

    # -- snapshots ---------------------------------------------------------------

    def checkpoint(self) -> Tuple[WorldState, int, int]:
        return self.state, len(self.telemetry), len(self.command_log)

    def restore(self, checkpoint) -> None:
        state, telemetry_len, log_len = checkpoint
        self.state = state
        del self.telemetry[telemetry_len:]
        del self.command_log[log_len:]
        self._classify()  # topology may have changed since the checkpoint

    def _log(self, entry: dict) -> None:
        if not self._suppress_log:
            self.command_log.append({"tick": self.state.step_count, **entry})

    # -- component classification --------------------------------------------------

    def _classify(self) -> None:
        from .templates import REGISTRY, validate_component

        graph = self.state.graph
        order = list(_WHEELED_TEMPLATES) + list(_GAIT_TEMPLATES)
        new: Dict[str, Optional[str]] = {}
        poses = dict(self.state.base_poses)
        modes = dict(self.state.vehicle_modes)
        gaits = dict(self.state.gait_ticks)
        for comp in graph.components():
            root = sorted(comp)[0]
            declared = self._behaviors.get(root)
            candidates = [declared] + order if declared else order
            label = None
            for name in candidates:
                if name and validate_component(graph, REGISTRY[name], root).ok:
                    label = name
                    break
            new[root] = label
            poses.setdefault(root, PlanarPose())
        # drop stale roots after topology changes
        roots = set(new)
        self._classification = new
        poses = {k: v for k, v in poses.items() if k in roots}
        modes = {k: v for k, v in modes.items() if k in roots}
        gaits = {k: v for k, v in gaits.items() if k in roots}
        if (
            poses != self.state.base_poses
            or modes != self.state.vehicle_modes
            or gaits != self.state.gait_ticks
        ):
            self.state = replace(
                self.state, base_poses=poses, vehicle_modes=modes, gait_ticks=gaits
            )

    def component_root(self, module_id: str) -> str:
        return sorted(self.state.graph.component_of(module_id))[0]

    def classification(self) -> Dict[str, Optional[str]]:
        return dict(self._classification)

    # -- commands -------------------------------------------------------------------

    def apply_joint_command(
        self,
        joint_id: str,
        target_rev: float,
        mode: InputMode = InputMode.TRAPEZOIDAL,
        v_max: Optional[float] = None,
        a_max: Optional[float] = None,
    ) -> None:
        target_rev = float(target_rev)
        state = self.state.joints.get(joint_id)
        if state is None:
            raise UnknownTargetError(f"unknown joint {joint_id!r}")
        spec = _joint_spec(self.state.graph, joint_id)
        lo, hi = spec.position_limits
        if not (lo - 1e-9 <= target_rev * TWO_PI <= hi + 1e-9):
            raise JointLimitError(
                f"{joint_id} target {target_rev} rev outside [{lo / TWO_PI:.4f}, {hi / TWO_PI:.4f}] rev"
            )
        joints = dict(self.state.joints)
        joints[joint_id] = state.with_command(target_rev, mode, self.actuator, v_max, a_max)
        self.state = replace(self.state, joints=joints)
        self._log(
            {
                "op": "joint",
                "joint": joint_id,
                "target_rev": target_rev,
                "mode": mode.value,
                **({"v_max": v_max} if v_max is not None else {}),
                **({"a_max": a_max} if a_max is not None else {}),
            }
        )

    def chain_between(self, root: PortRef, tip: PortRef) -> KinematicChain:
        return extract_chain(self.state.graph, root, tip)

    def chain_angles(self, chain: KinematicChain) -> np.ndarray:
        out = []
        for jid in chain.joint_ids:
            state = self.state.joints.get(jid)
            if state is None:
                raise UnknownTargetError(f"chain joint {jid} has no actuator state")
            out.append(state.servo_position * TWO_PI)
        return np.asarray(out)

    def apply_ik_command(
        self,
        root: PortRef,
        tip: PortRef,
        delta_m: Optional[Sequence[float]] = None,
        target: Optional[Pose] = None,
        pos_tol: float = 1e-8,
    ) -> Dict[str, float]:
        """Solve IK for the chain between two ports and install trapezoidal
        profiles toward the solution.  Returns the per-joint targets (rev)."""
        if (delta_m is None) == (target is None):
            raise DomainError("provide exactly one of delta_m or target")
        chain = self.chain_between(root, tip)
        if chain.dof == 0:
            raise UnknownTargetError("selected chain has no joints")
        q0 = self.chain_angles(chain)
        flagged, sigma = is_near_singular(chain, q0, self.sim.near_singular_threshold)
        if flagged:
            raise NearSingularError(
                f"chain at sigma_min {sigma:.2e} below threshold "
                f"{self.sim.near_singular_threshold:.2e}"
            )
        if target is None:
            target = forward_kinematics(chain, q0).translated(np.asarray(delta_m, dtype=float))
        q_sol = solve_ik(chain, target, seed=q0, pos_tol=pos_tol)
        targets = {}
        for jid, angle in zip(chain.joint_ids, q_sol):
            targets[jid] = float(angle) / TWO_PI
        with self._suppressed_log():
            for jid, rev in targets.items():
                self.apply_joint_command(jid, rev, InputMode.TRAPEZOIDAL)
        self._log(
            {
                "op": "ik",
                "root": str(root),
                "tip": str(tip),
                **(
                    {"delta_m": [float(v) for v in delta_m]}
                    if delta_m is not None
                    else {
                        "target_pos_m": [float(v) for v in target.position],
                        "target_quat_wxyz": [float(v) for v in target.orientation],
                    }
                ),
            }
        )
        return targets

    def set_wheel_speed(self, axis_id: str, speed_rad_s: float) -> float:
        if axis_id not in self.state.wheel_speeds:
            raise UnknownTargetError(f"unknown drive axis {axis_id!r}")
        limit = self.actuator.output_speed_limit * TWO_PI  # same drive as the joints
        clamped = max(-limit, min(limit, speed_rad_s))
        wheels = dict(self.state.wheel_speeds)
        wheels[axis_id] = clamped
        self.state = replace(self.state, wheel_speeds=wheels)
        self._log({"op": "wheel", "axis": axis_id, "speed_rad_s": speed_rad_s})
        return clamped

    def attach(self, port_a: PortRef, port_b: PortRef) -> None:
        graph = graph_attach(self.state.graph, port_a, port_b)
        self.state = replace(self.state, graph=graph)
        self._classify()
        self._log({"op": "attach", "port_a": str(port_a), "port_b": str(port_b)})

    def detach(self, port_a: PortRef, port_b: PortRef):
        graph, report = graph_detach_ports(self.state.graph, port_a, port_b)
        self.state = replace(self.state, graph=graph)
        self._classify()
        self._log({"op": "detach", "port_a": str(port_a), "port_b": str(port_b)})
        return report

    def set_gripper(self, port: PortRef, closed: bool) -> None:
        graph = graph_set_gripper(self.state.graph, port, closed)
        self.state = replace(self.state, graph=graph)
        self._log({"op": "gripper", "port": str(port), "action": "close" if closed else "open"})

    def set_vehicle_mode(self, root: str, mode: str) -> None:
        modes = dict(self.state.vehicle_modes)
        modes[root] = mode
        self.state = replace(self.state, vehicle_modes=modes)

    def enable_spinbot_gait(self, member: str) -> str:
        from .templates import REGISTRY, validate_component

        root = self.component_root(member)
        if not validate_component(self.state.graph, REGISTRY["spinbot"], root).ok:
            raise StepFailed(f"component of {member} does not have the spinbot morphology")
        self._behaviors[root] = "spinbot"
        self._classify()
        gaits = dict(self.state.gait_ticks)
        gaits[root] = 0
        self.state = replace(self.state, gait_ticks=gaits)
        self._log({"op": "gait", "member": member})
        return root

    def _suppressed_log(self):
        world = self

        class _Guard:
            def __enter__(self):
                world._suppress_log += 1

            def __exit__(self, *exc):
                world._suppress_log -= 1
                return False

        return _Guard()

    # -- stepping -----------------------------------------------------------------

    def step(self, dt: float) -> None:
        """Advance by dt, which must be an exact multiple of the tick."""
        ticks = dt / self.sim.tick_s
        n = int(round(ticks))
        if n <= 0 or abs(ticks - n) > 1e-9:
            raise DomainError(f"dt {dt} is not a positive multiple of tick {self.sim.tick_s}")
        state = self.state
        tick = self.sim.tick_s
        loads = self.sim.static_loads
        for _ in range(n):
            joints = {
                jid: step_actuator(st, self.actuator, tick, loads.get(jid, 0.0))
                for jid, st in state.joints.items()
            }
            count = state.step_count + 1
            state = replace(state, joints=joints, step_count=count)
            state = self._integrate_bases(state, tick)
            state = self._advance_gaits(state)
            if count % self.sim.telemetry_decimation == 0:
                t = count * tick
                for jid in sorted(joints):
                    st = joints[jid]
                    self.telemetry.append(
                        TelemetryRecord(t, jid, st.position, st.velocity, st.current)
                    )
        graph = replace(state.graph, world_time=state.step_count * tick)
        self.state = replace(state, graph=graph)
        self._check_invariants()
        for hook in list(self.on_batch):
            hook(self)

    def _integrate_bases(self, state: WorldState, dt: float) -> WorldState:
        poses = None
        for root, label in self._classification.items():
            if label not in _WHEELED_TEMPLATES:
                continue
            comp = state.graph.component_of(root)
            axes = [
                f"{m}.{a}"
                for m in sorted(comp)
                for a in state.graph.modules[m].drive_axes
            ]
            if not axes:
                continue
            omega = sum(state.wheel_speeds[a] for a in axes) / len(axes)
            v = omega * self.sim.wheel_radius_m
            cap = self.sim.base_speed_cap_m_s
            v = max(-cap, min(cap, v))
            if v == 0.0:
                continue
            pose = state.base_poses.get(root, PlanarPose())
            heading = pose.heading
            if state.vehicle_modes.get(root) == "steering":
                steer = self._steer_angle(state, comp)
                heading += v / self.sim.wheelbase_m * math.tan(steer) * dt
            if poses is None:
                poses = dict(state.base_poses)
            poses[root] = PlanarPose(
                x=pose.x + v * math.cos(heading) * dt,
                y=pose.y + v * math.sin(heading) * dt,
                heading=heading,
            )
        return state if poses is None else replace(state, base_poses=poses)

    def _steer_angle(self, state: WorldState, comp) -> float:
        for m in sorted(comp):
            node = state.graph.modules[m]
            if node.kind is ModuleKind.LIMB:
                j2 = state.joints[f"{m}.j2"].position * TWO_PI
                return max(-1.2, min(1.2, j2))
        return 0.0

    def _advance_gaits(self, state: WorldState) -> WorldState:
        if not state.gait_ticks:
            return state
        cycle_ticks = max(1, int(round(self.sim.spinbot_cycle_s / self.sim.tick_s)))
        gaits = dict(state.gait_ticks)
        poses = dict(state.base_poses)
        joints = None
        swing_rev = self.sim.spinbot_swing_rad / TWO_PI
        for root in list(gaits):
            tick_in_cycle = gaits[root]
            comp = state.graph.component_of(root)
            limb = next(
                (m for m in sorted(comp) if state.graph.modules[m].kind is ModuleKind.LIMB),
                None,
            )
            # weight-shift swing: lean one way, then the other
            if limb is not None and tick_in_cycle in (0, cycle_ticks // 2):
                direction = 1.0 if tick_in_cycle == 0 else -1.0
                if joints is None:
                    joints = dict(state.joints)
                for jid in (f"{limb}.j2", f"{limb}.j3"):
                    if jid in joints:
                        joints[jid] = joints[jid].with_command(
                            direction * swing_rev, InputMode.TRAPEZOIDAL, self.actuator
                        )
            gaits[root] = tick_in_cycle + 1
            if gaits[root] >= cycle_ticks:  # one full weight-shift cycle hops forward
                gaits[root] = 0
                pose = poses.get(root, PlanarPose())
                poses[root] = PlanarPose(
                    x=pose.x + self.sim.spinbot_step_m * math.cos(pose.heading),
                    y=pose.y + self.sim.spinbot_step_m * math.sin(pose.heading),
                    heading=pose.heading,
                )
        out = replace(state, gait_ticks=gaits, base_poses=poses)
        if joints is not None:
            out = replace(out, joints=joints)
        return out

    def _check_invariants(self) -> None:
        self.state.graph.check_invariants()
        expected = set(_limb_joint_ids(self.state.graph))
        if set(self.state.joints) != expected:
            raise InvariantBreach(
                "actuator states out of sync with the graph's limb joints",
                snapshot=self.state.graph.to_document(),
            )
        limit = self.actuator.output_speed_limit + 1e-9
        for jid, st in self.state.joints.items():
            if abs(st.velocity) > limit:
                raise InvariantBreach(
                    f"joint {jid} velocity {st.velocity} exceeds {limit}",
                    snapshot=self.state.graph.to_document(),
                )
            if abs(st.current) > self.actuator.peak_current + 1e-9:
                raise InvariantBreach(
                    f"joint {jid} current {st.current} exceeds peak",
                    snapshot=self.state.graph.to_document(),
                )

    # -- settling -------------------------------------------------------------------

    def run_until_settled(
        self,
        joints: Optional[Sequence[str]] = None,
        tol_rev: Optional[float] = None,
        timeout_s: Optional[float] = None,
        batch_s: float = 0.01,
    ) -> float:
        """Step until the selected joints sit at their setpoints; returns the
        simulated time spent.  Raises StepFailed on timeout."""
        tol = self.sim.settle_tol_rev if tol_rev is None else tol_rev
        timeout = self.sim.settle_timeout_s if timeout_s is None else timeout_s
        watch = list(joints) if joints is not None else list(self.state.joints)
        batch_ticks = max(1, int(round(batch_s / self.sim.tick_s)))
        start = self.time_s
        while True:
            if self._settled(watch, tol):
                return self.time_s - start
            if self.time_s - start > timeout:
                raise StepFailed(
                    f"joints did not settle within {timeout} s (tol {tol} rev)"
                )
            self.step(batch_ticks * self.sim.tick_s)

    def _settled(self, joints: Sequence[str], tol: float) -> bool:
        for jid in joints:
            st = self.state.joints[jid]
            profile_done = (
                st.active_profile is None
                or st.elapsed_in_profile >= st.active_profile.duration
            )
            if not profile_done:
                return False
            if abs(st.servo_position - st.setpoint) > tol:
                return False
            if abs(st.velocity) > tol * 10.0:
                return False
        return True

    # -- telemetry & manifests ---------------------------------------------------------

    def export_telemetry(self, path: Union[str, Path]) -> int:
        return write_telemetry_csv(self.telemetry, path)

    def build_manifest(self) -> dict:
        return {
            "version": 1,
            "seed": self.seed,
            "fleet": self.fleet,
            "sim": self.sim.to_dict(),
            "actuator": {
                "gear_ratio": self.actuator.gear_ratio,
                "rated_torque": self.actuator.rated_torque,
                "peak_torque": self.actuator.peak_torque,
                "motor_peak_torque": self.actuator.motor_peak_torque,
                "output_speed_limit": self.actuator.output_speed_limit,
                "current_offset": self.actuator.current_offset,
                "current_slope": self.actuator.current_slope,
                "output_stiffness": self.actuator.output_stiffness,
                "loop_rate": self.actuator.loop_rate,
                "accel_limit": self.actuator.accel_limit,
                "filter_bandwidth": self.actuator.filter_bandwidth,
            },
            "commands": list(self.command_log),
            "duration_ticks": self.state.step_count,
        }

    def save_manifest(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.build_manifest(), indent=2, sort_keys=True))


def write_telemetry_csv(records: Sequence[TelemetryRecord], path: Union[str, Path]) -> int:
    """Write telemetry rows; uses repr() floats so identical runs are
    byte-identical on disk."""
    lines = ["time_s,joint_id,pos_rev,vel_rev_s,current_a"]
    for r in records:
        lines.append(
            f"{float(r.time_s)!r},{r.joint_id},{float(r.pos_rev)!r},"
            f"{float(r.vel_rev_s)!r},{float(r.current_a)!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
    return len(records)


def replay_manifest(manifest: dict) -> World:
    """Recreate a run from its manifest: same fleet, config, and command
    timeline; produces identical telemetry."""
    if manifest.get("version") != 1:
        raise DomainError(f"unsupported manifest version {manifest.get('version')!r}")
    world = World.from_fleet(
        manifest["fleet"],
        sim=SimConfig.from_dict(manifest["sim"]),
        actuator=ActuatorParams(**manifest["actuator"]),
        seed=manifest.get("seed", 0),
    )
    commands = sorted(enumerate(manifest["commands"]), key=lambda kv: (kv[1]["tick"], kv[0]))
    for _, cmd in commands:
        gap = cmd["tick"] - world.state.step_count
        if gap < 0:
            raise DomainError("command log out of order against world time")
        if gap:
            world.step(gap * world.sim.tick_s)
        _apply_logged(world, cmd)
    tail = manifest["duration_ticks"] - world.state.step_count
    if tail > 0:
        world.step(tail * world.sim.tick_s)
    return world


def _apply_logged(world: World, cmd: dict) -> None:
    op = cmd["op"]
    if op == "joint":
        world.apply_joint_command(
            cmd["joint"],
            cmd["target_rev"],
            InputMode(cmd["mode"]),
            cmd.get("v_max"),
            cmd.get("a_max"),
        )
    elif op == "ik":
        if "delta_m" in cmd:
            world.apply_ik_command(
                parse_port(cmd["root"]), parse_port(cmd["tip"]), delta_m=cmd["delta_m"]
            )
        else:
            world.apply_ik_command(
                parse_port(cmd["root"]),
                parse_port(cmd["tip"]),
                target=Pose(
                    np.array(cmd["target_pos_m"]), np.array(cmd["target_quat_wxyz"])
                ),
            )
    elif op == "wheel":
        world.set_wheel_speed(cmd["axis"], cmd["speed_rad_s"])
    elif op == "attach":
        world.attach(parse_port(cmd["port_a"]), parse_port(cmd["port_b"]))
    elif op == "detach":
        world.detach(parse_port(cmd["port_a"]), parse_port(cmd["port_b"]))
    elif op == "gripper":
        world.set_gripper(parse_port(cmd["port"]), cmd["action"] == "close")
    elif op == "gait":
        world.enable_spinbot_gait(cmd["member"])
    elif op == "sequence":
        from .sequences import run_sequence_by_name

        run_sequence_by_name(world, cmd["name"], overrides=cmd.get("overrides"))
    elif op == "inchworm":
        from .sequences import inchworm_step

        inchworm_step(world, parse_port(cmd["from"]), parse_port(cmd["to"]))
    elif op == "set_mode":
        from .sequences import vehicle_mode_transition

        vehicle_mode_transition(world, cmd["mode"], member=cmd.get("member"))
    else:
        raise DomainError(f"unknown logged op {op!r}")
