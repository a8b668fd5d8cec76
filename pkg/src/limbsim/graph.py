"""Connection graph: modules, connector ports, and monogamous links.

Graphs are immutable snapshots; every mutation returns a new snapshot and
rejects anything that would violate monogamy or the gender rules (it never
repairs silently).  Gripper-gripper links are genderless; gripper-fixture
links are male-into-fixture; fixture-fixture is forbidden.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from . import transforms as tf
from .errors import (
    AmbiguousPathError,
    EdgeNotFound,
    GraphError,
    GripperLinkedError,
    IncompatiblePorts,
    InvariantBreach,
    MonogamyViolation,
    NoPathError,
    SelfAttachError,
    UnknownTargetError,
)
from .kinematics import KinematicChain, LimbGeometry, limb_template, reverse_chain


class PortKind(enum.Enum):
    GRIPPER = "gripper"
    FIXTURE = "fixture"


class EdgeKind(enum.Enum):
    GENDERLESS_GRIP = "genderless_grip"
    MALE_INTO_FIXTURE = "male_into_fixture"


class ModuleKind(enum.Enum):
    LIMB = "limb"
    SINGLE_WHEEL = "single_wheel"
    DUAL_WHEEL = "dual_wheel"
    CENTRAL_BODY = "central_body"
    PALLET = "pallet"


class PortRef(NamedTuple):
    module: str
    port: str

    def __str__(self):
        return f"{self.module}:{self.port}"


def parse_port(text: str) -> PortRef:
    try:
        module, port = text.split(":")
    except ValueError:
        raise GraphError(f"port reference must look like 'module:port', got {text!r}")
    return PortRef(module, port)


@dataclass(frozen=True, eq=False)
class PortSpec:
    port_id: str
    kind: PortKind
    mount: np.ndarray = field(default_factory=tf.identity)  # module frame -> port frame


@dataclass(frozen=True, eq=False)
class ModuleNode:
    module_id: str
    kind: ModuleKind
    ports: Tuple[PortSpec, ...]
    chain: Optional[KinematicChain] = None  # limbs only
    drive_axes: Tuple[str, ...] = ()  # wheels only
    base_pose: np.ndarray = field(default_factory=tf.identity)

    def port(self, port_id: str) -> PortSpec:
        for p in self.ports:
            if p.port_id == port_id:
                return p
        raise UnknownTargetError(f"module {self.module_id} has no port {port_id!r}")


@dataclass(frozen=True)
class Edge:
    a: PortRef
    b: PortRef
    kind: EdgeKind

    def __post_init__(self):
        if self.b < self.a:  # canonical orientation so set semantics hold
            first, second = self.b, self.a
            object.__setattr__(self, "a", first)
            object.__setattr__(self, "b", second)

    def endpoints(self) -> Tuple[PortRef, PortRef]:
        return self.a, self.b

    def touches(self, ref: PortRef) -> bool:
        return self.a == ref or self.b == ref

    def other(self, ref: PortRef) -> PortRef:
        if ref == self.a:
            return self.b
        if ref == self.b:
            return self.a
        raise GraphError(f"{ref} is not an endpoint of {self}")


@dataclass(frozen=True, eq=False)
class ConnectionGraph:
    modules: Dict[str, ModuleNode]
    edges: frozenset = frozenset()
    closed_grippers: frozenset = frozenset()  # PortRefs currently closed
    world_time: float = 0.0

    def __eq__(self, other):
        if not isinstance(other, ConnectionGraph):
            return NotImplemented
        return (
            set(self.modules) == set(other.modules)
            and self.edges == other.edges
            and self.closed_grippers == other.closed_grippers
        )

    # -- lookups ----------------------------------------------------------

    def module(self, module_id: str) -> ModuleNode:
        try:
            return self.modules[module_id]
        except KeyError:
            raise UnknownTargetError(f"unknown module {module_id!r}")

    def port_spec(self, ref: PortRef) -> PortSpec:
        return self.module(ref.module).port(ref.port)

    def edge_at(self, ref: PortRef) -> Optional[Edge]:
        for e in self.edges:
            if e.touches(ref):
                return e
        return None

    def is_linked(self, ref: PortRef) -> bool:
        return self.edge_at(ref) is not None

    def is_closed(self, ref: PortRef) -> bool:
        return ref in self.closed_grippers

    def all_ports(self) -> List[PortRef]:
        return [
            PortRef(m.module_id, p.port_id)
            for m in self.modules.values()
            for p in m.ports
        ]

    # -- connectivity ------------------------------------------------------

    def neighbors(self, module_id: str) -> List[str]:
        out = []
        for e in self.edges:
            if e.a.module == module_id:
                out.append(e.b.module)
            elif e.b.module == module_id:
                out.append(e.a.module)
        return out

    def component_of(self, module_id: str) -> frozenset:
        self.module(module_id)
        seen = {module_id}
        queue = [module_id]
        while queue:
            current = queue.pop()
            for nxt in self.neighbors(current):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return frozenset(seen)

    def components(self) -> List[frozenset]:
        remaining = set(self.modules)
        out = []
        while remaining:
            comp = self.component_of(next(iter(remaining)))
            out.append(comp)
            remaining -= comp
        return sorted(out, key=lambda c: sorted(c)[0])

    # -- invariants ----------------------------------------------------------

    def check_invariants(self) -> None:
        seen_ports: set = set()
        for e in self.edges:
            if e.a.module == e.b.module:
                raise InvariantBreach(f"self edge on module {e.a.module}", snapshot=self.to_document())
            for ref in e.endpoints():
                if ref in seen_ports:
                    raise InvariantBreach(f"port {ref} linked twice", snapshot=self.to_document())
                seen_ports.add(ref)
                spec = self.port_spec(ref)
                if spec.kind is PortKind.GRIPPER and ref not in self.closed_grippers:
                    raise InvariantBreach(f"linked gripper {ref} is open", snapshot=self.to_document())
            kinds = {self.port_spec(e.a).kind, self.port_spec(e.b).kind}
            if kinds == {PortKind.GRIPPER} and e.kind is not EdgeKind.GENDERLESS_GRIP:
                raise InvariantBreach(f"edge {e} should be genderless", snapshot=self.to_document())
            if kinds == {PortKind.GRIPPER, PortKind.FIXTURE} and e.kind is not EdgeKind.MALE_INTO_FIXTURE:
                raise InvariantBreach(f"edge {e} should be male-into-fixture", snapshot=self.to_document())
            if kinds == {PortKind.FIXTURE}:
                raise InvariantBreach(f"fixture-fixture edge {e}", snapshot=self.to_document())

    # -- export ---------------------------------------------------------------

    def to_document(self) -> dict:
        """Canonically ordered plain-data description for golden files."""
        return {
            "modules": [
                {
                    "id": m.module_id,
                    "kind": m.kind.value,
                    "ports": [
                        {
                            "id": p.port_id,
                            "kind": p.kind.value,
                            "state": (
                                ("closed" if PortRef(m.module_id, p.port_id) in self.closed_grippers else "open")
                                if p.kind is PortKind.GRIPPER
                                else None
                            ),
                            "linked": self.is_linked(PortRef(m.module_id, p.port_id)),
                        }
                        for p in m.ports
                    ],
                    "drive_axes": list(m.drive_axes),
                }
                for m in sorted(self.modules.values(), key=lambda m: m.module_id)
            ],
            "edges": sorted(
                [[str(e.a), str(e.b), e.kind.value] for e in self.edges]
            ),
            "time_s": self.world_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class DetachReport:
    components: Tuple[frozenset, ...]
    split: bool
    free_floating: Tuple[frozenset, ...]  # components with no pallet anchor


# --- mutations ---------------------------------------------------------------


def attach(graph: ConnectionGraph, port_a: PortRef, port_b: PortRef) -> ConnectionGraph:
    """Link two free ports; grippers involved close as part of the step."""
    spec_a = graph.port_spec(port_a)
    spec_b = graph.port_spec(port_b)
    if port_a.module == port_b.module:
        raise SelfAttachError(f"cannot link two ports of module {port_a.module}")
    if graph.is_linked(port_a):
        raise MonogamyViolation(f"port {port_a} already holds a link")
    if graph.is_linked(port_b):
        raise MonogamyViolation(f"port {port_b} already holds a link")
    kinds = (spec_a.kind, spec_b.kind)
    if kinds == (PortKind.GRIPPER, PortKind.GRIPPER):
        kind = EdgeKind.GENDERLESS_GRIP
    elif PortKind.GRIPPER in kinds and PortKind.FIXTURE in kinds:
        kind = EdgeKind.MALE_INTO_FIXTURE
    else:
        raise IncompatiblePorts(f"cannot link {spec_a.kind.value} to {spec_b.kind.value}")
    closed = set(graph.closed_grippers)
    for ref, spec in ((port_a, spec_a), (port_b, spec_b)):
        if spec.kind is PortKind.GRIPPER:
            closed.add(ref)
    return replace(
        graph,
        edges=graph.edges | {Edge(port_a, port_b, kind)},
        closed_grippers=frozenset(closed),
    )


def detach(graph: ConnectionGraph, edge: Edge) -> Tuple[ConnectionGraph, DetachReport]:
    """Remove a link, open gripper endpoints, and report the resulting split."""
    if edge not in graph.edges:
        raise EdgeNotFound(f"edge {edge.a}--{edge.b} not in graph")
    closed = set(graph.closed_grippers)
    for ref in edge.endpoints():
        if graph.port_spec(ref).kind is PortKind.GRIPPER:
            closed.discard(ref)
    new_graph = replace(graph, edges=graph.edges - {edge}, closed_grippers=frozenset(closed))
    comp_a = new_graph.component_of(edge.a.module)
    comps = [comp_a]
    if edge.b.module not in comp_a:
        comps.append(new_graph.component_of(edge.b.module))
    pallet_ids = {m.module_id for m in graph.modules.values() if m.kind is ModuleKind.PALLET}
    free = tuple(c for c in comps if not (c & pallet_ids))
    return new_graph, DetachReport(tuple(comps), split=len(comps) > 1, free_floating=free)


def detach_ports(graph: ConnectionGraph, port_a: PortRef, port_b: PortRef):
    edge = graph.edge_at(port_a)
    if edge is None or not edge.touches(port_b):
        raise EdgeNotFound(f"no edge between {port_a} and {port_b}")
    return detach(graph, edge)


def set_gripper(graph: ConnectionGraph, ref: PortRef, closed: bool) -> ConnectionGraph:
    """Open or close a gripper.  Opening a linked gripper is rejected; release
    a link through detach instead."""
    spec = graph.port_spec(ref)
    if spec.kind is not PortKind.GRIPPER:
        raise GraphError(f"{ref} is a fixture; fixtures have no open/closed state")
    if not closed and graph.is_linked(ref):
        raise GripperLinkedError(f"gripper {ref} holds a link; detach it first")
    current = set(graph.closed_grippers)
    if closed:
        current.add(ref)
    else:
        current.discard(ref)
    return replace(graph, closed_grippers=frozenset(current))


# --- chain extraction ----------------------------------------------------------

# Port frames carry their outward mating normal on +x, so two mated ports
# face each other through a half-turn.  A limb's tool frame coincides with
# its tool port; its base port looks back out of the chain, hence the flip
# when entering or leaving a limb through the base.
GRIPPER_INTERFACE = tf.rot_y(math.pi)


def _module_segment(module: ModuleNode, in_port: str, out_port: str):
    """Chain contribution for traversing a module from in_port to out_port:
    (entry adjust, segment, exit adjust, drive axes)."""
    if module.kind is ModuleKind.LIMB:
        if (in_port, out_port) == ("base", "tool"):
            return GRIPPER_INTERFACE, module.chain, tf.identity(), ()
        if (in_port, out_port) == ("tool", "base"):
            return tf.identity(), reverse_chain(module.chain), GRIPPER_INTERFACE, ()
        raise GraphError(f"limb {module.module_id} traversed {in_port}->{out_port}")
    # rigid module: fixed transform between the two port mounts
    t = tf.inverse(module.port(in_port).mount) @ module.port(out_port).mount
    axes = tuple(f"{module.module_id}.{a}" for a in module.drive_axes)
    return tf.identity(), t, tf.identity(), axes


class _ChainBuilder:
    def __init__(self):
        self.joints: List = []
        self.carry = tf.identity()
        self.drive_axes: List[str] = []

    def add_transform(self, t: np.ndarray):
        self.carry = self.carry @ t

    def add_chain(self, chain: KinematicChain, prefix: str):
        self.carry = self.carry @ chain.base_frame
        for j in chain.joints:
            offset = self.carry @ j.parent_offset
            self.joints.append(replace(j, joint_id=f"{prefix}.{j.joint_id}", parent_offset=offset))
            self.carry = tf.identity()
        self.carry = self.carry @ chain.tool_offset

    def finish(self, name: str) -> KinematicChain:
        return KinematicChain(
            joints=tuple(self.joints),
            base_frame=tf.identity(),
            tool_offset=self.carry,
            drive_axes=tuple(self.drive_axes),
            name=name,
        )


def _port_paths(graph: ConnectionGraph, root: PortRef, tip: PortRef):
    """All simple module paths from root port to tip port."""
    results = []

    def visit(module_id: str, in_port: str, visited: frozenset, segments: tuple, at_root: bool):
        module = graph.module(module_id)
        if module_id == tip.module:
            if in_port == tip.port:
                results.append(segments)
            else:
                results.append(segments + ((module_id, in_port, tip.port, None),))
            # a longer loop back into this module would revisit it; stop here
            return
        for p in module.ports:
            # mid-path the entry port's own edge leads back where we came
            # from; at the root it may lead forward and counts as an exit
            if p.port_id == in_port and not at_root:
                continue
            ref = PortRef(module_id, p.port_id)
            edge = graph.edge_at(ref)
            if edge is None:
                continue
            far = edge.other(ref)
            if far.module in visited:
                continue
            visit(
                far.module,
                far.port,
                visited | {far.module},
                segments + ((module_id, in_port, p.port_id, edge),),
                False,
            )

    visit(root.module, root.port, frozenset({root.module}), (), True)
    return results


def extract_chain(
    graph: ConnectionGraph,
    root_port: PortRef,
    tip_port: PortRef,
    interface: Optional[np.ndarray] = None,
) -> KinematicChain:
    """Serial chain along the unique simple path between two ports.

    Limbs contribute their joints (reversed when traversed tool-to-base);
    rigid modules contribute fixed transforms plus their drive axes, recorded
    separately on the returned chain.  The chain's base frame is the root
    port's interface frame.
    """
    graph.port_spec(root_port)
    graph.port_spec(tip_port)
    coupler = GRIPPER_INTERFACE if interface is None else interface
    paths = _port_paths(graph, root_port, tip_port)
    if not paths:
        raise NoPathError(f"no path between {root_port} and {tip_port}")
    if len(paths) > 1:
        raise AmbiguousPathError(
            f"{len(paths)} paths between {root_port} and {tip_port}; topology has a cycle"
        )
    path = paths[0]
    builder = _ChainBuilder()
    for i, (module_id, in_port, out_port, edge) in enumerate(path):
        module = graph.module(module_id)
        if in_port != out_port:
            entry, seg, exit_adjust, axes = _module_segment(module, in_port, out_port)
            at_root = i == 0
            at_tip = edge is None
            if not at_root:  # a root chain starts in the module's own frame
                builder.add_transform(entry)
            if isinstance(seg, KinematicChain):
                builder.add_chain(seg, module_id)
            else:
                builder.add_transform(seg)
            if not at_tip:  # likewise the tip ends in the module's own frame
                builder.add_transform(exit_adjust)
            builder.drive_axes.extend(axes)
        if edge is not None:
            builder.add_transform(coupler)
    return builder.finish(name=f"{root_port}->{tip_port}")


def total_dof(graph: ConnectionGraph, component_root: str) -> int:
    """Manipulator DOF of the connected component (wheel axes excluded)."""
    comp = graph.component_of(component_root)
    return sum(
        graph.module(m).chain.dof
        for m in comp
        if graph.module(m).kind is ModuleKind.LIMB
    )


def component_drive_axes(graph: ConnectionGraph, component_root: str) -> Tuple[str, ...]:
    comp = graph.component_of(component_root)
    out: List[str] = []
    for m in sorted(comp):
        node = graph.module(m)
        out.extend(f"{m}.{a}" for a in node.drive_axes)
    return tuple(out)


# --- module factories -----------------------------------------------------------


def make_limb(module_id: str, geometry: Optional[LimbGeometry] = None) -> ModuleNode:
    return ModuleNode(
        module_id=module_id,
        kind=ModuleKind.LIMB,
        ports=(
            PortSpec("base", PortKind.GRIPPER),
            PortSpec("tool", PortKind.GRIPPER),
        ),
        chain=limb_template(geometry, name=module_id),
    )


# fixture mounts point their outward mating normal (+x) up out of the module
_FIXTURE_UP = tf.rot_y(-math.pi / 2.0)


def make_single_wheel(module_id: str) -> ModuleNode:
    return ModuleNode(
        module_id=module_id,
        kind=ModuleKind.SINGLE_WHEEL,
        ports=(PortSpec("fx1", PortKind.FIXTURE, _FIXTURE_UP.copy()),),
        drive_axes=("axle",),
    )


def make_dual_wheel(module_id: str) -> ModuleNode:
    # two grasping fixtures so a second limb can attach to an occupied wheel
    return ModuleNode(
        module_id=module_id,
        kind=ModuleKind.DUAL_WHEEL,
        ports=(
            PortSpec("fx1", PortKind.FIXTURE, tf.translation(0.0, 0.10, 0.0) @ _FIXTURE_UP),
            PortSpec("fx2", PortKind.FIXTURE, tf.translation(0.0, -0.10, 0.0) @ _FIXTURE_UP),
        ),
        drive_axes=("axle_left", "axle_right"),
    )


def make_central_body(module_id: str, fixtures: int = 4) -> ModuleNode:
    corners = [(0.2, 0.2), (0.2, -0.2), (-0.2, 0.2), (-0.2, -0.2)]
    ports = tuple(
        PortSpec(f"fx{i+1}", PortKind.FIXTURE, tf.translation(x, y, 0.0) @ _FIXTURE_UP)
        for i, (x, y) in enumerate(corners[:fixtures])
    )
    return ModuleNode(module_id=module_id, kind=ModuleKind.CENTRAL_BODY, ports=ports)


def make_pallet(module_id: str, fixtures: int = 6, spacing: float = 0.15) -> ModuleNode:
    ports = tuple(
        PortSpec(f"fx{i}", PortKind.FIXTURE, tf.translation(i * spacing, 0.0, 0.0) @ _FIXTURE_UP)
        for i in range(fixtures)
    )
    return ModuleNode(module_id=module_id, kind=ModuleKind.PALLET, ports=ports)


def build_graph(modules: Iterable[ModuleNode], time_s: float = 0.0) -> ConnectionGraph:
    table = {}
    for m in modules:
        if m.module_id in table:
            raise GraphError(f"duplicate module id {m.module_id}")
        table[m.module_id] = m
    return ConnectionGraph(modules=table, world_time=time_s)
