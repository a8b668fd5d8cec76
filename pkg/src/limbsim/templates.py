"""Named configuration templates and graph-against-template validation.

A template is a required multiset of module kinds plus an edge pattern;
validation passes iff the graph matches exactly up to module relabeling
(fixture ports on the same module are interchangeable, limb base/tool are
not).  The registry covers the ten supported morphologies.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import UnknownTemplateError
from .graph import (
    ConnectionGraph,
    EdgeKind,
    ModuleKind,
    PortKind,
    PortRef,
    attach,
    build_graph,
    make_central_body,
    make_dual_wheel,
    make_limb,
    make_pallet,
    make_single_wheel,
)

# template edge endpoint: (role, port_id)
_EdgePattern = Tuple[Tuple[str, str], Tuple[str, str], EdgeKind]


@dataclass(frozen=True)
class ConfigurationTemplate:
    name: str
    modules: Dict[str, ModuleKind]  # role -> kind
    edges: Tuple[_EdgePattern, ...]
    description: str = ""
    preset_pose: Dict[str, float] = field(default_factory=dict)  # joint -> rad


def _t(name, modules, edges, description="", preset=None):
    return ConfigurationTemplate(
        name=name,
        modules=modules,
        edges=tuple(edges),
        description=description,
        preset_pose=preset or {},
    )


M = EdgeKind.MALE_INTO_FIXTURE
G = EdgeKind.GENDERLESS_GRIP

REGISTRY: Dict[str, ConfigurationTemplate] = {
    t.name: t
    for t in [
        _t("limb4", {"limb1": ModuleKind.LIMB}, [], "single 4-DOF limb"),
        _t(
            "limb8",
            {"limb1": ModuleKind.LIMB, "limb2": ModuleKind.LIMB},
            [(("limb1", "tool"), ("limb2", "tool"), G)],
            "two limbs joined tool-to-tool into an 8-DOF manipulator",
        ),
        _t(
            "minimal",
            {"limb1": ModuleKind.LIMB, "sw1": ModuleKind.SINGLE_WHEEL},
            [(("limb1", "tool"), ("sw1", "fx1"), M)],
            "one limb holding one wheel module",
        ),
        _t(
            "vehicle",
            {"limb1": ModuleKind.LIMB, "dw1": ModuleKind.DUAL_WHEEL, "dw2": ModuleKind.DUAL_WHEEL},
            [
                (("limb1", "base"), ("dw1", "fx1"), M),
                (("limb1", "tool"), ("dw2", "fx1"), M),
            ],
            "two dual-wheel modules bridged by one limb",
        ),
        _t(
            "dragon",
            {
                "limb1": ModuleKind.LIMB,
                "limb2": ModuleKind.LIMB,
                "dw1": ModuleKind.DUAL_WHEEL,
                "dw2": ModuleKind.DUAL_WHEEL,
            },
            [
                (("limb1", "base"), ("dw1", "fx1"), M),
                (("limb1", "tool"), ("dw2", "fx1"), M),
                (("limb2", "tool"), ("dw2", "fx2"), M),
            ],
            "vehicle with a second limb serially attached for mobile manipulation",
        ),
        _t(
            "quadruped",
            {
                "body1": ModuleKind.CENTRAL_BODY,
                "limb1": ModuleKind.LIMB,
                "limb2": ModuleKind.LIMB,
                "limb3": ModuleKind.LIMB,
                "limb4": ModuleKind.LIMB,
            },
            [((f"limb{i}", "base"), ("body1", f"fx{i}"), M) for i in range(1, 5)],
            "central body with four limbs as legs",
        ),
        _t(
            "cargo",
            {
                "body1": ModuleKind.CENTRAL_BODY,
                **{f"limb{i}": ModuleKind.LIMB for i in range(1, 5)},
                **{f"dw{i}": ModuleKind.DUAL_WHEEL for i in range(1, 5)},
            },
            [((f"limb{i}", "base"), ("body1", f"fx{i}"), M) for i in range(1, 5)]
            + [((f"limb{i}", "tool"), (f"dw{i}", "fx1"), M) for i in range(1, 5)],
            "central body, four limbs, four dual-wheel modules (large payload)",
        ),
        _t(
            "cargo_minimal",
            {
                "body1": ModuleKind.CENTRAL_BODY,
                **{f"limb{i}": ModuleKind.LIMB for i in range(1, 5)},
                **{f"sw{i}": ModuleKind.SINGLE_WHEEL for i in range(1, 5)},
            },
            [((f"limb{i}", "base"), ("body1", f"fx{i}"), M) for i in range(1, 5)]
            + [((f"limb{i}", "tool"), (f"sw{i}", "fx1"), M) for i in range(1, 5)],
            "central body, four limbs, four single-wheel modules",
        ),
        _t(
            "spinbot",
            {
                "limb1": ModuleKind.LIMB,
                "sw1": ModuleKind.SINGLE_WHEEL,
                "sw2": ModuleKind.SINGLE_WHEEL,
            },
            [
                (("limb1", "base"), ("sw1", "fx1"), M),
                (("limb1", "tool"), ("sw2", "fx1"), M),
            ],
            "one limb between two single wheels; moves by shifting its weight",
        ),
        _t(
            "bike",
            {
                "limb1": ModuleKind.LIMB,
                "sw1": ModuleKind.SINGLE_WHEEL,
                "sw2": ModuleKind.SINGLE_WHEEL,
            },
            [
                (("limb1", "base"), ("sw1", "fx1"), M),
                (("limb1", "tool"), ("sw2", "fx1"), M),
            ],
            "in-line two-wheeler using middle pitches as suspension",
            preset={"limb1.j2": 0.5, "limb1.j3": -1.0},
        ),
    ]
}

TEMPLATE_NAMES = tuple(sorted(REGISTRY))

_FACTORIES = {
    ModuleKind.LIMB: make_limb,
    ModuleKind.SINGLE_WHEEL: make_single_wheel,
    ModuleKind.DUAL_WHEEL: make_dual_wheel,
    ModuleKind.CENTRAL_BODY: make_central_body,
    ModuleKind.PALLET: make_pallet,
}


def get_template(name: str, aliases: Optional[Dict[str, str]] = None) -> ConfigurationTemplate:
    resolved = (aliases or {}).get(name, name)
    try:
        return REGISTRY[resolved]
    except KeyError:
        raise UnknownTemplateError(
            f"unknown template {name!r}; known: {', '.join(TEMPLATE_NAMES)}"
        )


def instantiate_template(name: str, aliases: Optional[Dict[str, str]] = None) -> ConnectionGraph:
    """Build a graph whose modules carry the template's role names as ids."""
    template = get_template(name, aliases)
    graph = build_graph(_FACTORIES[kind](role) for role, kind in template.modules.items())
    for (role_a, port_a), (role_b, port_b), _kind in template.edges:
        graph = attach(graph, PortRef(role_a, port_a), PortRef(role_b, port_b))
    graph.check_invariants()
    return graph


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    missing_modules: Dict[str, int]
    extra_modules: Dict[str, int]
    edge_problem: Optional[str] = None

    def summary(self) -> str:
        if self.ok:
            return "pass"
        parts = []
        if self.missing_modules:
            parts.append(f"missing modules: {self.missing_modules}")
        if self.extra_modules:
            parts.append(f"extra modules: {self.extra_modules}")
        if self.edge_problem:
            parts.append(self.edge_problem)
        return "fail: " + "; ".join(parts)


def _port_class(graph: ConnectionGraph, ref: PortRef) -> str:
    node = graph.module(ref.module)
    if node.kind is ModuleKind.LIMB:
        return ref.port  # base and tool are structurally different
    return graph.port_spec(ref).kind.value  # fixtures are interchangeable


def _edge_signature(graph, mapping, edge):
    sides = []
    for ref in edge.endpoints():
        role = mapping[ref.module]
        sides.append((role, _port_class(graph, ref)))
    sides.sort()
    return (sides[0], sides[1], edge.kind)


def _template_signature(template, pattern):
    (role_a, port_a), (role_b, port_b), kind = pattern

    def side(role, port):
        if template.modules[role] is ModuleKind.LIMB:
            return (role, port)
        return (role, PortKind.FIXTURE.value)

    sides = sorted([side(role_a, port_a), side(role_b, port_b)])
    return (sides[0], sides[1], kind)


def validate_configuration(
    graph: ConnectionGraph, template: ConfigurationTemplate
) -> ValidationReport:
    """Exact multiset and edge-pattern match up to module relabeling."""
    graph_kinds = Counter(m.kind for m in graph.modules.values())
    wanted_kinds = Counter(template.modules.values())
    missing = {
        k.value: wanted_kinds[k] - graph_kinds[k]
        for k in wanted_kinds
        if wanted_kinds[k] > graph_kinds[k]
    }
    extra = {
        k.value: graph_kinds[k] - wanted_kinds[k]
        for k in graph_kinds
        if graph_kinds[k] > wanted_kinds[k]
    }
    if missing or extra:
        return ValidationReport(False, missing, extra)
    if len(graph.edges) != len(template.edges):
        return ValidationReport(
            False, {}, {}, f"edge count {len(graph.edges)} != required {len(template.edges)}"
        )

    wanted_sigs = Counter(_template_signature(template, p) for p in template.edges)
    roles_by_kind: Dict[ModuleKind, List[str]] = {}
    for role, kind in template.modules.items():
        roles_by_kind.setdefault(kind, []).append(role)
    modules_by_kind: Dict[ModuleKind, List[str]] = {}
    for m in graph.modules.values():
        modules_by_kind.setdefault(m.kind, []).append(m.module_id)

    kinds = sorted(roles_by_kind, key=lambda k: k.value)
    perm_sets = [
        [
            dict(zip(mods, perm))
            for perm in itertools.permutations(roles_by_kind[kind])
        ]
        for kind in kinds
        for mods in [sorted(modules_by_kind[kind])]
    ]
    for combo in itertools.product(*perm_sets):
        mapping: Dict[str, str] = {}
        for part in combo:
            mapping.update(part)
        sigs = Counter(_edge_signature(graph, mapping, e) for e in graph.edges)
        if sigs == wanted_sigs:
            return ValidationReport(True, {}, {})
    return ValidationReport(False, {}, {}, "edge pattern does not match under any relabeling")


def validate_component(
    graph: ConnectionGraph, template: ConfigurationTemplate, member: str
) -> ValidationReport:
    """Validate only the connected component containing ``member``."""
    comp = graph.component_of(member)
    sub = ConnectionGraph(
        modules={m: graph.modules[m] for m in comp},
        edges=frozenset(e for e in graph.edges if e.a.module in comp),
        closed_grippers=frozenset(r for r in graph.closed_grippers if r.module in comp),
        world_time=graph.world_time,
    )
    return validate_configuration(sub, template)


def find_matching_component(graph: ConnectionGraph, template: ConfigurationTemplate):
    """Module sets of each component that validates against the template."""
    out = []
    for comp in graph.components():
        member = sorted(comp)[0]
        if validate_component(graph, template, member).ok:
            out.append(comp)
    return out
