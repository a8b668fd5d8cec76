# The connection graph: monogamous ports, gender rules, the ten configuration
# templates, and pulling kinematic chains out of assembled structures.

import numpy as np

from limbsim import (
    TEMPLATE_NAMES,
    attach,
    build_graph,
    component_drive_axes,
    detach_ports,
    extract_chain,
    get_template,
    instantiate_template,
    make_limb,
    make_single_wheel,
    parse_port,
    total_dof,
    validate_configuration,
)
from limbsim.errors import IncompatiblePorts, MonogamyViolation

# --- every registered template builds and validates against itself ------------
print("registered templates:")
for name in TEMPLATE_NAMES:
    graph = instantiate_template(name)
    report = validate_configuration(graph, get_template(name))
    dof = max((total_dof(graph, m) for m in graph.modules), default=0)
    print(f"  {name:14s} {len(graph.modules)} modules, {len(graph.edges)} edges, "
          f"manipulator DOF {dof}, self-validation: {report.summary()}")

# --- the rules in action --------------------------------------------------------
g = build_graph([make_limb("limbA"), make_limb("limbB"), make_single_wheel("sw1")])
g = attach(g, parse_port("limbA:tool"), parse_port("limbB:tool"))
print("\ngenderless grip:", next(iter(g.edges)).kind.value)

try:
    attach(g, parse_port("limbA:tool"), parse_port("sw1:fx1"))
except MonogamyViolation as exc:
    print("second grab on an occupied gripper ->", exc.code)

g2 = build_graph([make_single_wheel("sw1"), make_single_wheel("sw2")])
try:
    attach(g2, parse_port("sw1:fx1"), parse_port("sw2:fx1"))
except IncompatiblePorts as exc:
    print("fixture-to-fixture ->", exc.code)

# --- chains come straight out of the graph ---------------------------------------
limb8 = instantiate_template("limb8")
chain = extract_chain(limb8, parse_port("limb1:base"), parse_port("limb2:base"))
print("\nlimb8 chain:", chain.joint_ids)

vehicle = instantiate_template("vehicle")
bridge = extract_chain(vehicle, parse_port("dw1:fx1"), parse_port("dw2:fx1"))
print("vehicle bridge chain DOF:", bridge.dof, " drive axes:", bridge.drive_axes)
print("vehicle component drive axes:", component_drive_axes(vehicle, "limb1"))

# --- detach reports spell out what floats away ------------------------------------
g3, report = detach_ports(limb8, parse_port("limb1:tool"), parse_port("limb2:tool"))
print("\nafter splitting limb8:", [sorted(c) for c in report.components],
      "free-floating:", [sorted(c) for c in report.free_floating])

# --- deterministic export for golden files ------------------------------------------
doc = instantiate_template("dragon").to_json()
print("\ndragon graph document is", len(doc), "bytes of canonical JSON")
