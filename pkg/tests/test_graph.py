import math
import random

import numpy as np
import pytest

from limbsim import transforms as tf
from limbsim.errors import (
    AmbiguousPathError,
    EdgeNotFound,
    GripperLinkedError,
    IncompatiblePorts,
    MonogamyViolation,
    NoPathError,
    SelfAttachError,
    UnknownTemplateError,
)
from limbsim.graph import (
    ConnectionGraph,
    EdgeKind,
    ModuleKind,
    PortKind,
    PortRef,
    attach,
    build_graph,
    component_drive_axes,
    detach,
    detach_ports,
    extract_chain,
    make_central_body,
    make_dual_wheel,
    make_limb,
    make_pallet,
    make_single_wheel,
    parse_port,
    set_gripper,
    total_dof,
)
from limbsim.kinematics import compose_chains, fk_matrix, limb_template, reverse_chain
from limbsim.templates import (
    REGISTRY,
    TEMPLATE_NAMES,
    get_template,
    instantiate_template,
    validate_component,
    validate_configuration,
)

from .oracles import fk_oracle


def two_limbs():
    return build_graph([make_limb("limbA"), make_limb("limbB")])


def limb_and_wheel():
    return build_graph([make_limb("limbA"), make_single_wheel("sw1")])


# --- attach/detach rules -----------------------------------------------------


def test_attach_gripper_gripper_is_genderless():
    g = attach(two_limbs(), parse_port("limbA:tool"), parse_port("limbB:tool"))
    edge = next(iter(g.edges))
    assert edge.kind is EdgeKind.GENDERLESS_GRIP
    assert g.is_closed(parse_port("limbA:tool"))
    assert g.is_closed(parse_port("limbB:tool"))
    g.check_invariants()


def test_attach_gripper_fixture_is_male_into_fixture():
    g = attach(limb_and_wheel(), parse_port("limbA:tool"), parse_port("sw1:fx1"))
    edge = next(iter(g.edges))
    assert edge.kind is EdgeKind.MALE_INTO_FIXTURE
    g.check_invariants()


def test_attach_fixture_fixture_rejected():
    g = build_graph([make_single_wheel("sw1"), make_single_wheel("sw2")])
    with pytest.raises(IncompatiblePorts):
        attach(g, parse_port("sw1:fx1"), parse_port("sw2:fx1"))


def test_attach_occupied_port_rejected():
    g = attach(two_limbs(), parse_port("limbA:tool"), parse_port("limbB:tool"))
    g2 = build_graph([make_limb("limbA"), make_limb("limbB"), make_limb("limbC")])
    g2 = attach(g2, parse_port("limbA:tool"), parse_port("limbB:tool"))
    with pytest.raises(MonogamyViolation):
        attach(g2, parse_port("limbA:tool"), parse_port("limbC:tool"))
    with pytest.raises(MonogamyViolation):
        attach(g, parse_port("limbB:tool"), parse_port("limbA:tool"))


def test_attach_self_rejected():
    with pytest.raises(SelfAttachError):
        attach(two_limbs(), parse_port("limbA:base"), parse_port("limbA:tool"))


def test_detach_restores_original_graph():
    g0 = two_limbs()
    g1 = attach(g0, parse_port("limbA:tool"), parse_port("limbB:tool"))
    g2, report = detach(g1, next(iter(g1.edges)))
    assert g2 == g0
    assert report.split
    assert set(report.components) == {frozenset({"limbA"}), frozenset({"limbB"})}


def test_detach_missing_edge():
    g = two_limbs()
    with pytest.raises(EdgeNotFound):
        detach_ports(g, parse_port("limbA:tool"), parse_port("limbB:tool"))


def test_detach_reports_free_floating_components():
    g = build_graph([make_pallet("pallet"), make_limb("limbA"), make_limb("limbB")])
    g = attach(g, parse_port("limbA:base"), parse_port("pallet:fx0"))
    g = attach(g, parse_port("limbB:base"), parse_port("pallet:fx2"))
    g = attach(g, parse_port("limbA:tool"), parse_port("limbB:tool"))
    # releasing limbB from the pallet leaves one limb carrying the other
    g, report = detach_ports(g, parse_port("limbB:base"), parse_port("pallet:fx2"))
    assert not report.split
    assert not report.free_floating
    non_pallet = [c for c in g.components() if "pallet" not in c]
    assert non_pallet == []  # both limbs still hang off the pallet component
    # now release limbA as well: the pair floats free
    g, report = detach_ports(g, parse_port("limbA:base"), parse_port("pallet:fx0"))
    assert report.split
    assert frozenset({"limbA", "limbB"}) in report.free_floating


def test_gripper_open_on_linked_port_rejected():
    g = attach(two_limbs(), parse_port("limbA:tool"), parse_port("limbB:tool"))
    with pytest.raises(GripperLinkedError):
        set_gripper(g, parse_port("limbA:tool"), closed=False)
    # closing/opening a free gripper is fine
    g = set_gripper(g, parse_port("limbA:base"), closed=True)
    g = set_gripper(g, parse_port("limbA:base"), closed=False)
    g.check_invariants()


# --- chain extraction ---------------------------------------------------------


def test_extract_single_limb_chain():
    g = two_limbs()
    chain = extract_chain(g, parse_port("limbA:base"), parse_port("limbA:tool"))
    assert chain.dof == 4
    assert chain.joint_ids == ("limbA.j1", "limbA.j2", "limbA.j3", "limbA.j4")


def test_extract_two_limb_chain_matches_compose():
    from limbsim.graph import GRIPPER_INTERFACE

    g = attach(two_limbs(), parse_port("limbA:tool"), parse_port("limbB:tool"))
    chain = extract_chain(g, parse_port("limbA:base"), parse_port("limbB:base"))
    assert chain.dof == 8
    composed = compose_chains(
        limb_template(), reverse_chain(limb_template()), GRIPPER_INTERFACE
    )
    rng = np.random.default_rng(7)
    for _ in range(10):
        q = rng.uniform(-1.2, 1.2, size=8)
        assert np.max(np.abs(fk_matrix(chain, q) - fk_matrix(composed, q))) < 1e-10


def test_extract_disconnected_no_path():
    g = two_limbs()
    with pytest.raises(NoPathError):
        extract_chain(g, parse_port("limbA:base"), parse_port("limbB:tool"))


def test_extract_ambiguous_on_cycle():
    g = build_graph([make_limb("limbA"), make_limb("limbB"), make_dual_wheel("dw1"), make_dual_wheel("dw2")])
    g = attach(g, parse_port("limbA:base"), parse_port("dw1:fx1"))
    g = attach(g, parse_port("limbA:tool"), parse_port("dw2:fx1"))
    g = attach(g, parse_port("limbB:base"), parse_port("dw1:fx2"))
    g = attach(g, parse_port("limbB:tool"), parse_port("dw2:fx2"))
    with pytest.raises(AmbiguousPathError):
        extract_chain(g, parse_port("dw1:fx1"), parse_port("dw2:fx1"))


def test_extract_through_rigid_module_records_drive_axes():
    g = build_graph([make_limb("limbA"), make_limb("limbB"), make_dual_wheel("dw1")])
    g = attach(g, parse_port("limbA:tool"), parse_port("dw1:fx1"))
    g = attach(g, parse_port("limbB:tool"), parse_port("dw1:fx2"))
    chain = extract_chain(g, parse_port("limbA:base"), parse_port("limbB:base"))
    assert chain.dof == 8
    assert chain.drive_axes == ("dw1.axle_left", "dw1.axle_right")


def test_extract_rooted_at_pallet_fixture():
    g = build_graph([make_pallet("pallet"), make_limb("limbA")])
    g = attach(g, parse_port("limbA:base"), parse_port("pallet:fx1"))
    chain = extract_chain(g, parse_port("pallet:fx1"), parse_port("limbA:tool"))
    assert chain.dof == 4
    # base frame sits at the fixture, so FK at zero reaches the limb length
    home = fk_matrix(chain, np.zeros(4))
    assert home[:3, 3] == pytest.approx([0.75, 0, 0], abs=1e-12)


def test_total_dof_counts_limbs_only():
    g = attach(two_limbs(), parse_port("limbA:tool"), parse_port("limbB:tool"))
    assert total_dof(g, "limbA") == 8
    g2 = instantiate_template("vehicle")
    assert total_dof(g2, "limb1") == 4
    assert component_drive_axes(g2, "limb1") == (
        "dw1.axle_left",
        "dw1.axle_right",
        "dw2.axle_left",
        "dw2.axle_right",
    )
    g3 = build_graph([make_pallet("p")])
    assert total_dof(g3, "p") == 0


# --- templates ------------------------------------------------------------------


def test_registry_has_all_ten_templates():
    assert set(TEMPLATE_NAMES) == {
        "limb4",
        "limb8",
        "vehicle",
        "dragon",
        "minimal",
        "quadruped",
        "cargo",
        "cargo_minimal",
        "bike",
        "spinbot",
    }


@pytest.mark.parametrize("name", TEMPLATE_NAMES)
def test_every_template_instantiates_and_self_validates(name):
    g = instantiate_template(name)
    g.check_invariants()
    report = validate_configuration(g, get_template(name))
    assert report.ok, report.summary()


def test_unknown_template_rejected():
    with pytest.raises(UnknownTemplateError):
        instantiate_template("octopus")


def test_template_aliases_resolve():
    g = instantiate_template("walker", aliases={"walker": "quadruped"})
    assert validate_configuration(g, get_template("quadruped")).ok


def test_vehicle_template_contents():
    g = instantiate_template("vehicle")
    kinds = sorted(m.kind.value for m in g.modules.values())
    assert kinds == ["dual_wheel", "dual_wheel", "limb"]
    assert len(g.edges) == 2
    assert all(e.kind is EdgeKind.MALE_INTO_FIXTURE for e in g.edges)


def test_cargo_minimal_contents():
    g = instantiate_template("cargo_minimal")
    kinds = sorted(m.kind.value for m in g.modules.values())
    assert kinds.count("limb") == 4
    assert kinds.count("single_wheel") == 4
    assert kinds.count("central_body") == 1


def test_limb4_is_single_limb_no_edges():
    g = instantiate_template("limb4")
    assert len(g.modules) == 1
    assert len(g.edges) == 0
    assert total_dof(g, "limb1") == 4


def test_vehicle_does_not_validate_as_quadruped():
    g = instantiate_template("vehicle")
    report = validate_configuration(g, get_template("quadruped"))
    assert not report.ok
    assert report.missing_modules


def test_dragon_built_from_vehicle_validates():
    g = instantiate_template("vehicle")
    # serially attach a second limb to the far wheel, as the assembly does
    g = build_graph(list(g.modules.values()) + [make_limb("limb9")])
    for (a, b, kind) in [
        ("limb1:base", "dw1:fx1", None),
        ("limb1:tool", "dw2:fx1", None),
        ("limb9:tool", "dw2:fx2", None),
    ]:
        g = attach(g, parse_port(a), parse_port(b))
    report = validate_configuration(g, get_template("dragon"))
    assert report.ok, report.summary()


def test_relabeled_template_still_validates():
    template = get_template("limb8")
    g = build_graph([make_limb("alpha"), make_limb("beta")])
    g = attach(g, parse_port("beta:tool"), parse_port("alpha:tool"))
    assert validate_configuration(g, template).ok


def test_wrong_port_roles_fail_validation():
    template = get_template("limb8")
    g = build_graph([make_limb("alpha"), make_limb("beta")])
    g = attach(g, parse_port("beta:base"), parse_port("alpha:tool"))
    report = validate_configuration(g, template)
    assert not report.ok


def test_validate_component_ignores_other_components():
    g = instantiate_template("vehicle")
    extra = build_graph(list(g.modules.values()) + [make_pallet("pallet")])
    extra = ConnectionGraph(
        modules=extra.modules, edges=g.edges, closed_grippers=g.closed_grippers
    )
    assert not validate_configuration(extra, get_template("vehicle")).ok
    assert validate_component(extra, get_template("vehicle"), "limb1").ok


def test_graph_export_is_deterministic():
    g = instantiate_template("dragon")
    assert g.to_json() == g.to_json()
    g2 = instantiate_template("dragon")
    assert g.to_json() == g2.to_json()


# --- randomized fuzz ------------------------------------------------------------


def test_monogamy_fuzz_attach_detach():
    """Random attach/detach ops: invariants hold after every accepted op and
    every invalid op is rejected with the right error without mutating."""
    g = build_graph(
        [
            make_pallet("pallet", fixtures=4),
            make_limb("limb1"),
            make_limb("limb2"),
            make_limb("limb3"),
            make_dual_wheel("dw1"),
            make_dual_wheel("dw2"),
            make_single_wheel("sw1"),
            make_central_body("body1"),
        ]
    )
    ports = g.all_ports()
    rng = random.Random(1234)
    attaches = rejects = detaches = 0
    for _ in range(20000):
        if rng.random() < 0.6 or not g.edges:
            a, b = rng.sample(ports, 2)
            linked = g.is_linked(a) or g.is_linked(b)
            same = a.module == b.module
            kinds = {g.port_spec(a).kind, g.port_spec(b).kind}
            try:
                g2 = attach(g, a, b)
            except SelfAttachError:
                assert same
                rejects += 1
                continue
            except MonogamyViolation:
                assert linked and not same
                rejects += 1
                continue
            except IncompatiblePorts:
                assert kinds == {PortKind.FIXTURE} and not same and not linked
                rejects += 1
                continue
            assert not (same or linked) and kinds != {PortKind.FIXTURE}
            g = g2
            attaches += 1
        else:
            edge = rng.choice(sorted(g.edges, key=lambda e: (e.a, e.b)))
            g, _ = detach(g, edge)
            detaches += 1
        g.check_invariants()
    assert attaches > 1000 and rejects > 1000 and detaches > 1000


# hypothesis stateful property: arbitrary op sequences preserve the invariants
from hypothesis import settings as hyp_settings
from hypothesis.stateful import RuleBasedStateMachine, initialize, invariant, rule
from hypothesis import strategies as hst


class GraphOps(RuleBasedStateMachine):
    @initialize()
    def setup(self):
        self.graph = build_graph(
            [
                make_pallet("pallet", fixtures=3),
                make_limb("limb1"),
                make_limb("limb2"),
                make_dual_wheel("dw1"),
                make_single_wheel("sw1"),
            ]
        )
        self.ports = self.graph.all_ports()

    @rule(data=hst.data())
    def try_attach(self, data):
        a = data.draw(hst.sampled_from(self.ports), label="port_a")
        b = data.draw(hst.sampled_from(self.ports), label="port_b")
        linked = self.graph.is_linked(a) or self.graph.is_linked(b)
        kinds = {self.graph.port_spec(a).kind, self.graph.port_spec(b).kind}
        try:
            self.graph = attach(self.graph, a, b)
            assert a.module != b.module and not linked and kinds != {PortKind.FIXTURE}
        except SelfAttachError:
            assert a.module == b.module
        except MonogamyViolation:
            assert linked and a.module != b.module
        except IncompatiblePorts:
            assert kinds == {PortKind.FIXTURE} and not linked and a.module != b.module

    @rule(data=hst.data())
    def try_detach(self, data):
        if not self.graph.edges:
            return
        edge = data.draw(
            hst.sampled_from(sorted(self.graph.edges, key=lambda e: (e.a, e.b))),
            label="edge",
        )
        self.graph, _report = detach(self.graph, edge)

    @invariant()
    def invariants_hold(self):
        if hasattr(self, "graph"):
            self.graph.check_invariants()


TestGraphOpsStateMachine = GraphOps.TestCase
TestGraphOpsStateMachine.settings = hyp_settings(max_examples=40, stateful_step_count=40, deadline=None)
