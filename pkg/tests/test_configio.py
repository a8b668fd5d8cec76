import math

import numpy as np
import pytest

from limbsim.configio import (
    bundled_fleet,
    dump_actuator_params,
    graph_from_fleet,
    load_fleet,
    parse_actuator_params,
)
from limbsim.actuator import ActuatorParams
from limbsim.errors import ConfigError
from limbsim.graph import extract_chain, parse_port
from limbsim.kinematics import fk_matrix


def test_actuator_params_parse_key_values():
    params = parse_actuator_params(
        """
        # bench unit overrides
        gear_ratio = 160
        peak_torque = 123.0
        output_speed_limit = 0.43333333333333335  # 26 rpm
        filter_bandwidth = 0.8
        """
    )
    assert params.gear_ratio == 160
    assert params.filter_bandwidth == 0.8
    # untouched fields keep their calibrated defaults
    assert params.current_offset == ActuatorParams().current_offset


def test_actuator_params_reject_unknown_key_and_bad_number():
    with pytest.raises(ConfigError):
        parse_actuator_params("warp_factor = 9")
    with pytest.raises(ConfigError):
        parse_actuator_params("gear_ratio = fast")
    with pytest.raises(ConfigError):
        parse_actuator_params("gear_ratio 160")


def test_actuator_params_dump_round_trips():
    params = ActuatorParams(filter_bandwidth=0.75, accel_limit=2.0)
    text = dump_actuator_params(params)
    assert parse_actuator_params(text) == params


def test_fleet_requires_template_or_modules():
    with pytest.raises(ConfigError):
        graph_from_fleet({"name": "empty"})


def test_fleet_rejects_unknown_module_kind():
    with pytest.raises(ConfigError):
        graph_from_fleet({"modules": [{"id": "x", "kind": "hovercraft"}]})


def test_fleet_limb_geometry_override_scales_the_chain():
    fleet = {
        "limb_geometry": {"upper_link": 0.5, "forearm_link": 0.5},
        "modules": [
            {"id": "pallet", "kind": "pallet"},
            {"id": "limbA", "kind": "limb"},
        ],
        "edges": [["limbA:base", "pallet:fx0"]],
    }
    graph = graph_from_fleet(fleet)
    chain = extract_chain(graph, parse_port("pallet:fx0"), parse_port("limbA:tool"))
    home = fk_matrix(chain, np.zeros(4))
    assert home[:3, 3] == pytest.approx([1.15, 0, 0], abs=1e-12)


def test_fleet_pose_places_modules():
    fleet = {
        "modules": [{"id": "sw1", "kind": "single_wheel", "pose_m": [1.0, 2.0, 0.5]}],
    }
    graph = graph_from_fleet(fleet)
    assert graph.module("sw1").base_pose[:3, 3] == pytest.approx([1.0, 2.0, 0.5])


def test_bundled_fleets_all_load_and_validate():
    for name in (
        "pallet_two_limbs",
        "pallet_single_limb",
        "pallet_limb_wheel",
        "vehicle",
        "vehicle_pallet_limb",
        "spinbot",
    ):
        graph = graph_from_fleet(bundled_fleet(name))
        graph.check_invariants()


def test_load_fleet_rejects_bad_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        load_fleet(bad)
    notdict = tmp_path / "list.json"
    notdict.write_text("[1,2]")
    with pytest.raises(ConfigError):
        load_fleet(notdict)
