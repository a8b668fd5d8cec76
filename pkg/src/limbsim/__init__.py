"""limbsim: desk-scale simulator and control stack for modular limb/wheel robots.

Layers, bottom to top:
  actuator   calibrated joint drive with cascaded loops and input modes
  kinematics serial-chain FK / Jacobian / damped-least-squares IK
  graph      modules, monogamous connector ports, configuration templates
  sequences  scripted reconfigurations with pre/postconditions
  runtime    fixed-step world stepping, telemetry, replayable manifests
  service    WebSocket teleoperation with streaming telemetry
"""

from .actuator import (
    ActuatorParams,
    ActuatorState,
    InputMode,
    TrapezoidalProfile,
    calibrate_current_model,
    current_for_load,
    make_trapezoid,
    sample_trapezoid,
    static_deflection,
    step_actuator,
)
from .graph import (
    ConnectionGraph,
    Edge,
    EdgeKind,
    ModuleKind,
    ModuleNode,
    PortKind,
    PortRef,
    PortSpec,
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
from .kinematics import (
    AxisKind,
    JointSpec,
    KinematicChain,
    LimbGeometry,
    Pose,
    compose_chains,
    default_task_mask,
    forward_kinematics,
    is_near_singular,
    jacobian,
    limb_template,
    reverse_chain,
    solve_ik,
)
from .runtime import (
    PlanarPose,
    SimConfig,
    TelemetryRecord,
    World,
    WorldState,
    replay_manifest,
    write_telemetry_csv,
)
from .sequences import (
    SequenceScript,
    SequenceStep,
    handshake_approach_distance,
    inchworm_step,
    load_script,
    run_sequence,
    run_sequence_by_name,
    vehicle_mode_transition,
)
from .service import ServiceConfig, TeleopService, serve
from .templates import (
    ConfigurationTemplate,
    TEMPLATE_NAMES,
    get_template,
    instantiate_template,
    validate_component,
    validate_configuration,
)

__version__ = "0.1.0"
