"""Teleoperation wire protocol: JSON messages over WebSocket text frames.

Commands carry a client-chosen ``id`` echoed in exactly one terminal ack or
error event.  Units are explicit in key names (rev, rad, m, s, A, Hz).

Command types and payloads:
  auth          {token}
  joint         {joint, target_rev, mode?}
  ik            {root, tip, delta_m | target:{position_m, orientation_wxyz}}
  gripper       {port, action: open|close}
  attach        {port_a, port_b}
  detach        {port_a, port_b}
  run_sequence  {name, overrides?}
  set_mode      {mode: suspension|steering, member?}
  query         {what: snapshot | telemetry | stop_telemetry | wheel,
                 rate_hz?, axis?, speed_rad_s?}

Event kinds: ack, error, telemetry, snapshot, sequence_event.
Error codes are part of the contract: BUSY, MONOGAMY_VIOLATION, IK_FAILURE,
OUT_OF_LIMITS, UNKNOWN_TARGET, and the graph/sequence codes.
"""

from __future__ import annotations

import json
from typing import Mapping, Optional

from .errors import ProtocolError
from .graph import PortKind, PortRef

COMMAND_TYPES = (
    "auth",
    "joint",
    "ik",
    "gripper",
    "attach",
    "detach",
    "run_sequence",
    "set_mode",
    "query",
)

_REQUIRED = {
    "auth": ("token",),
    "joint": ("joint", "target_rev"),
    "ik": ("root", "tip"),
    "gripper": ("port", "action"),
    "attach": ("port_a", "port_b"),
    "detach": ("port_a", "port_b"),
    "run_sequence": ("name",),
    "set_mode": ("mode",),
    "query": ("what",),
}


def parse_command(raw: str) -> dict:
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"message is not valid JSON: {exc}")
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    if "id" not in msg:
        raise ProtocolError("message needs a client-unique 'id'")
    mtype = msg.get("type")
    if mtype not in COMMAND_TYPES:
        raise ProtocolError(f"unknown command type {mtype!r}")
    missing = [k for k in _REQUIRED[mtype] if k not in msg]
    if missing:
        raise ProtocolError(f"{mtype} command missing {missing}")
    if mtype == "ik" and ("delta_m" in msg) == ("target" in msg):
        raise ProtocolError("ik command needs exactly one of delta_m or target")
    if mtype == "gripper" and msg["action"] not in ("open", "close"):
        raise ProtocolError("gripper action must be open or close")
    return msg


def ack(correlation_id, result: Optional[Mapping] = None) -> str:
    return json.dumps({"kind": "ack", "id": correlation_id, "result": result or {}})


def error(correlation_id, code: str, message: str, details: Optional[Mapping] = None) -> str:
    return json.dumps(
        {
            "kind": "error",
            "id": correlation_id,
            "code": code,
            "message": message,
            "details": details or {},
        }
    )


def telemetry_event(batch_rows, dropped: int, t_latest: float) -> str:
    return json.dumps(
        {
            "kind": "telemetry",
            "dropped": dropped,
            "t_latest_s": t_latest,
            "records": batch_rows,
        }
    )


def snapshot_event(body: Mapping) -> str:
    return json.dumps({"kind": "snapshot", "body": body})


def sequence_event(correlation_id, status: str, body: Mapping) -> str:
    return json.dumps(
        {"kind": "sequence_event", "id": correlation_id, "status": status, "body": dict(body)}
    )


def world_snapshot(world) -> dict:
    """Plain-data view of the world for clients; no client-side extrapolation
    is needed beyond this."""
    state = world.state
    graph = state.graph
    modules = []
    for m in sorted(graph.modules):
        node = graph.modules[m]
        entry = {
            "id": node.module_id,
            "kind": node.kind.value,
            "ports": [],
            "joints": [],
            "drive_axes": list(node.drive_axes),
        }
        for p in node.ports:
            pr = PortRef(node.module_id, p.port_id)
            entry["ports"].append(
                {
                    "id": p.port_id,
                    "kind": p.kind.value,
                    "state": (
                        ("closed" if graph.is_closed(pr) else "open")
                        if p.kind is PortKind.GRIPPER
                        else None
                    ),
                    "linked": graph.is_linked(pr),
                }
            )
        if node.chain is not None:
            for spec in node.chain.joints:
                jid = f"{node.module_id}.{spec.joint_id}"
                st = state.joints[jid]
                entry["joints"].append(
                    {
                        "id": jid,
                        "pos_rev": st.position,
                        "vel_rev_s": st.velocity,
                        "current_a": st.current,
                        "setpoint_rev": st.setpoint,
                        "mode": st.input_mode.value,
                    }
                )
        modules.append(entry)
    poses = {
        root: {"x_m": p.x, "y_m": p.y, "heading_rad": p.heading}
        for root, p in state.base_poses.items()
    }
    return {
        "time_s": world.time_s,
        "busy": world.busy_with,
        "modules": modules,
        "edges": sorted([[str(e.a), str(e.b), e.kind.value] for e in graph.edges]),
        "base_poses": poses,
        "classification": world.classification(),
        "wheel_speeds_rad_s": dict(state.wheel_speeds),
    }
