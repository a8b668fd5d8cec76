"""Serial-chain kinematics: FK, geometric Jacobian, damped least-squares IK,
and chain composition/reversal for gripper-to-gripper mounting.

Chains are ordered lists of revolute joints, each rotating about its local
roll (x) or pitch (y) axis after a fixed parent offset.  A limb is the
four-joint roll-pitch-pitch-roll template with grippers at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import transforms as tf
from .errors import ChainError, JointLimitError, NoConvergenceError, UnreachableError

RPM_26_RAD_S = 26.0 / 60.0 * 2.0 * math.pi  # paper-rated joint speed in rad/s


class AxisKind:
    ROLL = "roll"  # local x
    PITCH = "pitch"  # local y


_AXIS_VECTORS = {AxisKind.ROLL: np.array([1.0, 0.0, 0.0]), AxisKind.PITCH: np.array([0.0, 1.0, 0.0])}


@dataclass(frozen=True, eq=False)
class JointSpec:
    joint_id: str
    axis_kind: str  # AxisKind.ROLL or AxisKind.PITCH
    parent_offset: np.ndarray  # 4x4 rigid transform from previous frame
    position_limits: Tuple[float, float] = (-math.pi, math.pi)  # rad
    velocity_limit: float = RPM_26_RAD_S  # rad/s
    torque_limit: float = 123.0  # Nm
    flipped: bool = False  # rotation sense inverted (reversed traversal)

    def __post_init__(self):
        lo, hi = self.position_limits
        if not lo <= hi:
            raise ChainError(f"joint {self.joint_id}: limits {self.position_limits} ill-ordered")
        if self.velocity_limit <= 0:
            raise ChainError(f"joint {self.joint_id}: velocity_limit must be positive")

    @property
    def axis(self) -> np.ndarray:
        v = _AXIS_VECTORS[self.axis_kind]
        return -v if self.flipped else v

    def local_rotation(self, angle: float) -> np.ndarray:
        if self.flipped:
            angle = -angle
        if self.axis_kind == AxisKind.ROLL:
            return tf.rot_x(angle)
        return tf.rot_y(angle)


@dataclass(frozen=True, eq=False)
class Pose:
    position: np.ndarray  # (3,) m
    orientation: np.ndarray  # quaternion (w, x, y, z), unit norm

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        q = np.asarray(self.orientation, dtype=float)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ChainError("quaternion must be unit norm within 1e-9")
        object.__setattr__(self, "orientation", tf.quat_normalize(q))

    @classmethod
    def from_matrix(cls, t: np.ndarray) -> "Pose":
        return cls(position=t[:3, 3].copy(), orientation=tf.quat_from_matrix(t))

    def to_matrix(self) -> np.ndarray:
        return tf.make_transform(tf.quat_to_matrix(self.orientation), self.position)

    def translated(self, delta) -> "Pose":
        return Pose(self.position + np.asarray(delta, dtype=float), self.orientation)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))


@dataclass(frozen=True, eq=False)
class KinematicChain:
    joints: Tuple[JointSpec, ...]
    base_frame: np.ndarray = field(default_factory=tf.identity)
    tool_offset: np.ndarray = field(default_factory=tf.identity)
    drive_axes: Tuple[str, ...] = ()  # rigid-module drive axes picked up on extraction
    name: str = "chain"

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))

    @property
    def dof(self) -> int:
        return len(self.joints)

    @property
    def joint_ids(self) -> Tuple[str, ...]:
        return tuple(j.joint_id for j in self.joints)

    def check_angles(self, angles: Sequence[float], tol: float = 1e-9) -> np.ndarray:
        q = np.asarray(angles, dtype=float)
        if q.shape != (self.dof,):
            raise ChainError(f"expected {self.dof} angles, got shape {q.shape}")
        for spec, angle in zip(self.joints, q):
            lo, hi = spec.position_limits
            if angle < lo - tol or angle > hi + tol:
                raise JointLimitError(
                    f"joint {spec.joint_id} angle {angle:.4f} outside [{lo:.4f}, {hi:.4f}]"
                )
        return q

    def reach(self) -> float:
        """Upper bound on tool distance from the base-frame origin."""
        total = 0.0
        for j in self.joints:
            total += float(np.linalg.norm(j.parent_offset[:3, 3]))
        total += float(np.linalg.norm(self.tool_offset[:3, 3]))
        return total


@dataclass(frozen=True)
class LimbGeometry:
    """Placeholder limb dimensions; real hardware values are config-supplied."""

    base_offset: float = 0.05  # m, base gripper interface to roll 1
    shoulder_offset: float = 0.05  # m, roll 1 to pitch 2
    upper_link: float = 0.30  # m, pitch 2 to pitch 3
    forearm_link: float = 0.30  # m, pitch 3 to roll 4
    tool_offset: float = 0.05  # m, roll 4 to tool gripper interface
    roll_limits: Tuple[float, float] = (-math.pi, math.pi)
    pitch_limits: Tuple[float, float] = (-2.88, 2.88)


def limb_template(geometry: Optional[LimbGeometry] = None, name: str = "limb") -> KinematicChain:
    """Roll-pitch-pitch-roll limb chain from base gripper to tool gripper."""
    g = geometry or LimbGeometry()
    joints = (
        JointSpec("j1", AxisKind.ROLL, tf.translation(g.base_offset, 0, 0), g.roll_limits),
        JointSpec("j2", AxisKind.PITCH, tf.translation(g.shoulder_offset, 0, 0), g.pitch_limits),
        JointSpec("j3", AxisKind.PITCH, tf.translation(g.upper_link, 0, 0), g.pitch_limits),
        JointSpec("j4", AxisKind.ROLL, tf.translation(g.forearm_link, 0, 0), g.roll_limits),
    )
    return KinematicChain(joints=joints, tool_offset=tf.translation(g.tool_offset, 0, 0), name=name)


# --- forward kinematics and Jacobian --------------------------------------


def _frames(chain: KinematicChain, q: np.ndarray):
    """Per-joint world frames (after offset, before rotation is applied the
    joint origin; the returned transform includes the joint rotation)."""
    running = chain.base_frame.copy()
    origins = []
    axes = []
    for spec, angle in zip(chain.joints, q):
        running = running @ spec.parent_offset
        origins.append(running[:3, 3].copy())
        axes.append(running[:3, :3] @ spec.axis)
        running = running @ spec.local_rotation(angle)
    tool = running @ chain.tool_offset
    return origins, axes, tool


def fk_matrix(chain: KinematicChain, angles: Sequence[float]) -> np.ndarray:
    q = chain.check_angles(angles)
    _, _, tool = _frames(chain, q)
    return tool


def forward_kinematics(chain: KinematicChain, angles: Sequence[float]) -> Pose:
    """Tool pose as the product of per-joint rigid transforms and tool offset."""
    return Pose.from_matrix(fk_matrix(chain, angles))


def jacobian(chain: KinematicChain, angles: Sequence[float]) -> np.ndarray:
    """Geometric Jacobian, rows = (linear xyz, angular xyz) in the base frame."""
    q = chain.check_angles(angles)
    origins, axes, tool = _frames(chain, q)
    p_tool = tool[:3, 3]
    jac = np.zeros((6, chain.dof))
    for i, (origin, axis) in enumerate(zip(origins, axes)):
        jac[:3, i] = np.cross(axis, p_tool - origin)
        jac[3:, i] = axis
    return jac


def default_task_mask(chain: KinematicChain) -> np.ndarray:
    """Task rows for IK: position xyz plus tool-frame rotation components.

    Under-actuated four/five DOF chains track position plus tool roll; six
    or more DOF track the full pose.
    """
    mask = np.zeros(6, dtype=bool)
    mask[:3] = True
    if chain.dof >= 6:
        mask[3:] = True
    elif chain.dof >= 4:
        mask[3] = True
    return mask


def _task_error(chain, q, target_matrix):
    """Error vector and Jacobian in task coordinates: world-frame position,
    tool-frame orientation (so the roll row means rotation about tool x)."""
    origins, axes, tool = _frames(chain, q)
    r_fk = tool[:3, :3]
    e_pos = target_matrix[:3, 3] - tool[:3, 3]
    e_rot_world = tf.rotvec_from_matrix(target_matrix[:3, :3] @ r_fk.T)
    e = np.concatenate([e_pos, r_fk.T @ e_rot_world])
    jac = np.zeros((6, chain.dof))
    p_tool = tool[:3, 3]
    for i, (origin, axis) in enumerate(zip(origins, axes)):
        jac[:3, i] = np.cross(axis, p_tool - origin)
        jac[3:, i] = r_fk.T @ axis
    return e, jac, tool


_DLS_LAMBDA = 1e-2
_SINGULAR_KNEE = 0.1  # sigma_min below this inflates the damping
_MAX_STEP = 0.3  # rad per iteration, infinity norm
_STALL_WINDOW = 25  # iterations without meaningful progress before a restart


def _restart_seeds(lows: np.ndarray, highs: np.ndarray):
    """Deterministic low-discrepancy ladder of joint vectors inside limits."""
    span = highs - lows
    golden = 0.6180339887498949
    k = 1
    while True:
        frac = (0.5 + golden * k * np.arange(1, len(lows) + 1)) % 1.0
        yield lows + 0.1 * span + 0.8 * span * frac
        k += 1


def solve_ik(
    chain: KinematicChain,
    target: Pose,
    task_mask: Optional[np.ndarray] = None,
    seed: Optional[Sequence[float]] = None,
    pos_tol: float = 1e-8,
    rot_tol: float = 1e-7,
    max_iter: int = 1000,
) -> np.ndarray:
    """Damped least-squares IK on the masked task rows.

    Returns joint angles within limits such that FK matches the target on the
    masked rows within tolerance.  ``max_iter`` is the total iteration budget;
    on stalls the solver restarts from a deterministic ladder of alternative
    seeds within that budget.  Raises UnreachableError for targets beyond the
    chain's total reach and NoConvergenceError (carrying the best residual
    seen) when the budget runs out.
    """
    if seed is None:
        seed = np.zeros(chain.dof)
    q = chain.check_angles(seed).copy()
    mask = default_task_mask(chain) if task_mask is None else np.asarray(task_mask, dtype=bool)
    if mask.shape != (6,) or mask.sum() == 0:
        raise ChainError("task_mask must select between 1 and 6 of the 6 task rows")

    target_matrix = target.to_matrix()
    base_origin = chain.base_frame[:3, 3]
    if np.linalg.norm(target.position - base_origin) > chain.reach() * (1.0 + 1e-9):
        raise UnreachableError(
            f"target {np.linalg.norm(target.position - base_origin):.3f} m from base "
            f"exceeds reach {chain.reach():.3f} m"
        )

    lows = np.array([j.position_limits[0] for j in chain.joints])
    highs = np.array([j.position_limits[1] for j in chain.joints])
    pos_rows = mask & np.array([True] * 3 + [False] * 3)
    rot_rows = mask & np.array([False] * 3 + [True] * 3)
    restarts = _restart_seeds(lows, highs)

    def residuals(qv):
        e, jac, _ = _task_error(chain, qv, target_matrix)
        pos_res = float(np.linalg.norm(e[pos_rows])) if pos_rows.any() else 0.0
        rot_res = float(np.linalg.norm(e[rot_rows])) if rot_rows.any() else 0.0
        return e, jac, pos_res, rot_res

    def limited_step(jm, em, lam, qv):
        """DLS step with active-set limit handling: joints that would cross a
        limit are pinned there and the remaining columns are re-solved."""
        n = len(qv)
        lam = max(lam, 1e-6)  # keep the normal equations invertible
        dq = np.zeros(n)
        free = np.ones(n, dtype=bool)
        work = em.copy()
        for _ in range(n):
            cols = jm[:, free]
            if cols.shape[1] == 0:
                break
            sub = cols.T @ np.linalg.solve(
                cols @ cols.T + lam * lam * np.eye(cols.shape[0]), work
            )
            dq[free] = sub
            target_q = qv + dq
            viol = free & ((target_q < lows) | (target_q > highs))
            if not viol.any():
                break
            for j in np.where(viol)[0]:
                pinned = min(max(target_q[j], lows[j]), highs[j])
                dq[j] = pinned - qv[j]
                work = work - jm[:, j] * dq[j]
                free[j] = False
        return dq

    best = math.inf

    def lm_run(q0, row_mask, budget, p_tol, r_tol):
        """LM descent on the selected rows; stops on convergence, stall, or
        budget exhaustion.  Returns (q, iterations_used, converged)."""
        nonlocal best
        q = q0
        lam = _DLS_LAMBDA
        window_best = math.inf
        window_left = _STALL_WINDOW
        e, jac, pos_res, rot_res = residuals(q)
        used = 0
        sel_pos = row_mask[:3].any()
        sel_rot = row_mask[3:].any()
        while True:
            res = (pos_res if sel_pos else 0.0) + (rot_res if sel_rot else 0.0)
            best = min(best, pos_res + rot_res)
            if (pos_res <= p_tol or not sel_pos) and (rot_res <= r_tol or not sel_rot):
                return q, used, True
            if used >= budget:
                return q, used, False
            if res < window_best * 0.7:
                window_best = res
                window_left = _STALL_WINDOW
            else:
                window_left -= 1
                if window_left <= 0:
                    return q, used, False
            dq = limited_step(jac[row_mask], e[row_mask], lam, q)
            step = float(np.max(np.abs(dq))) if dq.size else 0.0
            if step > _MAX_STEP:
                dq *= _MAX_STEP / step
            q_try = np.clip(q + dq, lows, highs)
            e_t, jac_t, pos_t, rot_t = residuals(q_try)
            used += 1
            res_t = (pos_t if sel_pos else 0.0) + (rot_t if sel_rot else 0.0)
            if res_t < res:  # accept and sharpen the damping
                q, e, jac, pos_res, rot_res = q_try, e_t, jac_t, pos_t, rot_t
                lam = max(lam * 0.4, 1e-10)
            else:  # reject and damp harder (handles singular neighbourhoods)
                lam = min(lam * 5.0, 1e3)

    # primary attempt from the caller's seed on the full mask
    q, used, ok = lm_run(q, mask, max_iter, pos_tol, rot_tol)
    if ok:
        return q
    # restart ladder; with rotation rows in play, settle position first so the
    # orientation rows refine a pose instead of fighting the approach
    pos_mask = mask & np.array([True] * 3 + [False] * 3)
    cascade = pos_rows.any() and rot_rows.any()
    while used < max_iter:
        q0 = next(restarts)
        if cascade:
            q0, u, _ = lm_run(q0, pos_mask, min(60, max_iter - used), pos_tol, rot_tol)
            used += u
            if used >= max_iter:
                break
        q, u, ok = lm_run(q0, mask, max_iter - used, pos_tol, rot_tol)
        used += u
        if ok:
            return q

    raise NoConvergenceError(
        f"IK did not converge in {max_iter} iterations (best residual {best:.2e})",
        best_residual=best,
        iterations=max_iter,
    )


def is_near_singular(
    chain: KinematicChain,
    angles: Sequence[float],
    threshold: float = 1e-3,
    task_mask: Optional[np.ndarray] = None,
) -> Tuple[bool, float]:
    """Flag configurations whose masked Jacobian has a small singular value."""
    q = chain.check_angles(angles)
    mask = default_task_mask(chain) if task_mask is None else np.asarray(task_mask, dtype=bool)
    e_dummy = tf.identity()
    _, jac, _ = _task_error(chain, q, e_dummy)
    sigma_min = float(np.linalg.svd(jac[mask], compute_uv=False)[-1])
    return sigma_min < threshold, sigma_min


# --- composition -----------------------------------------------------------


def compose_chains(
    chain_a: KinematicChain,
    chain_b: KinematicChain,
    coupling: Optional[np.ndarray] = None,
) -> KinematicChain:
    """Concatenate two chains through a coupling transform at a's tool frame.

    ``chain_b`` is taken as already expressed from its mounting end; pass
    ``reverse_chain(limb)`` to mount a limb by its tool gripper.  The
    composite FK factors exactly as FK_a(qa) @ coupling @ FK_b(qb).
    """
    c = tf.identity() if coupling is None else coupling
    bridge = chain_a.tool_offset @ c @ chain_b.base_frame
    if not chain_b.joints:
        return KinematicChain(
            joints=chain_a.joints,
            base_frame=chain_a.base_frame,
            tool_offset=bridge @ chain_b.tool_offset,
            drive_axes=chain_a.drive_axes + chain_b.drive_axes,
            name=f"{chain_a.name}+{chain_b.name}",
        )
    first = chain_b.joints[0]
    joined = chain_a.joints + (replace(first, parent_offset=bridge @ first.parent_offset),) + chain_b.joints[1:]
    return KinematicChain(
        joints=joined,
        base_frame=chain_a.base_frame,
        tool_offset=chain_b.tool_offset,
        drive_axes=chain_a.drive_axes + chain_b.drive_axes,
        name=f"{chain_a.name}+{chain_b.name}",
    )


def reverse_chain(chain: KinematicChain) -> KinematicChain:
    """Re-express a chain as traversed from tool to base.

    Joint order reverses and each joint's rotation sense flips; angle values
    and limits are unchanged, so FK_rev(reversed(q)) == inv(FK(q)).
    """
    n = chain.dof
    if n == 0:
        return KinematicChain(
            joints=(),
            base_frame=tf.inverse(chain.tool_offset),
            tool_offset=tf.inverse(chain.base_frame),
            drive_axes=chain.drive_axes,
            name=f"{chain.name}~rev",
        )
    new_joints = []
    for k, spec in enumerate(reversed(chain.joints)):
        if k == 0:
            offset = tf.inverse(chain.tool_offset)
        else:
            offset = tf.inverse(chain.joints[n - k].parent_offset)
        new_joints.append(replace(spec, parent_offset=offset, flipped=not spec.flipped))
    new_tool = tf.inverse(chain.joints[0].parent_offset) @ tf.inverse(chain.base_frame)
    return KinematicChain(
        joints=tuple(new_joints),
        base_frame=tf.identity(),
        tool_offset=new_tool,
        drive_axes=chain.drive_axes,
        name=f"{chain.name}~rev",
    )
