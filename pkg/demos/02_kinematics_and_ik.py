# Serial-chain kinematics: forward kinematics, Jacobian conditioning, damped
# least-squares IK, and composing two limbs into one 8-DOF arm.

import numpy as np

from limbsim import (
    compose_chains,
    forward_kinematics,
    is_near_singular,
    jacobian,
    limb_template,
    reverse_chain,
    solve_ik,
)
from limbsim.graph import GRIPPER_INTERFACE

np.set_printoptions(precision=4, suppress=True)

limb = limb_template()
print("limb joints:", limb.joint_ids, " reach:", limb.reach(), "m")

home = forward_kinematics(limb, np.zeros(4))
print("home pose:", home.position, "quat", home.orientation)

bent = np.array([0.0, 0.6, -1.2, 0.0])
pose = forward_kinematics(limb, bent)
print("bent pose:", pose.position)

flagged, sigma = is_near_singular(limb, np.zeros(4))
print(f"stretched pose near-singular? {flagged} (sigma_min {sigma:.2e})")
flagged, sigma = is_near_singular(limb, bent)
print(f"bent pose near-singular?      {flagged} (sigma_min {sigma:.2e})")

# the wrist roll never moves the tool point, only its orientation
j = jacobian(limb, bent)
print("wrist-roll position column:", j[:3, 3])

# --- a 10 mm sideways IK step ------------------------------------------------
target = pose.translated([0.010, 0.0, 0.0])
solution = solve_ik(limb, target, seed=bent)
reached = forward_kinematics(limb, solution)
print("\n10 mm step: solution", solution)
print("residual:", np.linalg.norm(reached.position - target.position), "m")

# --- batch round-trip: IK re-reaches random reachable targets ------------------
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(200):
    q = np.array([
        rng.uniform(-2.6, 2.6), rng.uniform(-2.5, 2.5),
        rng.uniform(-2.5, 2.5), rng.uniform(-2.6, 2.6)])
    t = forward_kinematics(limb, q)
    sol = solve_ik(limb, t, seed=bent)
    worst = max(worst, float(np.linalg.norm(forward_kinematics(limb, sol).position - t.position)))
print(f"200 random targets, worst position residual: {worst:.2e} m")

# --- two limbs joined tool-to-tool -> 8-DOF manipulator -------------------------
arm8 = compose_chains(limb_template(), reverse_chain(limb_template()), GRIPPER_INTERFACE)
print("\ncomposed arm DOF:", arm8.dof)
seed8 = np.array([0.0, 0.5, -1.0, 0.0, 0.0, 1.0, -0.5, 0.0])
start = forward_kinematics(arm8, seed8)
goal = start.translated([0.03, -0.02, 0.01])
sol8 = solve_ik(arm8, goal, seed=seed8)
print("8-DOF solution:", sol8)
print("residual:", np.linalg.norm(forward_kinematics(arm8, sol8).position - goal.position), "m")
