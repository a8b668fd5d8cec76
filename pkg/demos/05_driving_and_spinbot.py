# Wheeled locomotion: drive the vehicle straight and through a steering arc,
# hit the base speed cap, and let the spinbot shuffle across the floor.

import math

from limbsim import SimConfig, World, instantiate_template, vehicle_mode_transition
from limbsim.configio import bundled_fleet

# --- vehicle: straight run under the 1.0 m/s cap -------------------------------
world = World.from_fleet(bundled_fleet("vehicle"), sim=SimConfig(telemetry_decimation=100))
root = world.component_root("limb1")
request = 2.0 / world.sim.wheel_radius_m  # asks for 2 m/s
for axis in world.state.wheel_speeds:
    granted = world.set_wheel_speed(axis, request)
print(f"requested wheel speed {request:.2f} rad/s, granted {granted:.2f} rad/s")
world.step(3.0)
pose = world.state.base_poses[root]
print(f"after 3 s: x = {pose.x:.3f} m  (speed {pose.x / 3.0:.3f} m/s, cap "
      f"{world.sim.base_speed_cap_m_s} m/s)")

# --- steering mode bends the path ------------------------------------------------
vehicle_mode_transition(world, "steering")
world.step(4.0)
pose = world.state.base_poses[root]
print(f"after steering 4 s: x = {pose.x:.2f} m, y = {pose.y:.2f} m, "
      f"heading = {math.degrees(pose.heading):.1f} deg")

# --- spinbot gait: weight-shift shuffling -----------------------------------------
spin = World.from_fleet(bundled_fleet("spinbot"), sim=SimConfig(telemetry_decimation=1000))
groot = spin.enable_spinbot_gait("limb1")
minutes = 8
spin.step(60.0 * minutes)
gpose = spin.state.base_poses[groot]
dist = math.hypot(gpose.x, gpose.y)
print(f"\nspinbot covered {dist:.2f} m in {minutes} min "
      f"({spin.state.step_count} ticks, {len(spin.telemetry)} telemetry rows)")
spin.export_telemetry("spinbot_telemetry.csv")
print("wrote spinbot_telemetry.csv")
