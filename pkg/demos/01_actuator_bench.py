# Actuator bench: reproduce the static-load behavior and compare the three
# position input modes on a 0.5 rev step.
#
# Outputs: actuator_static.csv, actuator_modes.csv (+ PNGs when matplotlib
# is installed).

import csv

import numpy as np

from limbsim import (
    ActuatorParams,
    ActuatorState,
    InputMode,
    current_for_load,
    static_deflection,
    step_actuator,
)

params = ActuatorParams()
dt = params.tick

print("calibrated current model: I(T) =",
      f"{params.current_offset:.4f} + {params.current_slope:.5f} * T")
print("  check: I(13.5) =", round(current_for_load(13.5, params), 3), "A",
      " I(73) =", round(current_for_load(73.0, params), 3), "A")
print("compliance: 44.1 Nm ->", static_deflection(44.1, params), "rev\n")

# --- static load holds: attach a load and watch current and sag -----------
loads = [13.5, 33.5, 44.1, 73.0]
rows = []
for load in loads:
    state = ActuatorState.at_rest(params)
    for k in range(int(2.0 / dt)):
        applied = load if k * dt >= 0.5 else 0.0  # load hung at t = 0.5 s
        state = step_actuator(state, params, dt, applied)
        if k % 10 == 0:
            rows.append((k * dt, load, state.position, state.current))
    print(f"load {load:5.1f} Nm: settled current {state.current:5.2f} A, "
          f"sag {abs(state.position - state.setpoint):.5f} rev")

with open("actuator_static.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["time_s", "load_nm", "pos_rev", "current_a"])
    writer.writerows(rows)
print("wrote actuator_static.csv\n")

# --- input mode comparison ---------------------------------------------------
step = 0.15  # small enough that only passthrough slams into the velocity clamp
traces = {}
for mode in InputMode:
    state = ActuatorState.at_rest(params, mode=mode).with_command(step, mode, params)
    t, pos, vel = [], [], []
    for k in range(int(4.0 / dt)):
        state = step_actuator(state, params, dt)
        t.append(k * dt)
        pos.append(state.position)
        vel.append(state.velocity)
    traces[mode.value] = (np.array(t), np.array(pos), np.array(vel))
    print(f"{mode.value:15s} peak |velocity| = {np.abs(vel).max():.4f} rev/s "
          f"(limit {params.output_speed_limit:.4f})")

with open("actuator_modes.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["time_s", "mode", "pos_rev", "vel_rev_s"])
    for mode, (t, pos, vel) in traces.items():
        for i in range(0, len(t), 5):
            writer.writerow([t[i], mode, pos[i], vel[i]])
print("wrote actuator_modes.csv")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for mode, (t, pos, vel) in traces.items():
        ax1.plot(t, pos, label=mode)
        ax2.plot(t, vel, label=mode)
    ax1.set_xlabel("time [s]"); ax1.set_ylabel("position [rev]")
    ax2.set_xlabel("time [s]"); ax2.set_ylabel("velocity [rev/s]")
    ax2.axhline(params.output_speed_limit, color="k", lw=0.5, ls="--")
    ax1.legend(); fig.tight_layout()
    fig.savefig("actuator_modes.png", dpi=120)
    print("wrote actuator_modes.png")
except ImportError:
    print("matplotlib not installed; skipped plots")
