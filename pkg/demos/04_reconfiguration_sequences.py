# Scripted reconfigurations: the limb-to-limb handshake, limb-to-wheel
# connection, dragon assembly, vehicle mode transitions, and inchworm
# crawling across the pallet.

from limbsim import (
    SimConfig,
    World,
    handshake_approach_distance,
    inchworm_step,
    load_script,
    parse_port,
    run_sequence,
    vehicle_mode_transition,
)
from limbsim.configio import bundled_fleet

SIM = SimConfig(telemetry_decimation=50)


def banner(title):
    print(f"\n=== {title} " + "=" * max(0, 60 - len(title)))


def show(events):
    for e in events:
        print(f"  step {e.step}: {e.op:12s} {e.t_start_s:7.2f}s -> {e.t_end_s:7.2f}s  {e.detail}")


banner("handshake approach distance")
d0, g_contact = 0.2, 0.1
print(f"d0 = {d0} m, contact gap = {g_contact} m -> each limb travels "
      f"{handshake_approach_distance(d0, g_contact)} m")

banner("limb-to-limb handshake (two pallet-mounted limbs -> 8-DOF arm)")
world = World.from_fleet(bundled_fleet("pallet_two_limbs"), sim=SIM)
show(run_sequence(world, load_script("limb_to_limb")))
print("  edges now:", [[str(e.a), str(e.b)] for e in sorted(world.graph.edges, key=lambda e: str(e.a))])

banner("limb-to-wheel (forms the minimal configuration)")
world = World.from_fleet(bundled_fleet("pallet_limb_wheel"), sim=SIM)
show(run_sequence(world, load_script("limb_to_wheel")))
print("  classification:", world.classification())

banner("dragon assembly (vehicle + limb from the pallet)")
world = World.from_fleet(bundled_fleet("vehicle_pallet_limb"), sim=SIM)
show(run_sequence(world, load_script("dragon_assembly")))
print("  classification:", world.classification())

banner("vehicle suspension <-> steering (edge set must not change)")
world = World.from_fleet(bundled_fleet("vehicle"), sim=SIM)
edges_before = world.graph.edges
print("  ->", vehicle_mode_transition(world, "steering"))
print("  ->", vehicle_mode_transition(world, "suspension"))
print("  edge set unchanged:", world.graph.edges == edges_before)

banner("inchworm: crawl two fixtures down the pallet")
world = World.from_fleet(bundled_fleet("pallet_single_limb"), sim=SIM)
for hop in (("pallet:fx1", "pallet:fx2"), ("pallet:fx2", "pallet:fx3")):
    result = inchworm_step(world, parse_port(hop[0]), parse_port(hop[1]))
    print(f"  {result['from']} -> {result['to']}  displacement {result['displacement_m']:.3f} m")
print("  total sim time:", round(world.time_s, 2), "s")
