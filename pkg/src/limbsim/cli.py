"""Command-line entry points.

Subcommands: serve, run-sequence, replay, export-plots, validate.
Exit codes: 0 ok, 2 config error, 3 runtime invariant breach.
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import time
from pathlib import Path

from .configio import bundled_fleet, list_bundled_scripts, load_fleet
from .errors import ConfigError, InvariantBreach, LimbsimError
from .runtime import SimConfig, World, replay_manifest
from .service import ServiceConfig, serve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _load_fleet_arg(text: str) -> dict:
    path = Path(text)
    if path.exists():
        return load_fleet(path)
    try:
        return bundled_fleet(text)
    except FileNotFoundError:
        raise ConfigError(f"no fleet file or bundled fleet named {text!r}")


def cmd_serve(args) -> int:
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        if isinstance(doc.get("fleet"), str):
            doc["fleet"] = _load_fleet_arg(doc["fleet"])
        config = ServiceConfig.from_dict(doc)
    else:
        config = ServiceConfig.from_dict({"fleet": _load_fleet_arg(args.fleet)})
    if args.bind:
        host, _, port = args.bind.partition(":")
        config.host = host or config.host
        config.port = int(port) if port else config.port
    service = serve(config)
    host, port = service.address
    print(f"limbsim teleop service on ws://{host}:{port} (fleet: {config.fleet.get('name', '?')})")
    stop = []
    signal.signal(signal.SIGINT, lambda *a: stop.append(True))
    signal.signal(signal.SIGTERM, lambda *a: stop.append(True))
    try:
        while not stop and not service._stop.is_set():
            time.sleep(0.2)
    finally:
        fatal = service._fatal
        service.stop()
    if fatal is not None:
        print(f"fatal: {fatal}", file=sys.stderr)
        return EXIT_INVARIANT if isinstance(fatal, InvariantBreach) else EXIT_CONFIG
    return EXIT_OK


def cmd_run_sequence(args) -> int:
    from .sequences import run_sequence_by_name

    fleet = _load_fleet_arg(args.fleet)
    world = World.from_fleet(fleet, sim=SimConfig(telemetry_decimation=args.decimation))
    overrides = json.loads(args.overrides) if args.overrides else None
    events = run_sequence_by_name(world, args.name, overrides=overrides)
    for e in events:
        print(f"step {e.step:2d} {e.op:12s} t={e.t_start_s:8.3f}s .. {e.t_end_s:8.3f}s {e.detail}")
    print(f"sequence {args.name!r} done at sim t={world.time_s:.3f}s")
    out = Path(args.out) if args.out else Path(f"{args.name}_run")
    out.mkdir(parents=True, exist_ok=True)
    rows = world.export_telemetry(out / "telemetry.csv")
    world.save_manifest(out / "manifest.json")
    print(f"wrote {rows} telemetry rows and manifest under {out}/")
    return EXIT_OK


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    world = replay_manifest(manifest)
    out = Path(args.out) if args.out else Path(args.manifest).with_name("replay_telemetry.csv")
    rows = world.export_telemetry(out)
    print(f"replayed {manifest['duration_ticks']} ticks, wrote {rows} rows to {out}")
    reference = manifest.get("telemetry")
    if reference and Path(reference).exists():
        same = Path(reference).read_bytes() == Path(out).read_bytes()
        print("byte-identical to recorded telemetry" if same else "MISMATCH against recorded telemetry")
        return EXIT_OK if same else EXIT_INVARIANT
    return EXIT_OK


def cmd_export_plots(args) -> int:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise ConfigError("export-plots needs matplotlib (pip install limbsim[plots])")
    import csv
    from collections import defaultdict

    series = defaultdict(lambda: {"t": [], "pos": [], "vel": [], "cur": []})
    with open(args.telemetry) as fh:
        for row in csv.DictReader(fh):
            s = series[row["joint_id"]]
            s["t"].append(float(row["time_s"]))
            s["pos"].append(float(row["pos_rev"]))
            s["vel"].append(float(row["vel_rev_s"]))
            s["cur"].append(float(row["current_a"]))
    if not series:
        raise ConfigError(f"no telemetry rows in {args.telemetry}")
    fig, axes = plt.subplots(3, 1, figsize=(10, 9), sharex=True)
    for jid in sorted(series):
        s = series[jid]
        axes[0].plot(s["t"], s["pos"], label=jid)
        axes[1].plot(s["t"], s["vel"], label=jid)
        axes[2].plot(s["t"], s["cur"], label=jid)
    axes[0].set_ylabel("position [rev]")
    axes[1].set_ylabel("velocity [rev/s]")
    axes[2].set_ylabel("current [A]")
    axes[2].set_xlabel("time [s]")
    axes[0].legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    out = args.out or str(Path(args.telemetry).with_suffix(".png"))
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .configio import graph_from_fleet
    from .templates import get_template, validate_configuration

    fleet = _load_fleet_arg(args.fleet)
    graph = graph_from_fleet(fleet)
    graph.check_invariants()
    print(
        f"fleet {fleet.get('name', '?')!r}: {len(graph.modules)} modules, "
        f"{len(graph.edges)} edges, invariants ok"
    )
    if args.template:
        report = validate_configuration(graph, get_template(args.template))
        print(f"against template {args.template!r}: {report.summary()}")
        if not report.ok:
            return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="limbsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the teleoperation service")
    p.add_argument("--config", help="service config JSON (fleet, bind, token, sim)")
    p.add_argument("--fleet", default="pallet_two_limbs", help="fleet file or bundled name")
    p.add_argument("--bind", help="host:port override (or env LIMBSIM_BIND)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("run-sequence", help="execute a bundled reconfiguration script")
    p.add_argument("name", choices=list_bundled_scripts())
    p.add_argument("--fleet", default=None, help="fleet file or bundled name")
    p.add_argument("--overrides", help="JSON overrides (parameters/bindings)")
    p.add_argument("--decimation", type=int, default=10)
    p.add_argument("--out", help="output directory for telemetry + manifest")
    p.set_defaults(func=cmd_run_sequence)

    p = sub.add_parser("replay", help="re-run a recorded manifest deterministically")
    p.add_argument("manifest")
    p.add_argument("--out", help="telemetry CSV to write")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("export-plots", help="plot a telemetry CSV per joint")
    p.add_argument("telemetry")
    p.add_argument("--out", help="PNG path")
    p.set_defaults(func=cmd_export_plots)

    p = sub.add_parser("validate", help="check a fleet file and optional template match")
    p.add_argument("fleet")
    p.add_argument("--template", help="template name to validate against")
    p.set_defaults(func=cmd_validate)
    return parser


_SEQUENCE_DEFAULT_FLEETS = {
    "limb_to_limb": "pallet_two_limbs",
    "limb_to_wheel": "pallet_limb_wheel",
    "vehicle_transition": "vehicle",
    "dragon_assembly": "vehicle_pallet_limb",
    "inchworm": "pallet_single_limb",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run-sequence" and args.fleet is None:
        args.fleet = _SEQUENCE_DEFAULT_FLEETS.get(args.name, "pallet_two_limbs")
    try:
        return args.func(args)
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LimbsimError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
