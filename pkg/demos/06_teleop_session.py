# A complete teleoperation round: serve a fleet over WebSocket, drive it from
# a scripted client, stream telemetry, and save a replayable manifest.
#
# The same wire protocol serves the browser console under frontend/.

import asyncio
import json

from limbsim import ws
from limbsim.configio import bundled_fleet
from limbsim.runtime import SimConfig
from limbsim.service import ServiceConfig, serve

service = serve(
    ServiceConfig(
        fleet=bundled_fleet("pallet_two_limbs"),
        host="127.0.0.1",
        port=0,
        sim=SimConfig(telemetry_decimation=10),
    )
)
host, port = service.address
print(f"service listening on ws://{host}:{port}")


async def session():
    conn = await ws.connect(host, port)
    n = 0

    async def request(**msg):
        nonlocal n
        n += 1
        msg["id"] = f"demo{n}"
        await conn.send_text(json.dumps(msg))
        while True:
            reply = json.loads(await conn.recv_text())
            if reply.get("id") == msg["id"] and reply["kind"] in ("ack", "error"):
                return reply

    snap = (await request(type="query", what="snapshot"))["result"]["snapshot"]
    print("fleet:", [m["id"] for m in snap["modules"]], "edges:", snap["edges"])

    print("subscribing to telemetry at 10 Hz")
    await request(type="query", what="telemetry", rate_hz=10)

    print("jogging limbA.j2 and waiting for the motion event")
    await request(type="joint", joint="limbA.j2", target_rev=0.1)
    batches = 0
    while True:
        msg = json.loads(await conn.recv_text())
        if msg["kind"] == "telemetry" and msg["records"]:
            batches += 1
        if msg["kind"] == "sequence_event" and msg.get("status") == "completed":
            print(f"motion completed at sim t = {msg['body']['t_s']:.3f} s "
                  f"({batches} telemetry batches so far)")
            break

    print("running the limb-to-limb handshake remotely")
    reply = await request(type="run_sequence", name="limb_to_limb")
    print("sequence ack:", reply["result"])
    await conn.close()


asyncio.run(session())

service.world.export_telemetry("teleop_telemetry.csv")
service.world.save_manifest("teleop_manifest.json")
print("wrote teleop_telemetry.csv and teleop_manifest.json "
      "(replay with: limbsim replay teleop_manifest.json)")
service.stop()
