"""Minimal WebSocket (RFC 6455) server and client on asyncio streams.

Text frames only, which is all the teleop protocol needs: each JSON message
rides in one length-delimited text frame.  Handles the HTTP upgrade
handshake, client masking, ping/pong, fragmented messages, and close frames.
Kept dependency-free on purpose; the test suite cross-checks this server
against an independent client implementation.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import os
import struct
from typing import Optional, Tuple

from .errors import ProtocolError

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode()).digest()
    return base64.b64encode(digest).decode()


async def _read_http_head(reader: asyncio.StreamReader) -> dict:
    raw = await reader.readuntil(b"\r\n\r\n")
    lines = raw.decode("latin-1").split("\r\n")
    head = {"_request": lines[0]}
    for line in lines[1:]:
        if ":" in line:
            key, _, value = line.partition(":")
            head[key.strip().lower()] = value.strip()
    return head


async def server_handshake(
    reader: asyncio.StreamReader, writer: asyncio.StreamWriter
) -> dict:
    """Answer one HTTP upgrade request; returns the parsed request headers."""
    head = await _read_http_head(reader)
    if head.get("upgrade", "").lower() != "websocket" or "sec-websocket-key" not in head:
        writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        await writer.drain()
        raise ProtocolError("not a websocket upgrade request")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(head['sec-websocket-key'])}\r\n"
        "\r\n"
    )
    writer.write(response.encode("latin-1"))
    await writer.drain()
    return head


async def client_handshake(
    reader: asyncio.StreamReader,
    writer: asyncio.StreamWriter,
    host: str,
    path: str = "/",
) -> None:
    key = base64.b64encode(os.urandom(16)).decode()
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n"
    )
    writer.write(request.encode("latin-1"))
    await writer.drain()
    head = await _read_http_head(reader)
    if "101" not in head["_request"]:
        raise ProtocolError(f"handshake rejected: {head['_request']}")
    if head.get("sec-websocket-accept") != accept_key(key):
        raise ProtocolError("bad Sec-WebSocket-Accept from server")


def _encode_frame(opcode: int, payload: bytes, mask: bool) -> bytes:
    header = bytearray([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if length < 126:
        header.append(mask_bit | length)
    elif length < 1 << 16:
        header.append(mask_bit | 126)
        header += struct.pack(">H", length)
    else:
        header.append(mask_bit | 127)
        header += struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        header += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(header) + payload


async def _read_frame(reader: asyncio.StreamReader) -> Tuple[bool, int, bytes]:
    first = await reader.readexactly(2)
    fin = bool(first[0] & 0x80)
    opcode = first[0] & 0x0F
    masked = bool(first[1] & 0x80)
    length = first[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", await reader.readexactly(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", await reader.readexactly(8))[0]
    if length > 1 << 24:
        raise ProtocolError("frame too large")
    key = await reader.readexactly(4) if masked else None
    payload = await reader.readexactly(length) if length else b""
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return fin, opcode, payload


class WebSocketConnection:
    """One established connection; ``is_client`` controls frame masking."""

    def __init__(self, reader, writer, is_client: bool):
        self.reader = reader
        self.writer = writer
        self.is_client = is_client
        self.closed = False
        self._send_lock = asyncio.Lock()

    async def send_text(self, text: str) -> None:
        if self.closed:
            raise ProtocolError("connection closed")
        frame = _encode_frame(OP_TEXT, text.encode("utf-8"), mask=self.is_client)
        async with self._send_lock:
            self.writer.write(frame)
            await self.writer.drain()

    async def recv_text(self) -> Optional[str]:
        """Next text message, or None once the peer closes."""
        buffer = b""
        message_opcode: Optional[int] = None
        while True:
            try:
                fin, opcode, payload = await _read_frame(self.reader)
            except (asyncio.IncompleteReadError, ConnectionResetError):
                self.closed = True
                return None
            if opcode == OP_CLOSE:
                await self.close(reply=True)
                return None
            if opcode == OP_PING:
                async with self._send_lock:
                    self.writer.write(_encode_frame(OP_PONG, payload, mask=self.is_client))
                    await self.writer.drain()
                continue
            if opcode == OP_PONG:
                continue
            if opcode in (OP_TEXT, OP_BINARY):
                if message_opcode is not None:
                    raise ProtocolError("interleaved message start inside a fragment")
                message_opcode = opcode
            elif opcode == OP_CONT:
                if message_opcode is None:
                    raise ProtocolError("continuation frame with no message start")
            else:
                raise ProtocolError(f"unsupported opcode {opcode}")
            buffer += payload
            if not fin:
                continue
            if message_opcode == OP_BINARY:
                raise ProtocolError("binary frames are not part of the protocol")
            return buffer.decode("utf-8")

    async def close(self, reply: bool = False) -> None:
        if not self.closed:
            self.closed = True
            try:
                async with self._send_lock:
                    self.writer.write(_encode_frame(OP_CLOSE, b"", mask=self.is_client))
                    await self.writer.drain()
            except (ConnectionResetError, BrokenPipeError, RuntimeError):
                pass
        try:
            self.writer.close()
        except RuntimeError:
            pass


async def connect(host: str, port: int) -> WebSocketConnection:
    reader, writer = await asyncio.open_connection(host, port)
    await client_handshake(reader, writer, f"{host}:{port}")
    return WebSocketConnection(reader, writer, is_client=True)
