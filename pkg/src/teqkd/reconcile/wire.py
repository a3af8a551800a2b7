"""Binary framing for the public reconciliation channel.

Frame: ``b"TEQK" | version u8 | type u8 | payload_len u32 | payload``, all
integers big-endian.
"""

from __future__ import annotations

import enum
import socket
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import MalformedFrame, ProtocolTimeout, VersionMismatch

MAGIC = b"TEQK"
VERSION = 1
HEADER = struct.Struct(">4sBBI")
MAX_PAYLOAD = 1 << 20


class MsgType(enum.IntEnum):
    HELLO = 0
    PARAMS = 1
    SYNDROME = 2
    RESULT = 3
    BYE = 4


class Status(enum.IntEnum):
    OK = 0
    FAILED = 1


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    payload: bytes


def encode_frame(msg_type: MsgType, payload: bytes = b"") -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise ValueError("payload too large")
    return HEADER.pack(MAGIC, VERSION, int(msg_type), len(payload)) + payload


def decode_header(header: bytes) -> tuple[MsgType, int]:
    if len(header) != HEADER.size:
        raise MalformedFrame("truncated header")
    magic, version, mtype, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise MalformedFrame(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"peer speaks version {version}, expected {VERSION}")
    try:
        t = MsgType(mtype)
    except ValueError:
        raise MalformedFrame(f"unknown message type {mtype}") from None
    if length > MAX_PAYLOAD:
        raise MalformedFrame(f"payload length {length} exceeds limit")
    return t, length


def decode_frame(data: bytes) -> tuple[Frame, bytes]:
    """Parse one frame from ``data``; returns (frame, remaining bytes)."""
    t, length = decode_header(data[: HEADER.size])
    end = HEADER.size + length
    if len(data) < end:
        raise MalformedFrame("truncated payload")
    return Frame(t, bytes(data[HEADER.size:end])), data[end:]


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    buf = bytearray()
    while len(buf) < count:
        try:
            chunk = sock.recv(count - len(buf))
        except socket.timeout:
            raise ProtocolTimeout("peer did not answer in time") from None
        if not chunk:
            if buf:
                raise MalformedFrame(f"connection closed after {len(buf)} of {count} bytes")
            raise ConnectionError("connection closed")
        buf += chunk
    return bytes(buf)


def read_frame(sock: socket.socket) -> Frame:
    t, length = decode_header(_recv_exact(sock, HEADER.size))
    payload = _recv_exact(sock, length) if length else b""
    return Frame(t, payload)


def write_frame(sock: socket.socket, msg_type: MsgType, payload: bytes = b"") -> None:
    sock.sendall(encode_frame(msg_type, payload))


# ---------------------------------------------------------------- payloads


def pack_hello(nonce: bytes, next_block: int = 0) -> bytes:
    if len(nonce) != 8:
        raise ValueError("nonce must be 8 bytes")
    return nonce + struct.pack(">I", next_block)


def unpack_hello(payload: bytes) -> tuple[bytes, int]:
    if len(payload) != 12:
        raise MalformedFrame("HELLO payload must be 12 bytes")
    return payload[:8], struct.unpack(">I", payload[8:])[0]


def pack_params(n_bins: int, sigma: float, code_id: str) -> bytes:
    cid = code_id.encode("utf-8")
    return struct.pack(">Bd", n_bins, sigma) + struct.pack(">H", len(cid)) + cid


def unpack_params(payload: bytes) -> tuple[int, float, str]:
    if len(payload) < 11:
        raise MalformedFrame("PARAMS payload too short")
    n_bins, sigma = struct.unpack(">Bd", payload[:9])
    (clen,) = struct.unpack(">H", payload[9:11])
    if len(payload) != 11 + clen:
        raise MalformedFrame("PARAMS code id length mismatch")
    try:
        cid = payload[11:].decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedFrame("code id is not UTF-8") from None
    return n_bins, sigma, cid


def pack_symbols(symbols, width: int) -> bytes:
    """Concatenate ``width``-bit symbols MSB-first, zero-padded to whole bytes."""
    s = np.asarray(symbols, dtype=np.int64)
    bits = ((s[:, None] >> np.arange(width - 1, -1, -1)) & 1).astype(np.uint8).ravel()
    return np.packbits(bits).tobytes()


def unpack_symbols(data: bytes, count: int, width: int) -> np.ndarray:
    need = (count * width + 7) // 8
    if len(data) != need:
        raise MalformedFrame(f"expected {need} syndrome bytes, got {len(data)}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[: count * width]
    if np.any(np.unpackbits(np.frombuffer(data, dtype=np.uint8))[count * width:]):
        raise MalformedFrame("nonzero padding bits")
    vals = bits.reshape(count, width).astype(np.int64) << np.arange(width - 1, -1, -1)
    return vals.sum(axis=1)


def pack_syndrome(block_index: int, syndrome, width: int) -> bytes:
    return struct.pack(">I", block_index) + pack_symbols(syndrome, width)


def unpack_syndrome(payload: bytes, count: int, width: int) -> tuple[int, np.ndarray]:
    if len(payload) < 4:
        raise MalformedFrame("SYNDROME payload too short")
    (idx,) = struct.unpack(">I", payload[:4])
    return idx, unpack_symbols(payload[4:], count, width)


def pack_result(block_index: int, status: Status) -> bytes:
    return struct.pack(">IB", block_index, int(status))


def unpack_result(payload: bytes) -> tuple[int, Status]:
    if len(payload) != 5:
        raise MalformedFrame("RESULT payload must be 5 bytes")
    idx, st = struct.unpack(">IB", payload)
    try:
        return idx, Status(st)
    except ValueError:
        raise MalformedFrame(f"unknown status {st}") from None
