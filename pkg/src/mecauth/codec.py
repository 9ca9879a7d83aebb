"""Wire format for the three handshake messages.

Frame layout::

    [type: 1 byte][length: 2 bytes BE][payload: length bytes]

    M1 (0x01): TK_u (32) | T_u (4, BE seconds) | R_1 (compressed point)
    M2 (0x02): T_ms (4) | Auth_ms (32)
    M3 (0x03): Auth_u (32)

On a 256-bit curve the payloads are 69, 36 and 32 bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import crypto_core as cc
from .crypto_core import DIGEST_SIZE, CurveParams, Point
from .errors import LengthMismatchError, TruncatedFrameError, UnknownTypeError

M1_TYPE = 0x01
M2_TYPE = 0x02
M3_TYPE = 0x03

HEADER_SIZE = 3
TIMESTAMP_SIZE = 4
MAX_TIMESTAMP = (1 << 32) - 1


@dataclass(frozen=True)
class M1:
    tk: bytes
    t_u: int
    r1: Point


@dataclass(frozen=True)
class M2:
    t_ms: int
    auth_ms: bytes


@dataclass(frozen=True)
class M3:
    auth_u: bytes


Message = Union[M1, M2, M3]


def payload_size(msg_type: int, curve: CurveParams) -> int:
    if msg_type == M1_TYPE:
        return DIGEST_SIZE + TIMESTAMP_SIZE + curve.point_size
    if msg_type == M2_TYPE:
        return TIMESTAMP_SIZE + DIGEST_SIZE
    if msg_type == M3_TYPE:
        return DIGEST_SIZE
    raise UnknownTypeError(f"unknown message type 0x{msg_type:02x}")


def _ts(t: int) -> bytes:
    if not 0 <= t <= MAX_TIMESTAMP:
        raise ValueError("timestamp does not fit in 32 bits")
    return t.to_bytes(TIMESTAMP_SIZE, "big")


def _digest(b: bytes) -> bytes:
    if len(b) != DIGEST_SIZE:
        raise ValueError("token must be 32 bytes")
    return b


def frame(msg_type: int, payload: bytes) -> bytes:
    return bytes([msg_type]) + len(payload).to_bytes(2, "big") + payload


def encode_message(msg: Message, curve: CurveParams) -> bytes:
    if isinstance(msg, M1):
        if msg.r1 is None:
            raise ValueError("R_1 must not be the identity")
        payload = _digest(msg.tk) + _ts(msg.t_u) + cc.encode_point(curve, msg.r1)
        return frame(M1_TYPE, payload)
    if isinstance(msg, M2):
        return frame(M2_TYPE, _ts(msg.t_ms) + _digest(msg.auth_ms))
    if isinstance(msg, M3):
        return frame(M3_TYPE, _digest(msg.auth_u))
    raise TypeError(f"not a handshake message: {type(msg).__name__}")


def read_header(data: bytes):
    """Return (msg_type, length); raises TruncatedFrameError on short input."""
    if len(data) < HEADER_SIZE:
        raise TruncatedFrameError(f"frame header needs {HEADER_SIZE} bytes, got {len(data)}")
    return data[0], int.from_bytes(data[1:3], "big")


def decode_message(data: bytes, curve: CurveParams) -> Message:
    msg_type, length = read_header(data)
    expected = payload_size(msg_type, curve)
    body = data[HEADER_SIZE:]
    if len(body) < length:
        raise TruncatedFrameError(f"frame declares {length} payload bytes, {len(body)} present")
    if len(body) > length:
        raise LengthMismatchError(f"{len(body) - length} trailing bytes after frame")
    if length != expected:
        raise LengthMismatchError(f"type 0x{msg_type:02x} payload must be {expected} bytes, got {length}")
    if msg_type == M1_TYPE:
        tk = body[:DIGEST_SIZE]
        t_u = int.from_bytes(body[DIGEST_SIZE:DIGEST_SIZE + TIMESTAMP_SIZE], "big")
        return M1(tk, t_u, cc.decode_point(curve, body[DIGEST_SIZE + TIMESTAMP_SIZE:]))
    if msg_type == M2_TYPE:
        return M2(int.from_bytes(body[:TIMESTAMP_SIZE], "big"), body[TIMESTAMP_SIZE:])
    return M3(body)
