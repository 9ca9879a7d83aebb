"""Three-message mutual authentication and key agreement.

    user                                         server
    T_u, r1; R_1 = r1*P; R_1ms = r1*P_ms
    TK_u = SID_u ^ T_u ^ mask(R_1ms)
                  ---- M1 (TK_u, T_u, R_1) ---->
                                                 check T_u, R_1ms = d_ms*R_1
                                                 unmask SID_u, look up (R_u, P_u)
                                                 R_ums = d_ms*R_u, Auth_ms
                  <--- M2 (T_ms, Auth_ms) ------
    check T_ms, R_ums = r_u*P_ms, verify Auth_ms
    R_msu = d_u*R_ms, Auth_u, SK
                  ---- M3 (Auth_u) ------------>
                                                 R_msu = r_ms*P_u, verify Auth_u, SK

XOR operands are 32 bytes wide: scalars and timestamps are left-padded
with zeros, and the group element enters through ``mask32``.
"""

from __future__ import annotations

import enum
import hmac
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import crypto_core as cc
from .codec import M1, M2, M3, MAX_TIMESTAMP
from .costmodel import OpCounter
from .crypto_core import CurveParams, Point, Rng
from .errors import (
    MecAuthError,
    ReplayedMessageError,
    ScalarOutOfRangeError,
    StaleTimestampError,
    TokenMismatchError,
    UnexpectedMessageError,
)
from .registry import SERVER, USER, Credentials, Directory, DirectoryRecord, SystemParams

DEFAULT_DELTA = 5


class UserState(enum.Enum):
    INIT = "init"
    AWAIT_M2 = "await-m2"
    DONE = "done"
    FAILED = "failed"


class ServerState(enum.Enum):
    AWAIT_M1 = "await-m1"
    AWAIT_M3 = "await-m3"
    DONE = "done"
    FAILED = "failed"


TERMINAL = {UserState.DONE, UserState.FAILED, ServerState.DONE, ServerState.FAILED}


def validate_timestamp(t: int, now: int, delta: int = DEFAULT_DELTA) -> bool:
    """Accept iff |now - t| <= delta (both edges inclusive)."""
    return abs(now - t) <= delta


class ReplayCache:
    """(SID, T_u) pairs seen within the freshness window; safe to share across threads."""

    def __init__(self, delta: int = DEFAULT_DELTA):
        self.delta = delta
        self._seen: Dict[Tuple[int, int], int] = {}
        self._lock = threading.Lock()

    def check_and_add(self, sid: int, t_u: int, now: int) -> bool:
        """Insert if absent. Returns False when the pair was already present."""
        key = (sid, t_u)
        with self._lock:
            stale = [k for k, t in self._seen.items() if not validate_timestamp(t, now, self.delta)]
            for k in stale:
                del self._seen[k]
            if key in self._seen:
                return False
            self._seen[key] = t_u
            return True

    def __len__(self) -> int:
        return len(self._seen)


# -- token and key derivations -------------------------------------------------

def _sid_bytes(curve: CurveParams, sid: int) -> bytes:
    return cc.encode_scalar(curve, sid)


def mask_identity(curve: CurveParams, sid: int, t_u: int, shared: Point) -> bytes:
    """TK_u: identity hidden under the timestamp and the ECDH point's mask."""
    return cc.xor_bytes(cc.pad32(sid), cc.pad32(t_u), cc.mask32(curve, shared))


def unmask_identity(curve: CurveParams, tk: bytes, t_u: int, shared: Point) -> int:
    sid = int.from_bytes(cc.xor_bytes(tk, cc.pad32(t_u), cc.mask32(curve, shared)), "big")
    if sid >= curve.q:
        raise ScalarOutOfRangeError("unmasked pseudo-identity is not below q")
    return sid


def auth_ms_token(curve: CurveParams, sid_u: int, t_u: int, t_ms: int, r_ums: Point) -> bytes:
    s = _sid_bytes(curve, sid_u)
    return cc.xor_bytes(
        cc.h2(s + cc.pad32(t_u) + cc.pad32(t_ms)),
        cc.h2(s + cc.encode_point(curve, r_ums)),
    )


def auth_u_token(curve: CurveParams, sid_u: int, sid_ms: int, t_u: int, t_ms: int, r_msu: Point) -> bytes:
    s = _sid_bytes(curve, sid_u)
    return cc.xor_bytes(
        cc.h2(s + _sid_bytes(curve, sid_ms) + cc.pad32(t_u) + cc.pad32(t_ms)),
        cc.h2(s + cc.encode_point(curve, r_msu)),
    )


def derive_sk(curve: CurveParams, sid_u: int, pt1: Point, pt2: Point, pt3: Point, t_u: int, t_ms: int) -> bytes:
    """Session key over SID_u || R_1ms || R_ums || R_msu || T_u || T_ms."""
    enc = cc.encode_point
    return cc.kdf(
        _sid_bytes(curve, sid_u) + enc(curve, pt1) + enc(curve, pt2) + enc(curve, pt3)
        + cc.pad32(t_u) + cc.pad32(t_ms)
    )


def fingerprint(key: bytes) -> str:
    return cc.h2(b"FP" + key)[:4].hex()


# -- sessions ------------------------------------------------------------------------

class _Session:
    state: enum.Enum
    _failed_state: enum.Enum

    def _expect(self, state) -> None:
        if self.state != state:
            exc = UnexpectedMessageError(f"session is in state {self.state.value}")
            if self.state not in TERMINAL:
                self._fail(exc)
            raise exc

    def _fail(self, exc: MecAuthError) -> None:
        self.state = self._failed_state
        self.error = exc

    def fail(self, exc: MecAuthError) -> None:
        """Mark the session failed from outside (e.g. an undecodable frame)."""
        if self.state not in TERMINAL:
            self._fail(exc)

    @property
    def done(self) -> bool:
        return self.state.value == "done"


@dataclass(eq=False)
class UserSession(_Session):
    params: SystemParams
    creds: Credentials
    server_record: DirectoryRecord
    rng: Rng
    delta: int = DEFAULT_DELTA
    state: UserState = UserState.INIT
    error: Optional[MecAuthError] = None
    counter: OpCounter = field(default_factory=OpCounter)
    r1: Optional[int] = field(default=None, repr=False)
    t_u: Optional[int] = None
    t_ms: Optional[int] = None
    R1: Point = None
    R1ms: Point = field(default=None, repr=False)
    Rums: Point = field(default=None, repr=False)
    Rmsu: Point = field(default=None, repr=False)
    key: Optional[bytes] = field(default=None, repr=False)
    _failed_state = UserState.FAILED

    def __post_init__(self):
        if self.server_record.role != SERVER:
            raise ValueError("peer record is not a server")

    @property
    def curve(self) -> CurveParams:
        return self.params.curve

    def start(self, now: int, r1: Optional[int] = None) -> M1:
        self._expect(UserState.INIT)
        if not 0 <= now <= MAX_TIMESTAMP:
            raise ValueError("timestamp does not fit the 32-bit wire field")
        c = self.curve
        with self.counter.active():
            self.t_u = now
            self.r1 = cc.random_scalar(c, self.rng) if r1 is None else r1
            self.R1 = cc.base_mul(c, self.r1)
            self.R1ms = cc.point_mul(c, self.r1, self.server_record.p_pub)
            tk = mask_identity(c, self.creds.sid, self.t_u, self.R1ms)
        self.state = UserState.AWAIT_M2
        return M1(tk, self.t_u, self.R1)

    def on_m2(self, m2: M2, now: int) -> Tuple[M3, bytes]:
        self._expect(UserState.AWAIT_M2)
        c, srv = self.curve, self.server_record
        try:
            with self.counter.active():
                if not validate_timestamp(m2.t_ms, now, self.delta):
                    raise StaleTimestampError(f"T_ms={m2.t_ms} outside window at {now}")
                self.Rums = cc.point_mul(c, self.creds.sid_nonce, srv.p_pub)
                expected = auth_ms_token(c, self.creds.sid, self.t_u, m2.t_ms, self.Rums)
                if not hmac.compare_digest(expected, m2.auth_ms):
                    raise TokenMismatchError("server authentication token does not verify")
                self.t_ms = m2.t_ms
                self.Rmsu = cc.point_mul(c, self.creds.private_key, srv.r_pub)
                auth_u = auth_u_token(c, self.creds.sid, srv.sid, self.t_u, self.t_ms, self.Rmsu)
                key = derive_sk(c, self.creds.sid, self.R1ms, self.Rums, self.Rmsu, self.t_u, self.t_ms)
        except MecAuthError as exc:
            self._fail(exc)
            raise
        self.key = key
        self.state = UserState.DONE
        return M3(auth_u), key


@dataclass(eq=False)
class ServerSession(_Session):
    params: SystemParams
    creds: Credentials
    directory: Directory
    replay_cache: ReplayCache
    delta: int = DEFAULT_DELTA
    state: ServerState = ServerState.AWAIT_M1
    error: Optional[MecAuthError] = None
    counter: OpCounter = field(default_factory=OpCounter)
    sid_u: Optional[int] = None
    user_record: Optional[DirectoryRecord] = None
    t_u: Optional[int] = None
    t_ms: Optional[int] = None
    R1ms: Point = field(default=None, repr=False)
    Rums: Point = field(default=None, repr=False)
    Rmsu: Point = field(default=None, repr=False)
    key: Optional[bytes] = field(default=None, repr=False)
    _failed_state = ServerState.FAILED

    @property
    def curve(self) -> CurveParams:
        return self.params.curve

    def on_m1(self, m1: M1, now: int) -> M2:
        self._expect(ServerState.AWAIT_M1)
        c = self.curve
        try:
            with self.counter.active():
                if not validate_timestamp(m1.t_u, now, self.delta):
                    raise StaleTimestampError(f"T_u={m1.t_u} outside window at {now}")
                if not 0 <= now <= MAX_TIMESTAMP:
                    raise ValueError("timestamp does not fit the 32-bit wire field")
                R1ms = cc.point_mul(c, self.creds.private_key, m1.r1)
                sid_u = unmask_identity(c, m1.tk, m1.t_u, R1ms)
                rec = self.directory.lookup(sid_u, role=USER)
                if not self.replay_cache.check_and_add(sid_u, m1.t_u, now):
                    raise ReplayedMessageError("M1 already seen inside the freshness window")
                self.sid_u, self.user_record, self.t_u, self.R1ms = sid_u, rec, m1.t_u, R1ms
                self.t_ms = now
                self.Rums = cc.point_mul(c, self.creds.private_key, rec.r_pub)
                auth_ms = auth_ms_token(c, sid_u, self.t_u, self.t_ms, self.Rums)
        except MecAuthError as exc:
            self._fail(exc)
            raise
        self.state = ServerState.AWAIT_M3
        return M2(self.t_ms, auth_ms)

    def on_m3(self, m3: M3) -> bytes:
        self._expect(ServerState.AWAIT_M3)
        c = self.curve
        try:
            with self.counter.active():
                self.Rmsu = cc.point_mul(c, self.creds.sid_nonce, self.user_record.p_pub)
                expected = auth_u_token(c, self.sid_u, self.creds.sid, self.t_u, self.t_ms, self.Rmsu)
                if not hmac.compare_digest(expected, m3.auth_u):
                    raise TokenMismatchError("user authentication token does not verify")
                key = derive_sk(c, self.sid_u, self.R1ms, self.Rums, self.Rmsu, self.t_u, self.t_ms)
        except MecAuthError as exc:
            self._fail(exc)
            raise
        self.key = key
        self.state = ServerState.DONE
        return key


def user_start(session: UserSession, now: int) -> M1:
    return session.start(now)


def server_on_m1(session: ServerSession, m1: M1, now: int) -> M2:
    return session.on_m1(m1, now)


def user_on_m2(session: UserSession, m2: M2, now: int) -> Tuple[M3, bytes]:
    return session.on_m2(m2, now)


def server_on_m3(session: ServerSession, m3: M3) -> bytes:
    return session.on_m3(m3)


def run_in_process(params, user_creds, server_creds, directory, rng, now, delta=DEFAULT_DELTA,
                   replay_cache: Optional[ReplayCache] = None):
    """Honest handshake without a channel. Returns (user_session, server_session, frames)."""
    from .codec import encode_message

    server_rec = directory.lookup(server_creds.sid, role=SERVER)
    user = UserSession(params, user_creds, server_rec, rng, delta)
    server = ServerSession(params, server_creds, directory, replay_cache if replay_cache is not None else ReplayCache(delta), delta)
    m1 = user.start(now)
    m2 = server.on_m1(m1, now)
    m3, _ = user.on_m2(m2, now)
    server.on_m3(m3)
    frames: List[bytes] = [encode_message(m, params.curve) for m in (m1, m2, m3)]
    return user, server, frames
