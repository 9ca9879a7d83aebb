"""Dolev-Yao channel simulator and attack scenarios.

The adversary owns the channel: every frame an honest party emits lands
in an in-flight queue, and a script of actions decides what happens to it.
Time is virtual, so freshness-window edges are exact.

Connection 0 is the honest user's link to the server. Frames the
adversary injects or replays towards the server open a new connection;
the server's answers on those connections go back to the adversary.

None of this is a proof. Impersonation attempts are a fixed menu of
replay / splice / random-token strategies used to falsify the claims.
"""

from __future__ import annotations

import hmac
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterable, List, Optional, Sequence, Tuple

from . import crypto_core as cc
from . import registry as rg
from .codec import M1, M2, M3, decode_message, encode_message
from .errors import MecAuthError, UnexpectedMessageError, error_name
from .handshake import (
    DEFAULT_DELTA,
    ReplayCache,
    ServerSession,
    UserSession,
    auth_ms_token,
    auth_u_token,
    derive_sk,
    fingerprint,
    mask_identity,
    unmask_identity,
)

START_TIME = 1_700_000_000

USER_END = "user"
SERVER_END = "server"
ADVERSARY_END = "adversary"
HONEST_CONN = 0


# -- adversary actions ----------------------------------------------------------

@dataclass(frozen=True)
class Deliver:
    """Pass the head-of-queue frame through unchanged."""


@dataclass(frozen=True)
class Drop:
    """Intercept the head-of-queue frame; it is recorded but never arrives."""


@dataclass(frozen=True)
class Replay:
    index: int  # position in the list of observed frames


@dataclass(frozen=True)
class Tamper:
    """XOR one byte of the head-of-queue frame, then deliver it."""

    byte: int
    mask: int


@dataclass(frozen=True)
class Inject:
    data: bytes
    to: str = SERVER_END
    conn: Optional[int] = None


@dataclass(frozen=True)
class AdvanceClock:
    seconds: int


_ACTION_NAMES = {
    "deliver": Deliver,
    "drop": Drop,
    "replay": Replay,
    "tamper": Tamper,
    "inject": Inject,
    "advance_clock": AdvanceClock,
}


def action_from_json(obj: dict):
    kind = obj.get("action")
    if kind not in _ACTION_NAMES:
        raise ValueError(f"unknown action {kind!r}")
    if kind == "deliver":
        return Deliver()
    if kind == "drop":
        return Drop()
    if kind == "replay":
        return Replay(int(obj["index"]))
    if kind == "tamper":
        return Tamper(int(obj["byte"]), int(obj.get("mask", 0xFF)))
    if kind == "inject":
        conn = obj.get("conn")
        return Inject(bytes.fromhex(obj["data"]), obj.get("to", SERVER_END), None if conn is None else int(conn))
    return AdvanceClock(int(obj["seconds"]))


def action_to_json(action) -> dict:
    for name, cls in _ACTION_NAMES.items():
        if type(action) is cls:
            out = {"action": name}
            break
    else:
        raise TypeError(f"not an action: {action!r}")
    if isinstance(action, Replay):
        out["index"] = action.index
    elif isinstance(action, Tamper):
        out.update(byte=action.byte, mask=action.mask)
    elif isinstance(action, Inject):
        out.update(data=action.data.hex(), to=action.to)
        if action.conn is not None:
            out["conn"] = action.conn
    elif isinstance(action, AdvanceClock):
        out["seconds"] = action.seconds
    return out


def load_script(text: str) -> list:
    return [action_from_json(a) for a in json.loads(text)]


def dump_script(script: Sequence) -> str:
    return json.dumps([action_to_json(a) for a in script], indent=2)


# -- channel ---------------------------------------------------------------------

class VirtualClock:
    def __init__(self, start: int = START_TIME):
        self.now = start

    def advance(self, seconds: int) -> None:
        if seconds < 0:
            raise ValueError("virtual clock is monotone")
        self.now += seconds


@dataclass(frozen=True)
class InFlight:
    src: str
    dst: str
    conn: Optional[int]
    data: bytes


@dataclass(frozen=True)
class ChannelEvent:
    seq: int
    time: int
    kind: str
    src: str
    dst: str
    conn: Optional[int]
    data: bytes


class SimChannel:
    def __init__(self, clock: VirtualClock):
        self.clock = clock
        self.queue: Deque[InFlight] = deque()
        self.observed: List[InFlight] = []
        self.log: List[ChannelEvent] = []

    def record(self, kind: str, item: InFlight) -> None:
        self.log.append(ChannelEvent(len(self.log), self.clock.now, kind, item.src, item.dst, item.conn, item.data))

    def send(self, item: InFlight) -> None:
        self.observed.append(item)
        self.record("send", item)
        if item.dst != ADVERSARY_END:
            self.queue.append(item)


# -- parties ---------------------------------------------------------------------

@dataclass
class Parties:
    params: rg.SystemParams
    user_creds: rg.Credentials
    server_creds: rg.Credentials
    directory: rg.Directory

    @property
    def curve(self) -> cc.CurveParams:
        return self.params.curve

    @property
    def server_record(self) -> rg.DirectoryRecord:
        return self.directory.lookup(self.server_creds.sid, role=rg.SERVER)


def make_parties(curve: cc.CurveParams = cc.DEFAULT_CURVE, seed: int = 0, n_users: int = 1):
    """Fresh RC with one MEC server and ``n_users`` users.

    Returns (parties_for_first_user, rc_state, list_of_user_credentials).
    """
    rng = random.Random(seed)
    rc, params = rg.setup(curve, rng)
    directory = rg.Directory(curve)
    server_creds, rec = rg.register(rc, "mec-0", rg.SERVER, rng)
    directory.add(rec)
    users = []
    for i in range(n_users):
        creds, rec = rg.register(rc, f"user-{i}", rg.USER, rng)
        directory.add(rec)
        users.append(creds)
    return Parties(params, users[0], server_creds, directory), rc, users


@dataclass
class AttackOutcome:
    user_state: str
    server_states: Dict[int, str]
    errors: List[Tuple[str, Optional[int], str]]
    dishonest_success: bool
    keys_equal: Optional[bool]
    user_key_fp: Optional[str] = None
    server_key_fp: Optional[str] = None
    frames: List[bytes] = field(default_factory=list, repr=False)

    @property
    def error_names(self) -> set:
        return {e[2] for e in self.errors}

    @property
    def honest_done(self) -> bool:
        return self.user_state == "done" and self.server_states.get(HONEST_CONN) == "done"

    def to_dict(self) -> dict:
        return {
            "user_state": self.user_state,
            "server_states": {str(k): v for k, v in self.server_states.items()},
            "errors": [{"party": p, "conn": c, "error": e} for p, c, e in self.errors],
            "dishonest_success": self.dishonest_success,
            "keys_equal": self.keys_equal,
            "user_key_fp": self.user_key_fp,
            "server_key_fp": self.server_key_fp,
        }


class Simulation:
    """One honest user, one MEC server endpoint, an adversarial channel."""

    def __init__(self, parties: Parties, seed: int, *, start_time: int = START_TIME,
                 delta: int = DEFAULT_DELTA, replay_cache: Optional[ReplayCache] = None,
                 user_rng=None):
        self.parties = parties
        self.curve = parties.curve
        self.delta = delta
        self.clock = VirtualClock(start_time)
        self.channel = SimChannel(self.clock)
        server_rec = parties.directory.lookup(parties.server_creds.sid, role=rg.SERVER)
        self.user = UserSession(parties.params, parties.user_creds, server_rec,
                                user_rng or random.Random(seed), delta)
        self.replay_cache = replay_cache if replay_cache is not None else ReplayCache(delta)
        self.server_sessions: Dict[int, ServerSession] = {}
        self.errors: List[Tuple[str, Optional[int], str]] = []
        self.user_sent: List[bytes] = []
        self.user_received: List[bytes] = []
        self.server_sent: Dict[int, List[bytes]] = {}
        self.server_received: Dict[int, List[bytes]] = {}
        self._next_conn = HONEST_CONN + 1

    # endpoints

    def start_user(self) -> None:
        m1 = self.user.start(self.clock.now)
        self._emit(USER_END, SERVER_END, HONEST_CONN, encode_message(m1, self.curve))

    def _emit(self, src: str, dst: str, conn: Optional[int], data: bytes) -> None:
        if src == USER_END:
            self.user_sent.append(data)
        else:
            self.server_sent.setdefault(conn, []).append(data)
        self.channel.send(InFlight(src, dst, conn, data))

    def _error(self, party: str, conn: Optional[int], exc: MecAuthError) -> None:
        self.errors.append((party, conn, error_name(exc)))

    def _to_user(self, data: bytes) -> None:
        self.user_received.append(data)
        try:
            msg = decode_message(data, self.curve)
            if not isinstance(msg, M2):
                raise UnexpectedMessageError(f"user cannot handle {type(msg).__name__}")
            m3, _ = self.user.on_m2(msg, self.clock.now)
        except MecAuthError as exc:
            self.user.fail(exc)
            self._error(USER_END, HONEST_CONN, exc)
            return
        self._emit(USER_END, SERVER_END, HONEST_CONN, encode_message(m3, self.curve))

    def _to_server(self, conn: Optional[int], data: bytes) -> None:
        if conn is None:
            conn = self._next_conn
            self._next_conn += 1
        session = self.server_sessions.get(conn)
        if session is None:
            p = self.parties
            session = ServerSession(p.params, p.server_creds, p.directory, self.replay_cache, self.delta)
            self.server_sessions[conn] = session
        self.server_received.setdefault(conn, []).append(data)
        try:
            msg = decode_message(data, self.curve)
            if isinstance(msg, M1):
                reply = session.on_m1(msg, self.clock.now)
            elif isinstance(msg, M3):
                session.on_m3(msg)
                return
            else:
                raise UnexpectedMessageError("server cannot handle M2")
        except MecAuthError as exc:
            session.fail(exc)
            self._error(SERVER_END, conn, exc)
            return
        dst = USER_END if conn == HONEST_CONN else ADVERSARY_END
        self._emit(SERVER_END, dst, conn, encode_message(reply, self.curve))

    def _arrive(self, item: InFlight) -> None:
        if item.dst == USER_END:
            self._to_user(item.data)
        else:
            self._to_server(item.conn, item.data)

    # adversary

    def apply(self, action) -> None:
        ch = self.channel
        if isinstance(action, AdvanceClock):
            self.clock.advance(action.seconds)
        elif isinstance(action, Deliver):
            if ch.queue:
                item = ch.queue.popleft()
                ch.record("deliver", item)
                self._arrive(item)
        elif isinstance(action, Drop):
            if ch.queue:
                ch.record("drop", ch.queue.popleft())
        elif isinstance(action, Tamper):
            if ch.queue:
                item = ch.queue.popleft()
                buf = bytearray(item.data)
                if 0 <= action.byte < len(buf):
                    buf[action.byte] ^= action.mask & 0xFF
                item = InFlight(ADVERSARY_END, item.dst, item.conn, bytes(buf))
                ch.record("tamper", item)
                self._arrive(item)
        elif isinstance(action, Replay):
            if not 0 <= action.index < len(ch.observed):
                raise ValueError("replay index refers to a frame that was never observed")
            orig = ch.observed[action.index]
            if orig.dst == ADVERSARY_END:
                dst = USER_END if orig.src == SERVER_END else SERVER_END
            else:
                dst = orig.dst
            item = InFlight(ADVERSARY_END, dst, None, orig.data)
            ch.record("replay", item)
            self._arrive(item)
        elif isinstance(action, Inject):
            item = InFlight(ADVERSARY_END, action.to, action.conn, action.data)
            ch.record("inject", item)
            self._arrive(item)
        else:
            raise TypeError(f"unknown action {action!r}")

    def drain(self, limit: int = 64) -> None:
        for _ in range(limit):
            if not self.channel.queue:
                return
            self.apply(Deliver())

    def outcome(self) -> AttackOutcome:
        server_states = {c: s.state.value for c, s in sorted(self.server_sessions.items())}
        dishonest = False
        if self.user.done and self.user_received != self.server_sent.get(HONEST_CONN, []):
            dishonest = True
        for conn, s in self.server_sessions.items():
            if not s.done:
                continue
            if conn != HONEST_CONN or self.server_received.get(conn) != self.user_sent:
                dishonest = True
        honest_server = self.server_sessions.get(HONEST_CONN)
        keys_equal = None
        skey = honest_server.key if honest_server is not None else None
        if self.user.key is not None and skey is not None:
            keys_equal = hmac.compare_digest(self.user.key, skey)
        return AttackOutcome(
            user_state=self.user.state.value,
            server_states=server_states,
            errors=list(self.errors),
            dishonest_success=dishonest,
            keys_equal=keys_equal,
            user_key_fp=fingerprint(self.user.key) if self.user.key else None,
            server_key_fp=fingerprint(skey) if skey else None,
            frames=[e.data for e in self.channel.observed],
        )

    def run(self, script: Iterable = (), *, drain: bool = True, start: bool = True) -> AttackOutcome:
        if start:
            self.start_user()
        for action in script:
            self.apply(action)
        if drain:
            self.drain()
        return self.outcome()


def run_honest(parties: Parties, seed: int, **kw) -> AttackOutcome:
    return Simulation(parties, seed, **kw).run()


def run_script(parties: Parties, script: Sequence, seed: int, *, drain: bool = True, **kw) -> AttackOutcome:
    return Simulation(parties, seed, **kw).run(script, drain=drain)


# -- adversary knowledge ------------------------------------------------------------

class AdversaryView:
    """Everything an outsider can know: public parameters, directory, recorded frames.

    Attribute reads are logged so tests can assert that attack code only
    ever touched public names.
    """

    PUBLIC = frozenset({"curve", "master_public", "directory", "transcripts"})

    def __init__(self, params: rg.SystemParams, directory: rg.Directory,
                 transcripts: Sequence[Sequence[bytes]] = ()):
        self.access_log: List[str] = []
        self._public = {
            "curve": params.curve,
            "master_public": params.master_public,
            "directory": tuple(directory),
            "transcripts": [list(t) for t in transcripts],
        }

    def __getattr__(self, name: str):
        if name.startswith("_"):
            raise AttributeError(name)
        self.access_log.append(name)
        try:
            return self._public[name]
        except KeyError:
            raise AttributeError(f"adversary has no access to {name!r}") from None

    def contains_private_material(self) -> bool:
        banned = (rg.Credentials, rg.RCState, UserSession, ServerSession)
        stack = list(self._public.values())
        while stack:
            v = stack.pop()
            if isinstance(v, banned):
                return True
            if isinstance(v, (list, tuple)):
                stack.extend(v)
        return False

    def server_record(self) -> rg.DirectoryRecord:
        return next(r for r in self.directory if r.role == rg.SERVER)

    def user_records(self) -> List[rg.DirectoryRecord]:
        return [r for r in self.directory if r.role == rg.USER]


IMPERSONATION_STRATEGIES = ("random", "replay", "splice")


def _random_point(curve, rng) -> cc.Point:
    return cc.base_mul(curve, cc.random_scalar(curve, rng))


def _forge_m1(view: AdversaryView, strategy: str, rng: random.Random, now: int) -> Tuple[M1, Optional[int]]:
    """Forged M1 plus the victim SID it claims, when the adversary picked one."""
    curve = view.curve
    if strategy == "random":
        return M1(rng.randbytes(32), now, _random_point(curve, rng)), None
    if strategy == "replay" and view.transcripts:
        old = decode_message(view.transcripts[rng.randrange(len(view.transcripts))][0], curve)
        return M1(old.tk, now, old.r1), None
    # splice: SIDs are public, so a well-formed M1 for a victim is easy to build
    victim = rng.choice(view.user_records())
    eph = cc.random_scalar(curve, rng)
    shared = cc.point_mul(curve, eph, view.server_record().p_pub)
    return M1(mask_identity(curve, victim.sid, now, shared), now, cc.base_mul(curve, eph)), victim.sid


def _forge_m3(view: AdversaryView, strategy: str, rng: random.Random, sid_u: Optional[int], m2: M2, t_u: int) -> M3:
    curve = view.curve
    if strategy == "replay" and view.transcripts:
        return decode_message(view.transcripts[rng.randrange(len(view.transcripts))][2], curve)
    if sid_u is None or strategy == "random":
        return M3(rng.randbytes(32))
    # best guess for the DH point it cannot compute
    guess = _random_point(curve, rng)
    return M3(auth_u_token(curve, sid_u, view.server_record().sid, t_u, m2.t_ms, guess))


def _forge_m2(view: AdversaryView, strategy: str, rng: random.Random, m1: M1, now: int) -> M2:
    curve = view.curve
    if strategy == "random":
        return M2(now, rng.randbytes(32))
    if strategy == "replay" and view.transcripts:
        old = decode_message(view.transcripts[rng.randrange(len(view.transcripts))][1], curve)
        return M2(now, old.auth_ms)
    victim = rng.choice(view.user_records())
    guess = _random_point(curve, rng)
    return M2(now, auth_ms_token(curve, victim.sid, m1.t_u, now, guess))


def impersonation_attempt(view: AdversaryView, parties: Parties, target: str, seed: int,
                          strategy: str = "splice", *, start_time: int = START_TIME,
                          replay_cache: Optional[ReplayCache] = None) -> AttackOutcome:
    """Adversary with public knowledge only tries to complete a handshake with ``target``.

    ``parties`` provides the honest peer; the forging code sees only ``view``.
    Pass the server's long-lived ``replay_cache`` when ``view`` holds
    transcripts recorded against the same server.
    """
    if strategy not in IMPERSONATION_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    rng = random.Random(seed ^ 0x5EED)
    sim = Simulation(parties, seed, start_time=start_time, replay_cache=replay_cache)
    curve = view.curve
    now = sim.clock.now
    if target == rg.SERVER:
        forged, sid_u = _forge_m1(view, strategy, rng, now)
        conn = 1
        sim.apply(Inject(encode_message(forged, curve), SERVER_END, conn))
        replies = [f for f in sim.channel.observed if f.conn == conn and f.src == SERVER_END]
        if replies:
            m2 = decode_message(replies[-1].data, curve)
            m3 = _forge_m3(view, strategy, rng, sid_u, m2, forged.t_u)
            sim.apply(Inject(encode_message(m3, curve), SERVER_END, conn))
        return sim.outcome()
    if target == rg.USER:
        sim.start_user()
        sim.apply(Drop())
        m1 = decode_message(sim.channel.observed[-1].data, curve)
        m2 = _forge_m2(view, strategy, rng, m1, now)
        sim.apply(Inject(encode_message(m2, curve), USER_END, HONEST_CONN))
        sim.apply(Drop())  # swallow any M3 the user emits
        return sim.outcome()
    raise ValueError(f"unknown target {target!r}")


# -- privacy ------------------------------------------------------------------------

M_FIELDS = {0: ("tk", "t_u", "r1"), 1: ("t_ms", "auth_ms"), 2: ("auth_u",)}


def _fields(frames: Sequence[bytes], curve) -> Dict[str, object]:
    out = {}
    for i, data in enumerate(frames[:3]):
        msg = decode_message(data, curve)
        for name in M_FIELDS[i]:
            out[name] = getattr(msg, name)
    return out


def anonymity_scan(transcripts: Dict[str, Sequence[Sequence[bytes]]], directory: rg.Directory) -> dict:
    """Look for pseudo-identities on the wire and for fields repeated across a user's sessions.

    ``transcripts`` maps a user label to that user's sessions, each a list
    of the three frames. The substring check is meaningless on toy curves
    where an encoded SID is a single byte.
    """
    curve = directory.curve
    sid_encodings = {cc.encode_scalar(curve, r.sid): r for r in directory}
    sid_hits = []
    repeated = []
    for label, sessions in transcripts.items():
        for si, frames in enumerate(sessions):
            for fi, data in enumerate(frames):
                for enc in sid_encodings:
                    if enc in data:
                        sid_hits.append({"user": label, "session": si, "frame": fi, "sid": enc.hex()})
        parsed = [_fields(frames, curve) for frames in sessions]
        for i in range(len(parsed)):
            for j in range(i + 1, len(parsed)):
                for name, value in parsed[i].items():
                    if name in parsed[j] and parsed[j][name] == value:
                        repeated.append({"user": label, "field": name, "sessions": [i, j]})
    return {
        "users": len(transcripts),
        "sessions": sum(len(s) for s in transcripts.values()),
        "sid_hits": sid_hits,
        "repeated_fields": repeated,
        "ok": not sid_hits and not repeated,
    }


# -- key compromise -------------------------------------------------------------------

LEAKABLE = ("d_u", "d_ms", "r_u", "r_ms", "r_1")
DERIVABLE = ("R_1ms", "SID_u", "R_ums", "R_msu", "SK")


def key_compromise_report(leaked: Dict[str, int], transcript: Sequence[bytes], params: rg.SystemParams,
                          directory: rg.Directory, server_sid: int) -> dict:
    """What an eavesdropper learns from one recorded session plus the leaked scalars.

    Every derivable value is actually computed from public data and the leak;
    nothing is inferred symbolically. ``server_sid`` names the server the
    victim talked to (visible from the network path).
    """
    unknown = set(leaked) - set(LEAKABLE)
    if unknown:
        raise ValueError(f"cannot leak {sorted(unknown)}")
    curve = params.curve
    m1 = decode_message(transcript[0], curve)
    m2 = decode_message(transcript[1], curve)
    srv = directory.lookup(server_sid, role=rg.SERVER)
    got: Dict[str, object] = {}
    how: Dict[str, str] = {}

    def learn(name, value, route):
        if name not in got and value is not None:
            got[name] = value
            how[name] = route

    for _ in range(4):
        if "r_1" in leaked:
            learn("R_1ms", cc.point_mul(curve, leaked["r_1"], srv.p_pub), "r_1 * P_ms")
        if "d_ms" in leaked:
            learn("R_1ms", cc.point_mul(curve, leaked["d_ms"], m1.r1), "d_ms * R_1")
        if "R_1ms" in got and "SID_u" not in got:
            try:
                sid = unmask_identity(curve, m1.tk, m1.t_u, got["R_1ms"])
                if sid in directory:
                    learn("SID_u", sid, "unmask TK_u")
            except MecAuthError:
                pass
        if "r_u" in leaked:
            learn("R_ums", cc.point_mul(curve, leaked["r_u"], srv.p_pub), "r_u * P_ms")
        if "SID_u" not in got:
            # link the session to a directory entry by recomputing Auth_ms
            for rec in directory.records(rg.USER):
                cand = got.get("R_ums")
                if cand is None and "d_ms" in leaked:
                    cand = cc.point_mul(curve, leaked["d_ms"], rec.r_pub)
                if cand is not None and auth_ms_token(curve, rec.sid, m1.t_u, m2.t_ms, cand) == m2.auth_ms:
                    learn("SID_u", rec.sid, "match Auth_ms against directory")
                    break
        if "SID_u" in got:
            urec = directory.lookup(got["SID_u"], role=rg.USER)
            if "d_ms" in leaked:
                learn("R_ums", cc.point_mul(curve, leaked["d_ms"], urec.r_pub), "d_ms * R_u")
            if "r_ms" in leaked:
                learn("R_msu", cc.point_mul(curve, leaked["r_ms"], urec.p_pub), "r_ms * P_u")
        if "d_u" in leaked:
            learn("R_msu", cc.point_mul(curve, leaked["d_u"], srv.r_pub), "d_u * R_ms")
        if all(k in got for k in ("SID_u", "R_1ms", "R_ums", "R_msu")):
            learn("SK", derive_sk(curve, got["SID_u"], got["R_1ms"], got["R_ums"], got["R_msu"],
                                  m1.t_u, m2.t_ms), "kdf over recovered inputs")

    findings = []
    long_term_only = set(leaked) <= {"d_u", "d_ms"}
    if "SK" in got and long_term_only:
        findings.append(
            "session key of a past session recovered from the two long-term private keys alone; "
            "the forward-secrecy claim does not hold against this leak"
        )
    if "SID_u" in got and not ({"r_1", "r_u"} & set(leaked)) and "d_ms" in leaked:
        findings.append("server private key alone de-anonymizes recorded sessions")
    return {
        "leaked": sorted(leaked),
        "computable": {k: k in got for k in DERIVABLE},
        "routes": how,
        "values": got,
        "findings": findings,
    }


def compromise_experiment(parties: Parties, leak: Iterable[str], seed: int = 0) -> dict:
    """Run an honest session, leak the chosen secrets, and check every recovered value."""
    sim = Simulation(parties, seed)
    out = sim.run()
    if not out.honest_done:
        raise RuntimeError("honest session failed")
    u, s = sim.user, sim.server_sessions[HONEST_CONN]
    truth_secrets = {
        "d_u": parties.user_creds.private_key, "r_u": parties.user_creds.sid_nonce,
        "d_ms": parties.server_creds.private_key, "r_ms": parties.server_creds.sid_nonce, "r_1": u.r1,
    }
    leaked = {k: truth_secrets[k] for k in leak}
    transcript = sim.user_sent[:1] + sim.server_sent[HONEST_CONN][:1] + sim.user_sent[1:2]
    report = key_compromise_report(leaked, transcript, parties.params, parties.directory,
                                   parties.server_creds.sid)
    truth = {"R_1ms": u.R1ms, "SID_u": parties.user_creds.sid, "R_ums": u.Rums, "R_msu": u.Rmsu, "SK": u.key}
    report["verified"] = {k: report["values"][k] == truth[k] for k in report["values"]}
    assert s.key == u.key
    return report


def report_to_json(report: dict) -> dict:
    """Strip raw recovered values (points, keys) for printing."""
    return {k: v for k, v in report.items() if k != "values"}


# -- claim suite -------------------------------------------------------------------

@dataclass
class ClaimResult:
    claim: int
    name: str
    status: str  # "holds" | "violated" | "finding" | "n/a"
    detail: str

    @property
    def violated(self) -> bool:
        return self.status == "violated"

    def as_dict(self) -> dict:
        return {"claim": self.claim, "name": self.name, "status": self.status, "detail": self.detail}


def tamper_positions(parties: Parties, seed: int = 0, masks=(0x01, 0xFF)):
    """Yield (message_index, byte, mask, outcome) for every single-byte tamper."""
    honest = run_honest(parties, seed)
    for k, frame in enumerate(honest.frames[:3]):
        for pos in range(len(frame)):
            for mask in masks:
                script = [Deliver()] * k + [Tamper(pos, mask)]
                yield k, pos, mask, run_script(parties, script, seed, drain=False)


def tamper_rejected(k: int, out: AttackOutcome) -> bool:
    """The party receiving tampered message k ended Failed and nobody was fooled."""
    receiver = out.user_state if k == 1 else out.server_states.get(HONEST_CONN)
    return receiver == "failed" and not out.dishonest_success


def replay_scenarios(parties: Parties, delta: int = DEFAULT_DELTA, seed: int = 0):
    """(name, outcome, expected_error) for the stale and in-window replays of M1."""
    late = run_script(parties, [Drop(), AdvanceClock(delta + 1), Replay(0)], seed, drain=False)
    inside = run_script(parties, [Deliver(), Deliver(), Deliver(), Replay(0)], seed, drain=False)
    return [("replay-after-window", late, "stale-timestamp"),
            ("replay-inside-window", inside, "replayed-message")]


# substring and repeat scans only mean something once collisions are rare
MIN_SCAN_BYTES = 8


def security_suite(curve: cc.CurveParams = cc.DEFAULT_CURVE, seed: int = 0, *, honest_runs: int = 20,
                   impersonation_trials: int = 100, anonymity_users: int = 50) -> List[ClaimResult]:
    parties, rc, users = make_parties(curve, seed, n_users=max(anonymity_users, 1))
    results = []

    outs = [run_honest(parties, seed + i, start_time=START_TIME + i) for i in range(honest_runs)]
    agree = sum(o.honest_done and bool(o.keys_equal) for o in outs)
    distinct = len({o.user_key_fp for o in outs})
    results.append(ClaimResult(2, "session key agreement",
                               "holds" if agree == honest_runs else "violated",
                               f"{agree}/{honest_runs} honest runs agreed; {distinct} distinct keys"))

    # impersonation: transcripts recorded earlier against the same server
    cache = ReplayCache(DEFAULT_DELTA)
    recorded = []
    for i in range(4):
        sim = Simulation(parties, seed + 1000 + i, start_time=START_TIME + 2 * i, replay_cache=cache)
        recorded.append(sim.run().frames[:3])
    view = AdversaryView(parties.params, parties.directory, recorded)
    wins = 0
    for t in range(impersonation_trials):
        target = rg.SERVER if t % 2 == 0 else rg.USER
        strategy = IMPERSONATION_STRATEGIES[(t // 2) % len(IMPERSONATION_STRATEGIES)]
        # never the same second as a recorded session: see the same-second replay note
        when = START_TIME + 2 * (t % 6) + 1
        out = impersonation_attempt(view, parties, target, seed + t, strategy,
                                    start_time=when, replay_cache=cache)
        wins += out.dishonest_success
    clean_view = set(view.access_log) <= AdversaryView.PUBLIC and not view.contains_private_material()
    status = "holds" if wins == 0 and clean_view else "violated"
    detail = f"{wins}/{impersonation_trials} forged handshakes accepted; adversary touched only public data: {clean_view}"
    results.append(ClaimResult(1, "mutual authentication", status, detail))
    results.append(ClaimResult(7, "resists impersonation", status, detail))

    transcripts = {}
    for i, creds in enumerate(users[:anonymity_users]):
        p = Parties(parties.params, creds, parties.server_creds, parties.directory)
        sessions = []
        for j in range(2):
            o = run_honest(p, seed + 7919 * i + j, start_time=START_TIME + 100 + 10 * j)
            sessions.append(o.frames[:3])
        transcripts[creds.identity] = sessions
    scan = anonymity_scan(transcripts, parties.directory)
    if curve.scalar_size < MIN_SCAN_BYTES:
        why = f"not meaningful with {curve.scalar_size}-byte encodings"
        results.append(ClaimResult(3, "user anonymity", "n/a", why))
        results.append(ClaimResult(4, "user untraceability", "n/a", why))
    else:
        results.append(ClaimResult(3, "user anonymity", "holds" if not scan["sid_hits"] else "violated",
                                   f"{len(scan['sid_hits'])} pseudo-identity occurrences on the wire"))
        results.append(ClaimResult(4, "user untraceability", "holds" if not scan["repeated_fields"] else "violated",
                                   f"{len(scan['repeated_fields'])} wire fields repeated across sessions"))

    dup_rejected = False
    try:
        rg.register(rc, users[0].identity, rg.USER, random.Random(seed))
    except rg.DuplicateIdentityError:
        dup_rejected = True
    ok = dup_rejected and agree == honest_runs
    results.append(ClaimResult(5, "single sign-in", "holds" if ok else "violated",
                               f"re-registration rejected: {dup_rejected}; one registration served {honest_runs} sessions"))

    report = compromise_experiment(parties, ["d_u", "d_ms"], seed)
    sk = report["computable"]["SK"] and report["verified"].get("SK", False)
    results.append(ClaimResult(6, "perfect forward secrecy", "finding",
                               "leaking d_u and d_ms recovers a recorded session key" if sk
                               else "leaking d_u and d_ms did not recover the session key"))

    bad = [(k, pos, mask) for k, pos, mask, out in tamper_positions(parties, seed) if not tamper_rejected(k, out)]
    results.append(ClaimResult(8, "resists man-in-the-middle", "holds" if not bad else "violated",
                               f"{len(bad)} single-byte tampers not rejected"))

    rep = replay_scenarios(parties, DEFAULT_DELTA, seed)
    rep_ok = all(exp in out.error_names and not out.dishonest_success for _, out, exp in rep)
    results.append(ClaimResult(9, "replay protection", "holds" if rep_ok else "violated",
                               "; ".join(f"{n}: {sorted(o.error_names)}" for n, o, _ in rep)))
    return sorted(results, key=lambda r: r.claim)
