"""Registration Center: system setup, enrollment and the public directory."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Set, Tuple

from . import crypto_core as cc
from .crypto_core import CurveParams, Point, Rng
from .errors import (
    ConfigError,
    DuplicateIdentityError,
    EmptyIdentityError,
    RegistryError,
    UnknownSIDError,
)

USER = "user"
SERVER = "server"
ROLES = (USER, SERVER)
ROLE_ALIASES = {"user": USER, "u": USER, "server": SERVER, "ms": SERVER, "mec": SERVER}

H1_NAME = "sha256-tag-H1-modq"
H2_NAME = "sha256-tag-H2"

MAX_ID_BYTES = 255


def normalize_role(role: str) -> str:
    try:
        return ROLE_ALIASES[role.lower()]
    except KeyError:
        raise RegistryError(f"unknown role {role!r}") from None


@dataclass(frozen=True)
class SystemParams:
    curve: CurveParams
    master_public: Point
    h1_name: str = H1_NAME
    h2_name: str = H2_NAME

    def dumps(self) -> str:
        return f"curve={self.curve.name}\nmaster_public={cc.encode_point(self.curve, self.master_public).hex()}\n"

    @classmethod
    def loads(cls, text: str) -> "SystemParams":
        kv = parse_kv(text)
        try:
            curve = cc.get_curve(kv["curve"])
            master_public = cc.decode_point(curve, bytes.fromhex(kv["master_public"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad system params file: {exc}") from exc
        if master_public is None:
            raise ConfigError("RC public key is the identity")
        return cls(curve, master_public)


@dataclass
class RCState:
    """Private state of the Registration Center.

    Only the issued identities (and their public pseudo-identities, to keep
    directory keys unique) are retained; per-party secrets are handed out
    and forgotten.
    """

    master_key: int
    params: SystemParams
    issued: Set[str] = field(default_factory=set)
    issued_sids: Set[int] = field(default_factory=set)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __repr__(self) -> str:
        return f"RCState(curve={self.params.curve.name}, issued={len(self.issued)})"

    def dumps(self) -> str:
        c = self.params.curve
        lines = [
            f"curve={c.name}",
            f"master_key={cc.encode_scalar(c, self.master_key).hex()}",
            "issued=" + ",".join(sorted(i.encode().hex() for i in self.issued)),
            "sids=" + ",".join(sorted(cc.encode_scalar(c, s).hex() for s in self.issued_sids)),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RCState":
        kv = parse_kv(text)
        try:
            curve = cc.get_curve(kv["curve"])
            master_key = cc.decode_scalar(curve, bytes.fromhex(kv["master_key"]))
            issued = {bytes.fromhex(h).decode() for h in kv.get("issued", "").split(",") if h}
            sids = {cc.decode_scalar(curve, bytes.fromhex(h)) for h in kv.get("sids", "").split(",") if h}
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad RC state file: {exc}") from exc
        params = SystemParams(curve, cc.base_mul(curve, master_key))
        return cls(master_key, params, issued, sids)


@dataclass(frozen=True)
class Credentials:
    """What a registered party keeps: pseudo-identity, private key and the SID nonce."""

    identity: str
    role: str
    sid: int
    private_key: int
    sid_nonce: int  # its public point is published next to the SID

    def __repr__(self) -> str:
        # keep secrets out of logs and tracebacks
        return f"Credentials(identity={self.identity!r}, role={self.role})"

    def public_key(self, curve: CurveParams) -> Point:
        return cc.base_mul(curve, self.private_key)

    def dumps(self, curve: CurveParams) -> str:
        return (
            f"curve={curve.name}\nrole={self.role}\nid={self.identity.encode().hex()}\n"
            f"sid={cc.encode_scalar(curve, self.sid).hex()}\n"
            f"key={cc.encode_scalar(curve, self.private_key).hex()}\n"
            f"nonce={cc.encode_scalar(curve, self.sid_nonce).hex()}\n"
        )

    @classmethod
    def loads(cls, text: str) -> Tuple["Credentials", CurveParams]:
        kv = parse_kv(text)
        try:
            curve = cc.get_curve(kv["curve"])
            creds = cls(
                identity=bytes.fromhex(kv["id"]).decode(),
                role=normalize_role(kv["role"]),
                sid=cc.decode_scalar(curve, bytes.fromhex(kv["sid"])),
                private_key=cc.decode_scalar(curve, bytes.fromhex(kv["key"])),
                sid_nonce=cc.decode_scalar(curve, bytes.fromhex(kv["nonce"])),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad credentials file: {exc}") from exc
        return creds, curve


@dataclass(frozen=True)
class DirectoryRecord:
    sid: int
    p_pub: Point
    r_pub: Point
    role: str


class Directory:
    """Public lookup table of (SID, P, R) records keyed by canonical SID bytes."""

    def __init__(self, curve: CurveParams, records=()):
        self.curve = curve
        self._by_sid: Dict[bytes, DirectoryRecord] = {}
        for rec in records:
            self.add(rec)

    def _key(self, sid: int) -> bytes:
        return cc.encode_scalar(self.curve, sid)

    def add(self, rec: DirectoryRecord) -> None:
        key = self._key(rec.sid)
        if key in self._by_sid:
            raise RegistryError(f"directory already holds SID {key.hex()}")
        self._by_sid[key] = rec

    def lookup(self, sid: int, role: Optional[str] = None) -> DirectoryRecord:
        if not 0 <= sid < self.curve.q:
            raise UnknownSIDError("pseudo-identity out of range")
        rec = self._by_sid.get(self._key(sid))
        if rec is None or (role is not None and rec.role != role):
            raise UnknownSIDError("no directory record for pseudo-identity")
        return rec

    def __contains__(self, sid: int) -> bool:
        return 0 <= sid < self.curve.q and self._key(sid) in self._by_sid

    def __iter__(self) -> Iterator[DirectoryRecord]:
        return iter(self._by_sid.values())

    def __len__(self) -> int:
        return len(self._by_sid)

    def records(self, role: Optional[str] = None):
        return [r for r in self._by_sid.values() if role is None or r.role == role]

    def dumps(self) -> str:
        c = self.curve
        out = []
        for rec in self._by_sid.values():
            out.append(
                f"{rec.role},{self._key(rec.sid).hex()},"
                f"{cc.encode_point(c, rec.p_pub).hex()},{cc.encode_point(c, rec.r_pub).hex()}"
            )
        return "".join(line + "\n" for line in out)

    @classmethod
    def loads(cls, text: str, curve: CurveParams) -> "Directory":
        d = cls(curve)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                role, sid_hex, p_hex, r_hex = line.split(",")
                rec = DirectoryRecord(
                    sid=cc.decode_scalar(curve, bytes.fromhex(sid_hex)),
                    p_pub=cc.decode_point(curve, bytes.fromhex(p_hex)),
                    r_pub=cc.decode_point(curve, bytes.fromhex(r_hex)),
                    role=normalize_role(role),
                )
            except (ValueError, cc.MalformedPointError, RegistryError) as exc:
                raise ConfigError(f"directory line {lineno}: {exc}") from exc
            d.add(rec)
        return d


def parse_kv(text: str) -> Dict[str, str]:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        k, v = line.split("=", 1)
        kv[k.strip()] = v.strip()
    return kv


def setup(curve: CurveParams, rng: Rng) -> Tuple[RCState, SystemParams]:
    master_key = cc.random_scalar(curve, rng)
    params = SystemParams(curve, cc.base_mul(curve, master_key))
    return RCState(master_key, params), params


def identity_hash(curve: CurveParams, identity: str, r_pub: Point) -> int:
    return cc.h1(curve, identity.encode("utf-8") + cc.encode_point(curve, r_pub))


def register(state: RCState, identity: str, role: str, rng: Rng) -> Tuple[Credentials, DirectoryRecord]:
    """Enroll a user or MEC server; the two phases differ only in the role label."""
    role = normalize_role(role)
    raw = identity.encode("utf-8")
    if not raw:
        raise EmptyIdentityError("identity must be non-empty")
    if len(raw) > MAX_ID_BYTES:
        raise RegistryError(f"identity longer than {MAX_ID_BYTES} bytes")
    curve = state.params.curve
    with state._lock:
        if identity in state.issued:
            raise DuplicateIdentityError(f"{identity!r} is already registered")
        while True:
            nonce = cc.random_scalar(curve, rng)
            r_pub = cc.base_mul(curve, nonce)
            binding = identity_hash(curve, identity, r_pub)
            sid = (nonce + state.master_key * binding) % curve.q
            # a repeated SID would collide in the directory; only plausible on toy curves
            if sid not in state.issued_sids:
                break
        key = cc.random_scalar(curve, rng)
        p_pub = cc.base_mul(curve, key)
        state.issued.add(identity)
        state.issued_sids.add(sid)
    creds = Credentials(identity, role, sid, key, nonce)
    return creds, DirectoryRecord(sid, p_pub, r_pub, role)


def verify_registration(params: SystemParams, identity: str, rec: DirectoryRecord) -> bool:
    """Check SID*G == R + H1(ID || R) * master_public."""
    c = params.curve
    binding = identity_hash(c, identity, rec.r_pub)
    lhs = cc.base_mul(c, rec.sid)
    rhs = cc.point_add(c, rec.r_pub, cc.point_mul(c, binding, params.master_public))
    return lhs == rhs


def lookup(directory: Directory, sid: int) -> DirectoryRecord:
    return directory.lookup(sid)
