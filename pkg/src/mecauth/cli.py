"""Command-line entry points.

    mecauth setup [--curve NAME]
    mecauth register {user,ms} ID
    mecauth demo [--user ID] [--server ID]
    mecauth serve --listen HOST:PORT [--server ID]
    mecauth connect --connect HOST:PORT [--user ID]
    mecauth attack-suite [--scenario FILE]
    mecauth cost-report [--json]

State lives in a directory (``--dir``, default ``.``): params.txt,
rc_state.txt, directory.txt and credentials/<role>-<id>.txt. Settings
may come from a key=value ``--config`` file; flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import re
import secrets
import socket
import socketserver
import sys
import threading
import time
from pathlib import Path
from typing import Optional

from . import costmodel, netsim
from . import crypto_core as cc
from . import registry as rg
from .codec import HEADER_SIZE, M2, M3, decode_message, encode_message, read_header
from .errors import ClaimViolation, ConfigError, MecAuthError, ProtocolError, UnexpectedMessageError, error_name
from .handshake import DEFAULT_DELTA, ReplayCache, ServerSession, UserSession, fingerprint, run_in_process

log = logging.getLogger("mecauth")

EXIT_OK = 0
PRIVATE_MODE = 0o600


class Config:
    """Merged view of flags, config file and defaults."""

    DEFAULTS = {
        "curve": cc.DEFAULT_CURVE.name,
        "delta": str(DEFAULT_DELTA),
        "dir": ".",
        "listen": "127.0.0.1:7878",
        "connect": "127.0.0.1:7878",
    }

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file = {}
        if getattr(args, "config", None):
            try:
                self.file = rg.parse_kv(Path(args.config).read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc

    def get(self, key: str, default=None):
        v = getattr(self.args, key.replace("-", "_"), None)
        if v is not None:
            return v
        if key in self.file:
            return self.file[key]
        return self.DEFAULTS.get(key, default)

    @property
    def delta(self) -> int:
        d = int(self.get("delta"))
        if d <= 0:
            raise ConfigError("delta must be positive")
        return d

    @property
    def seed(self) -> Optional[int]:
        s = self.get("seed")
        return None if s is None else int(s)

    def rng(self, salt: int = 0):
        if self.seed is None:
            return secrets.SystemRandom()
        return random.Random(self.seed * 1_000_003 + salt)

    def now(self) -> int:
        n = self.get("now")
        return int(time.time()) if n is None else int(n)

    def path(self, key: str, default_name: str) -> Path:
        explicit = self.get(key)
        return Path(explicit) if explicit else Path(self.get("dir")) / default_name

    @property
    def params_path(self) -> Path:
        return self.path("params", "params.txt")

    @property
    def rc_path(self) -> Path:
        return self.path("rc_state", "rc_state.txt")

    @property
    def directory_path(self) -> Path:
        return self.path("directory", "directory.txt")

    @property
    def creds_dir(self) -> Path:
        return self.path("credentials_dir", "credentials")


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


def _write_private(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, PRIVATE_MODE)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.chmod(path, PRIVATE_MODE)


def _creds_file(cfg: Config, role: str, identity: str) -> Path:
    safe = identity if re.fullmatch(r"[A-Za-z0-9._-]+", identity) else "x" + identity.encode().hex()
    return cfg.creds_dir / f"{role}-{safe}.txt"


def _load_params(cfg: Config) -> rg.SystemParams:
    return rg.SystemParams.loads(_read(cfg.params_path))


def _load_directory(cfg: Config, curve) -> rg.Directory:
    path = cfg.directory_path
    return rg.Directory.loads(path.read_text() if path.exists() else "", curve)


def _load_creds(cfg: Config, role: str, identity: Optional[str]) -> rg.Credentials:
    if identity is None:
        found = sorted(cfg.creds_dir.glob(f"{role}-*.txt"))
        if not found:
            raise ConfigError(f"no {role} credentials in {cfg.creds_dir}")
        path = found[0]
    else:
        path = _creds_file(cfg, role, identity)
    creds, _ = rg.Credentials.loads(_read(path))
    return creds


def _server_record(directory: rg.Directory, sid_hex: Optional[str]) -> rg.DirectoryRecord:
    if sid_hex:
        return directory.lookup(int(sid_hex, 16), role=rg.SERVER)
    servers = directory.records(rg.SERVER)
    if not servers:
        raise ConfigError("directory lists no MEC server")
    return servers[0]


def _hostport(value: str):
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"expected HOST:PORT, got {value!r}")
    return host, int(port)


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# -- commands ---------------------------------------------------------------------

def cmd_setup(args) -> int:
    cfg = Config(args)
    curve = cc.get_curve(cfg.get("curve"))
    if cfg.rc_path.exists() and not args.force:
        raise ConfigError(f"{cfg.rc_path} exists; pass --force to overwrite")
    state, params = rg.setup(curve, cfg.rng(1))
    cfg.params_path.parent.mkdir(parents=True, exist_ok=True)
    cfg.params_path.write_text(params.dumps())
    _write_private(cfg.rc_path, state.dumps())
    cfg.directory_path.write_text("")
    log.info("system parameters written to %s", cfg.params_path)
    _emit(args, {"curve": curve.name, "master_public": cc.encode_point(curve, params.master_public).hex()},
          f"RC initialised on {curve.name}")
    return EXIT_OK


def cmd_register(args) -> int:
    cfg = Config(args)
    role = rg.normalize_role(args.role)
    state = rg.RCState.loads(_read(cfg.rc_path))
    curve = state.params.curve
    directory = _load_directory(cfg, curve)
    rng = cfg.rng(2 + len(state.issued))
    creds, rec = rg.register(state, args.id, role, rng)
    directory.add(rec)
    _write_private(cfg.rc_path, state.dumps())
    cfg.directory_path.write_text(directory.dumps())
    path = _creds_file(cfg, role, args.id)
    _write_private(path, creds.dumps(curve))
    sid_hex = cc.encode_scalar(curve, creds.sid).hex()
    log.info("registered %s %r", role, args.id)
    _emit(args, {"role": role, "id": args.id, "sid": sid_hex, "credentials": str(path)},
          f"registered {role} {args.id!r} (SID {sid_hex[:16]}...) -> {path}")
    return EXIT_OK


def cmd_demo(args) -> int:
    cfg = Config(args)
    params = _load_params(cfg)
    directory = _load_directory(cfg, params.curve)
    ucreds = _load_creds(cfg, rg.USER, args.user)
    screds = _load_creds(cfg, rg.SERVER, args.server)
    user, server, frames = run_in_process(params, ucreds, screds, directory, cfg.rng(3), cfg.now(), cfg.delta)
    match = user.key == server.key
    text = "\n".join([
        f"M1 {len(frames[0])} bytes, M2 {len(frames[1])} bytes, M3 {len(frames[2])} bytes",
        f"user   key fingerprint: {fingerprint(user.key)}",
        f"server key fingerprint: {fingerprint(server.key)}",
        "keys match" if match else "KEYS DIFFER",
    ])
    _emit(args, {"frames": [f.hex() for f in frames], "user_fp": fingerprint(user.key),
                 "server_fp": fingerprint(server.key), "keys_match": match}, text)
    if not match:
        raise ProtocolError("session keys differ")
    return EXIT_OK


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return buf


def recv_frame(sock: socket.socket) -> bytes:
    """Read one frame; returns b"" if the peer closed before sending anything."""
    header = _recv_exact(sock, HEADER_SIZE)
    if not header:
        return b""
    _, length = read_header(header)
    return header + _recv_exact(sock, length)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        srv = self.server
        session = ServerSession(srv.params, srv.creds, srv.directory, srv.replay_cache, srv.delta)
        try:
            m1 = decode_message(recv_frame(self.request), srv.params.curve)
            m2 = session.on_m1(m1, srv.clock())
            self.request.sendall(encode_message(m2, srv.params.curve))
            m3 = decode_message(recv_frame(self.request), srv.params.curve)
            if not isinstance(m3, M3):
                raise UnexpectedMessageError("expected M3")
            key = session.on_m3(m3)
            log.info("session from %s:%d done, key fingerprint %s", *self.client_address, fingerprint(key))
        except MecAuthError as exc:
            session.fail(exc)
            log.warning("session from %s:%d failed: %s", *self.client_address, error_name(exc))
        finally:
            srv.finished()


class _Daemon(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, params, creds, directory, delta, clock, max_sessions):
        super().__init__(addr, _Handler)
        self.params, self.creds, self.directory = params, creds, directory
        self.delta, self.clock = delta, clock
        self.replay_cache = ReplayCache(delta)
        self.max_sessions = max_sessions
        self.count = 0
        self._lock = threading.Lock()

    def finished(self):
        with self._lock:
            self.count += 1
            if self.max_sessions and self.count >= self.max_sessions:
                threading.Thread(target=self.shutdown, daemon=True).start()


def cmd_serve(args) -> int:
    cfg = Config(args)
    params = _load_params(cfg)
    directory = _load_directory(cfg, params.curve)
    creds = _load_creds(cfg, rg.SERVER, args.server)
    daemon = _Daemon(_hostport(cfg.get("listen")), params, creds, directory, cfg.delta, cfg.now,
                     args.max_sessions)
    host, port = daemon.server_address[:2]
    print(f"listening on {host}:{port}", flush=True)
    with daemon:
        daemon.serve_forever()
    return EXIT_OK


def cmd_connect(args) -> int:
    cfg = Config(args)
    params = _load_params(cfg)
    directory = _load_directory(cfg, params.curve)
    creds = _load_creds(cfg, rg.USER, args.user)
    rec = _server_record(directory, args.server_sid)
    session = UserSession(params, creds, rec, cfg.rng(3), cfg.delta)
    curve = params.curve
    try:
        with socket.create_connection(_hostport(cfg.get("connect")), timeout=10) as sock:
            f1 = encode_message(session.start(cfg.now()), curve)
            sock.sendall(f1)
            f2 = recv_frame(sock)
            if not f2:
                raise ProtocolError("server closed the connection without answering")
            m2 = decode_message(f2, curve)
            if not isinstance(m2, M2):
                raise UnexpectedMessageError("expected M2")
            m3, key = session.on_m2(m2, cfg.now())
            f3 = encode_message(m3, curve)
            sock.sendall(f3)
    except OSError as exc:
        raise ConfigError(f"network error: {exc}") from exc
    _emit(args, {"frames": [f.hex() for f in (f1, f2, f3)], "user_fp": fingerprint(key)},
          f"authenticated; key fingerprint {fingerprint(key)}")
    return EXIT_OK


def cmd_attack_suite(args) -> int:
    cfg = Config(args)
    curve = cc.get_curve(cfg.get("curve"))
    seed = cfg.seed or 0
    if args.scenario:
        parties, _, _ = netsim.make_parties(curve, seed)
        script = netsim.load_script(_read(Path(args.scenario)))
        out = netsim.run_script(parties, script, seed, delta=cfg.delta)
        print(json.dumps(out.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    results = netsim.security_suite(curve, seed, honest_runs=args.honest_runs,
                                    impersonation_trials=args.trials, anonymity_users=args.users)
    lines = [f"[{r.status.upper():>8}] {r.claim}. {r.name}: {r.detail}" for r in results]
    _emit(args, {"claims": [r.as_dict() for r in results],
                 "violations": sum(r.violated for r in results)}, "\n".join(lines))
    if any(r.violated for r in results):
        raise ClaimViolation("security claim violated")
    return EXIT_OK


def cmd_cost_report(args) -> int:
    cfg = Config(args)
    report = costmodel.cost_report(cc.get_curve(cfg.get("curve")))
    _emit(args, report, costmodel.format_cost_report(report))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--dir", help="state directory (default: .)")
    common.add_argument("--curve", help="curve name (secp256r1, toy17)")
    common.add_argument("--delta", type=int, help="freshness window in seconds")
    common.add_argument("--seed", type=int, help="deterministic randomness (testing only)")
    common.add_argument("--now", type=int, help="frozen clock, unix seconds")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mecauth", description="ECC mutual authentication for edge servers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", parents=[common], help="initialise the registration center")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("register", parents=[common], help="enroll a user or MEC server")
    p.add_argument("role", choices=["user", "ms", "server"])
    p.add_argument("id")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("demo", parents=[common], help="in-process honest handshake")
    p.add_argument("--user")
    p.add_argument("--server")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("serve", parents=[common], help="run the MEC server daemon")
    p.add_argument("role", nargs="?", default="ms", choices=["ms", "server"])
    p.add_argument("--listen")
    p.add_argument("--server")
    p.add_argument("--max-sessions", type=int, default=0, help="exit after N sessions (0: never)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("connect", parents=[common], help="authenticate to a running server")
    p.add_argument("--connect")
    p.add_argument("--user")
    p.add_argument("--server-sid", help="hex SID of the server record to use")
    p.set_defaults(func=cmd_connect)

    p = sub.add_parser("attack-suite", parents=[common], help="run the adversarial scenarios")
    p.add_argument("--scenario", help="JSON action list to run instead of the full suite")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--users", type=int, default=50)
    p.add_argument("--honest-runs", type=int, default=20)
    p.set_defaults(func=cmd_attack_suite)

    p = sub.add_parser("cost-report", parents=[common], help="computation/communication overhead tables")
    p.set_defaults(func=cmd_cost_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except MecAuthError as exc:
        print(f"error ({error_name(exc)}): {exc}", file=sys.stderr)
        return exc.exit_code
    except (KeyError, ValueError) as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
