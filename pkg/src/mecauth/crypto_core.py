"""Short-Weierstrass curve arithmetic, hashes and canonical encodings.

Points are plain tuples ``(x, y)`` of affine coordinates; the identity is
``None``. Scalars are plain ints reduced modulo the group order ``q``.

Scalar multiplication works internally in Jacobian coordinates with a
width-5 NAF over a cached table of odd multiples, so repeated
multiplications of the same base (the generator, directory keys) only pay
for the table once. Nothing here is constant-time.
"""

from __future__ import annotations

import hashlib
import os
from contextvars import ContextVar
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Protocol, Tuple

from .errors import MalformedPointError

# gmpy2 roughly halves the cost of the 256-bit field arithmetic inside
# point_mul. MECAUTH_PURE_INT=1 forces plain Python ints.
if os.environ.get("MECAUTH_PURE_INT", "") not in ("", "0"):
    _mpz = int
else:
    try:
        from gmpy2 import mpz as _mpz
    except ImportError:  # pragma: no cover
        _mpz = int
ACCELERATED = _mpz is not int

Point = Optional[Tuple[int, int]]
INFINITY: Point = None

DIGEST_SIZE = 32

H1_TAG = b"H1"
H2_TAG = b"H2"
MASK_TAG = b"MASK"
KDF_TAG = b"KDF"


class Rng(Protocol):
    def getrandbits(self, k: int) -> int: ...


# -- operation counting hook -------------------------------------------------
# The cost model installs a counter here; crypto_core only calls record().

_active_counter: ContextVar = ContextVar("mecauth_op_counter", default=None)


def _tally(kind: str) -> None:
    counter = _active_counter.get()
    if counter is not None:
        counter.record(kind)


# -- curves ------------------------------------------------------------------

@dataclass(frozen=True)
class CurveParams:
    """y^2 = x^3 + a*x + b over F_p, generator ``g`` of prime order ``q``."""

    name: str
    p: int
    a: int
    b: int
    g: Tuple[int, int]
    q: int

    @property
    def coord_size(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_size(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @property
    def point_size(self) -> int:
        """Length of a compressed non-identity point."""
        return 1 + self.coord_size

    def __repr__(self) -> str:
        return f"CurveParams({self.name!r})"


P256 = CurveParams(
    name="secp256r1",
    p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
    a=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFC,
    b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
    g=(
        0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
        0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    ),
    q=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
)

# Small enough to enumerate: 19 points including the identity.
TOY = CurveParams(name="toy17", p=17, a=2, b=2, g=(5, 1), q=19)

CURVES = {c.name: c for c in (P256, TOY)}
CURVES["p256"] = P256
CURVES["toy"] = TOY
DEFAULT_CURVE = P256


def get_curve(name: str) -> CurveParams:
    try:
        return CURVES[name]
    except KeyError:
        raise KeyError(f"unknown curve {name!r}; known: {sorted(CURVES)}") from None


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24, probabilistic-strong beyond."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for sp in small:
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def validate_curve(curve: CurveParams) -> None:
    """Raise ValueError unless the parameters form a usable prime-order group."""
    p, a, b = curve.p, curve.a, curve.b
    if (4 * a ** 3 + 27 * b ** 2) % p == 0:
        raise ValueError("singular curve")
    if not is_on_curve(curve, curve.g):
        raise ValueError("generator not on curve")
    if not is_prime(curve.q):
        raise ValueError("group order is not prime")
    if point_mul(curve, curve.q, curve.g, _count=False) is not INFINITY:
        raise ValueError("q*G is not the identity")


def is_on_curve(curve: CurveParams, pt: Point) -> bool:
    if pt is None:
        return True
    x, y = pt
    p = curve.p
    if not (0 <= x < p and 0 <= y < p):
        return False
    return (y * y - (x * x * x + curve.a * x + curve.b)) % p == 0


# -- affine group law (reference path, also used by point_add) -----------------

def _affine_add(curve: CurveParams, p1: Point, p2: Point) -> Point:
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    p = curve.p
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return None
        lam = (3 * x1 * x1 + curve.a) * pow(2 * y1, -1, p) % p
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return x3, (lam * (x1 - x3) - y1) % p


def point_neg(curve: CurveParams, pt: Point) -> Point:
    if pt is None:
        return None
    return pt[0], (-pt[1]) % curve.p


def point_add(curve: CurveParams, p1: Point, p2: Point) -> Point:
    _tally("add")
    return _affine_add(curve, p1, p2)


# -- Jacobian arithmetic for scalar multiplication -------------------------------

def _jac_double(p, a, X, Y, Z):
    if Y == 0 or Z == 0:
        return 0, 1, 0
    YY = Y * Y % p
    S = 4 * X * YY % p
    ZZ = Z * Z % p
    if a is None:
        M = 3 * (X - ZZ) * (X + ZZ) % p
    else:
        M = (3 * X * X + a * ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y * Z % p
    return X3, Y3, Z3


def _jac_add_affine(p, a, X1, Y1, Z1, x2, y2):
    """Jacobian + affine (mixed) addition. ``a`` is None when a == -3."""
    if Z1 == 0:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    H = (U2 - X1) % p
    r = (S2 - Y1) % p
    if H == 0:
        if r == 0:
            return _jac_double(p, a, X1, Y1, Z1)
        return 0, 1, 0
    HH = H * H % p
    HHH = H * HH % p
    V = X1 * HH % p
    X3 = (r * r - HHH - 2 * V) % p
    Y3 = (r * (V - X3) - Y1 * HHH) % p
    Z3 = Z1 * H % p
    return X3, Y3, Z3


def _to_affine(p: int, X, Y, Z) -> Point:
    if Z == 0:
        return None
    zinv = pow(int(Z), -1, p)
    zinv2 = zinv * zinv % p
    return int(X) * zinv2 % p, int(Y) * zinv2 * zinv % p


_WINDOW = 5


@lru_cache(maxsize=1024)
def _odd_multiples(curve: CurveParams, pt: Tuple[int, int]):
    """Affine P, 3P, ..., (2^(w-1)-1)P as (x, y, -y) triples."""
    count = 1 << (_WINDOW - 2)
    table = [pt]
    twice = _affine_add(curve, pt, pt)
    for _ in range(count - 1):
        table.append(_affine_add(curve, table[-1], twice))
    return tuple((_mpz(x), _mpz(y), _mpz(curve.p - y)) for x, y in table)


def _wnaf(k: int) -> list:
    digits = []
    width = 1 << _WINDOW
    half = width >> 1
    while k:
        if k & 1:
            d = k & (width - 1)
            if d >= half:
                d -= width
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


# Fixed-base tables: row i holds j * 16^i * P for j = 1..15, so a
# multiplication is ~q.bit_length()/4 mixed additions and no doublings.
_FB_BITS = 4
_FB_MIN_ORDER_BITS = 64
_FB_PROMOTE_AFTER = 2
_use_counts: dict = {}


@lru_cache(maxsize=256)
def _fixed_base_table(curve: CurveParams, pt: Tuple[int, int]):
    windows = (curve.q.bit_length() + _FB_BITS - 1) // _FB_BITS
    rows = []
    base = pt
    for _ in range(windows):
        row = [base]
        for _ in range((1 << _FB_BITS) - 2):
            row.append(_affine_add(curve, row[-1], base))
        rows.append(tuple((_mpz(x), _mpz(y)) for x, y in row))
        base = _affine_add(curve, row[-1], base)
    return tuple(rows)


def _wants_fixed_base(curve: CurveParams, pt: Tuple[int, int]) -> bool:
    if curve.q.bit_length() < _FB_MIN_ORDER_BITS:
        return False
    if pt == curve.g:
        return True
    key = (curve.name, pt)
    n = _use_counts.get(key, 0) + 1
    if len(_use_counts) > 4096:
        _use_counts.clear()
    _use_counts[key] = n
    return n >= _FB_PROMOTE_AFTER


def _mul_fixed_base(curve: CurveParams, k: int, pt: Tuple[int, int]) -> Point:
    rows = _fixed_base_table(curve, pt)
    p = _mpz(curve.p)
    a = None if curve.a == curve.p - 3 else _mpz(curve.a)
    add = _jac_add_affine
    X, Y, Z = _mpz(0), _mpz(1), _mpz(0)
    mask = (1 << _FB_BITS) - 1
    i = 0
    while k:
        d = k & mask
        if d:
            x2, y2 = rows[i][d - 1]
            X, Y, Z = add(p, a, X, Y, Z, x2, y2)
        k >>= _FB_BITS
        i += 1
    return _to_affine(curve.p, X, Y, Z)


def _mul_wnaf(curve: CurveParams, k: int, pt: Tuple[int, int]) -> Point:
    table = _odd_multiples(curve, pt)
    p = _mpz(curve.p)
    a = None if curve.a == curve.p - 3 else _mpz(curve.a)
    dbl, add = _jac_double, _jac_add_affine
    X, Y, Z = _mpz(0), _mpz(1), _mpz(0)
    for d in reversed(_wnaf(k)):
        X, Y, Z = dbl(p, a, X, Y, Z)
        if d > 0:
            x2, y2, _ = table[d >> 1]
            X, Y, Z = add(p, a, X, Y, Z, x2, y2)
        elif d < 0:
            x2, _, ny2 = table[(-d) >> 1]
            X, Y, Z = add(p, a, X, Y, Z, x2, ny2)
    return _to_affine(curve.p, X, Y, Z)


def point_mul(curve: CurveParams, k: int, pt: Point, *, _count: bool = True) -> Point:
    """Return k*pt. k is reduced modulo q; identity for k == 0 or pt == identity."""
    if _count:
        _tally("mul")
    if pt is None:
        return None
    k %= curve.q
    if k == 0:
        return None
    if _wants_fixed_base(curve, pt):
        return _mul_fixed_base(curve, k, pt)
    return _mul_wnaf(curve, k, pt)


def base_mul(curve: CurveParams, k: int) -> Point:
    return point_mul(curve, k, curve.g)


# -- encodings -----------------------------------------------------------------

def sqrt_mod(a: int, p: int) -> Optional[int]:
    """Square root modulo an odd prime, or None if ``a`` is a non-residue."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def encode_point(curve: CurveParams, pt: Point) -> bytes:
    """Compressed SEC1-style encoding; identity is the single byte 00."""
    if pt is None:
        return b"\x00"
    x, y = pt
    return bytes([2 | (y & 1)]) + x.to_bytes(curve.coord_size, "big")


def decode_point(curve: CurveParams, data: bytes) -> Point:
    if data == b"\x00":
        return None
    if len(data) != curve.point_size:
        raise MalformedPointError(f"point encoding must be {curve.point_size} bytes, got {len(data)}")
    prefix = data[0]
    if prefix not in (2, 3):
        raise MalformedPointError(f"bad point prefix 0x{prefix:02x}")
    x = int.from_bytes(data[1:], "big")
    p = curve.p
    if x >= p:
        raise MalformedPointError("x coordinate not reduced")
    y = sqrt_mod(x * x * x + curve.a * x + curve.b, p)
    if y is None:
        raise MalformedPointError("x coordinate not on curve")
    if y & 1 != prefix & 1:
        y = (p - y) % p
        if y & 1 != prefix & 1:
            # y == 0: only one parity exists
            raise MalformedPointError("no point with requested y parity")
    return x, y


def encode_scalar(curve: CurveParams, k: int) -> bytes:
    if not 0 <= k < curve.q:
        raise ValueError("scalar out of range")
    return k.to_bytes(curve.scalar_size, "big")


def decode_scalar(curve: CurveParams, data: bytes) -> int:
    if len(data) != curve.scalar_size:
        raise ValueError(f"scalar encoding must be {curve.scalar_size} bytes")
    k = int.from_bytes(data, "big")
    if k >= curve.q:
        raise ValueError("scalar out of range")
    return k


# -- hashes --------------------------------------------------------------------

def h1(curve: CurveParams, data: bytes) -> int:
    """Hash onto Z_q: SHA-256("H1" || data) mod q."""
    _tally("h1")
    return int.from_bytes(hashlib.sha256(H1_TAG + data).digest(), "big") % curve.q


def _h2(data: bytes, kind: str) -> bytes:
    _tally(kind)
    return hashlib.sha256(H2_TAG + data).digest()


def h2(data: bytes) -> bytes:
    """32-byte digest SHA-256("H2" || data)."""
    return _h2(data, "h2")


def mask32(curve: CurveParams, pt: Point) -> bytes:
    """32-byte pad derived from a group element; stands in for "XOR with a point"."""
    return _h2(MASK_TAG + encode_point(curve, pt), "h2_mask")


def kdf(data: bytes) -> bytes:
    return _h2(KDF_TAG + data, "h2_kdf")


def xor_bytes(*chunks: bytes) -> bytes:
    size = len(chunks[0])
    if any(len(c) != size for c in chunks):
        raise ValueError("xor operands must have equal length")
    acc = 0
    for c in chunks:
        acc ^= int.from_bytes(c, "big")
    return acc.to_bytes(size, "big")


def pad32(value: int) -> bytes:
    """Non-negative integer as 32 big-endian bytes (timestamps, scalars)."""
    return value.to_bytes(DIGEST_SIZE, "big")


# -- randomness ----------------------------------------------------------------

def random_scalar(curve: CurveParams, rng: Rng) -> int:
    """Uniform scalar in [1, q-1] by rejection sampling."""
    bits = curve.q.bit_length()
    while True:
        k = rng.getrandbits(bits)
        if 0 < k < curve.q:
            return k
