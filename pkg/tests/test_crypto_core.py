import random

import pytest
from hypothesis import given, strategies as st

from mecauth import crypto_core as cc
from mecauth.costmodel import OpCounter
from mecauth.errors import MalformedPointError

from oracles import (
    P256_2G, P256_G, P256_ORDER, TOY_G, TOY_ORDER, ref_h1, ref_h2, ref_kdf, ref_mask,
    toy_add, toy_encode, toy_mul_repeated, toy_points,
)

TOY = cc.TOY
P256 = cc.P256
TOY_POINTS = toy_points()


def test_toy_group_has_prime_order():
    assert len(TOY_POINTS) == TOY_ORDER
    assert cc.base_mul(TOY, 2) == (6, 3)
    assert cc.base_mul(TOY, TOY_ORDER) is None


def test_toy_addition_table_matches_brute_force():
    for a in TOY_POINTS:
        for b in TOY_POINTS:
            assert cc.point_add(TOY, a, b) == toy_add(a, b), (a, b)


def test_toy_scalar_mul_matches_repeated_addition():
    for pt in TOY_POINTS:
        for k in range(TOY_ORDER):
            assert cc.point_mul(TOY, k, pt) == toy_mul_repeated(k, pt), (k, pt)


def test_curve_parameters_validate():
    for curve in (P256, TOY):
        cc.validate_curve(curve)
        assert cc.is_on_curve(curve, curve.g)
    assert P256.q == P256_ORDER and P256.g == P256_G


def test_p256_known_multiple():
    assert cc.base_mul(P256, 2) == P256_2G
    assert cc.point_add(P256, P256_G, P256_G) == P256_2G
    assert cc.base_mul(P256, P256_ORDER) is None
    assert cc.base_mul(P256, P256_ORDER - 1) == (P256_G[0], P256.p - P256_G[1])


@given(st.integers(min_value=0, max_value=P256_ORDER * 2), st.integers(min_value=0, max_value=P256_ORDER * 2))
def test_p256_mul_distributes(a, b):
    lhs = cc.base_mul(P256, a + b)
    rhs = cc.point_add(P256, cc.base_mul(P256, a), cc.base_mul(P256, b))
    assert lhs == rhs


@given(st.integers(min_value=1, max_value=P256_ORDER - 1), st.integers(min_value=0, max_value=P256_ORDER - 1))
def test_variable_base_agrees_with_fixed_base(d, k):
    pub = cc.base_mul(P256, d)
    assert cc.point_mul(P256, k, pub) == cc.base_mul(P256, k * d % P256_ORDER)


def test_fixed_base_promotion_is_transparent():
    pub = cc.base_mul(P256, 123456789)
    results = [cc.point_mul(P256, 987654321, pub) for _ in range(5)]
    assert len(set(results)) == 1
    assert results[0] == cc.base_mul(P256, 123456789 * 987654321 % P256_ORDER)


def test_negative_and_identity_inputs():
    assert cc.point_mul(P256, 5, None) is None
    assert cc.point_mul(P256, -1, P256_G) == cc.point_neg(P256, P256_G)
    assert cc.point_add(P256, P256_G, cc.point_neg(P256, P256_G)) is None


@given(st.integers(min_value=1, max_value=P256_ORDER - 1))
def test_point_encoding_round_trip(k):
    pt = cc.base_mul(P256, k)
    enc = cc.encode_point(P256, pt)
    assert len(enc) == 33 and enc[0] in (2, 3)
    assert cc.decode_point(P256, enc) == pt


def test_toy_encoding_matches_oracle():
    for pt in TOY_POINTS:
        assert cc.encode_point(TOY, pt) == toy_encode(pt)
        assert cc.decode_point(TOY, toy_encode(pt)) == pt


@pytest.mark.parametrize("data", [b"", b"\x04" + bytes(64), b"\x02" + bytes(31), b"\x05" + bytes(32),
                                  b"\x02" + b"\xff" * 32])
def test_decode_point_rejects_garbage(data):
    with pytest.raises(MalformedPointError):
        cc.decode_point(P256, data)


def test_decode_point_rejects_x_off_curve():
    # x = 0 is not on the toy curve since 2 is a quadratic non-residue mod 17
    with pytest.raises(MalformedPointError):
        cc.decode_point(TOY, b"\x02\x01")


def test_hash_vectors():
    assert cc.h1(P256, b"abc") == 0x8D89DEF9BFFB893465C5DC6C41AA7A7FC00D00054C6DAB3AC7DA0654FB254CF3
    assert cc.h1(P256, b"abc") == ref_h1(b"abc", P256_ORDER)
    assert cc.h1(TOY, b"abc") == 9
    assert cc.h2(b"").hex() == "ae1a64d34d1c58553d436923cc6eb2386a63892c0bdd3f1a924eb7f7a30ae975"
    assert cc.h2(b"xyz") == ref_h2(b"xyz")
    assert cc.mask32(TOY, TOY_G).hex() == "9d798269505cf91e1704fef7f051c12e4b614cc1a6ea0edb6b43eeea778749aa"
    assert cc.mask32(P256, P256_G) == ref_mask(cc.encode_point(P256, P256_G))
    assert cc.kdf(b"k") == ref_kdf(b"k")


def test_hash_domains_are_separated():
    assert cc.h2(b"x") != cc.kdf(b"x")
    assert cc.h2(b"MASK" + b"x") != cc.h2(b"x")


def test_op_counter_tags():
    counter = OpCounter()
    with counter.active():
        cc.h2(b"a")
        cc.kdf(b"b")
        cc.mask32(TOY, TOY_G)
        cc.base_mul(TOY, 3)
        cc.point_mul(TOY, 3, TOY_G)
    assert counter.counts["h2"] == 1
    assert counter.counts["h2_kdf"] == 1
    assert counter.counts["h2_mask"] == 1
    assert counter.muls == 2
    cc.h2(b"outside")
    assert counter.counts["h2"] == 1


def test_xor_and_pad():
    assert cc.pad32(1) == bytes(31) + b"\x01"
    assert cc.xor_bytes(b"\x0f", b"\xf0", b"\x01") == b"\xfe"
    with pytest.raises(ValueError):
        cc.xor_bytes(b"\x00", b"\x00\x00")


def test_random_scalar_range():
    rng = random.Random(3)
    for _ in range(2000):
        assert 1 <= cc.random_scalar(TOY, rng) < TOY_ORDER


def test_sqrt_mod():
    for p in (17, 23, P256.p):
        for a in range(1, 40):
            r = cc.sqrt_mod(a, p)
            assert r is None or r * r % p == a % p


def test_scalar_encoding():
    assert cc.decode_scalar(P256, cc.encode_scalar(P256, 42)) == 42
    assert len(cc.encode_scalar(P256, 1)) == 32
    assert len(cc.encode_scalar(TOY, 18)) == 1


def test_plain_int_fallback_agrees():
    import os
    import subprocess
    import sys
    code = (
        "from mecauth import crypto_core as cc; assert not cc.ACCELERATED; "
        "print(cc.base_mul(cc.P256, 0xC0FFEE), cc.point_mul(cc.P256, 77, cc.base_mul(cc.P256, 5)))"
    )
    env = dict(os.environ, MECAUTH_PURE_INT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    assert out.strip() == f"{cc.base_mul(P256, 0xC0FFEE)} {cc.base_mul(P256, 385)}"
