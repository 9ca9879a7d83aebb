import pytest

from mecauth import crypto_core as cc
from mecauth import netsim as ns
from mecauth import registry as rg
from mecauth.handshake import ReplayCache


def test_honest_run_is_deterministic(parties):
    a = ns.run_honest(parties, 4)
    b = ns.run_honest(parties, 4)
    assert a.frames == b.frames and a.user_key_fp == b.user_key_fp
    assert a.honest_done and a.keys_equal and not a.dishonest_success
    assert ns.run_honest(parties, 5).frames != a.frames


def test_script_json_round_trip():
    script = [ns.Deliver(), ns.Drop(), ns.Replay(2), ns.Tamper(3, 0x10), ns.AdvanceClock(9),
              ns.Inject(b"\x01\x02", ns.USER_END, 0), ns.Inject(b"\xff")]
    assert ns.load_script(ns.dump_script(script)) == script
    with pytest.raises(ValueError):
        ns.action_from_json({"action": "teleport"})


def test_dropped_m2_leaves_user_waiting(parties):
    out = ns.run_script(parties, [ns.Deliver(), ns.Drop()], 0, drain=False)
    assert out.user_state == "await-m2"
    assert out.server_states[ns.HONEST_CONN] == "await-m3"
    assert out.keys_equal is None and not out.dishonest_success


def test_replay_scenarios(parties):
    for name, out, expected in ns.replay_scenarios(parties, 5, seed=1):
        assert expected in out.error_names, name
        assert not out.dishonest_success


def test_garbage_injection_fails_cleanly(parties):
    out = ns.run_script(parties, [ns.Inject(b"\x01\x00\x05hello")], 0, drain=False)
    assert out.server_states[1] == "failed"
    assert "length-mismatch" in out.error_names or "truncated-frame" in out.error_names


def test_every_toy_tamper_is_rejected(toy_world):
    parties = toy_world[0]
    seen = 0
    for k, pos, mask, out in ns.tamper_positions(parties, seed=2):
        assert ns.tamper_rejected(k, out), (k, pos, mask, out)
        seen += 1
    assert seen == 2 * (41 + 39 + 35)


@pytest.mark.parametrize("target", [rg.SERVER, rg.USER])
@pytest.mark.parametrize("strategy", ns.IMPERSONATION_STRATEGIES)
def test_impersonation_fails(parties, target, strategy):
    cache = ReplayCache()
    recorded = [ns.Simulation(parties, 50 + i, start_time=ns.START_TIME + 2 * i, replay_cache=cache).run().frames[:3]
                for i in range(2)]
    view = ns.AdversaryView(parties.params, parties.directory, recorded)
    for seed in range(3):
        out = ns.impersonation_attempt(view, parties, target, seed, strategy,
                                       start_time=ns.START_TIME + 1 + 2 * seed, replay_cache=cache)
        assert not out.dishonest_success
    assert set(view.access_log) <= ns.AdversaryView.PUBLIC
    assert not view.contains_private_material()


def test_adversary_view_blocks_private_names(parties):
    view = ns.AdversaryView(parties.params, parties.directory)
    with pytest.raises(AttributeError):
        view.server_creds
    assert "server_creds" in view.access_log


def test_anonymity_scan_clean_and_positive_control(p256_world):
    parties, _, users = p256_world
    transcripts = {}
    for i, creds in enumerate(users):
        p = ns.Parties(parties.params, creds, parties.server_creds, parties.directory)
        transcripts[creds.identity] = [ns.run_honest(p, 10 * i + j, start_time=ns.START_TIME + 10 * j).frames[:3]
                                       for j in range(2)]
    scan = ns.anonymity_scan(transcripts, parties.directory)
    assert scan["ok"] and scan["sessions"] == 2 * len(users)

    # a frame carrying a raw SID must be caught
    leaky = bytearray(transcripts[users[0].identity][0][0])
    leaky[3:35] = cc.encode_scalar(cc.P256, users[0].sid)
    transcripts[users[0].identity][0] = [bytes(leaky)] + transcripts[users[0].identity][0][1:]
    assert ns.anonymity_scan(transcripts, parties.directory)["sid_hits"]

    # and so must a session replayed verbatim
    transcripts[users[1].identity][1] = transcripts[users[1].identity][0]
    assert ns.anonymity_scan(transcripts, parties.directory)["repeated_fields"]


@pytest.mark.parametrize("leak, computable, not_computable", [
    ([], [], ["R_1ms", "SID_u", "R_ums", "R_msu", "SK"]),
    (["d_u"], [], ["SID_u", "SK"]),
    (["d_ms"], ["R_1ms", "SID_u", "R_ums"], ["R_msu", "SK"]),
    (["d_u", "d_ms"], ["R_1ms", "SID_u", "R_ums", "R_msu", "SK"], []),
    (["r_1"], ["R_1ms", "SID_u"], ["SK"]),
])
def test_key_compromise(parties, leak, computable, not_computable):
    report = ns.compromise_experiment(parties, leak, seed=3)
    for name in computable:
        assert report["computable"][name] and report["verified"][name], name
    for name in not_computable:
        assert not report["computable"][name], name
    if set(leak) == {"d_u", "d_ms"}:
        assert any("forward-secrecy" in f for f in report["findings"])


def test_security_suite_on_toy_curve():
    results = ns.security_suite(cc.TOY, seed=1, honest_runs=3, impersonation_trials=6, anonymity_users=3)
    assert [r.claim for r in results] == list(range(1, 10))
    assert not any(r.violated for r in results)
