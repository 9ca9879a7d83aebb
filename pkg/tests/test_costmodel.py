import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mecauth import costmodel as cm
from mecauth import crypto_core as cc
from mecauth.errors import InputsMissingError, MissingSizeError, OverdeterminedError, UnderdeterminedError
from mecauth.handshake import run_in_process

F = Fraction


def test_proposed_rows_exact():
    assert cm.eval_time(cm.SCHEMES["proposed"].user, cm.TIMINGS["client"]) == F("80.032")
    assert cm.eval_time(cm.SCHEMES["proposed"].server, cm.TIMINGS["server"]) == F("5.946")


def test_hand_computed_rows():
    # 5.275 + 5*1.97 + 3*0.012 + 5*0.009
    assert cm.eval_time(cm.SCHEMES["jia"].server, cm.TIMINGS["server"]) == F("15.206")
    # 4*19.919 + 3*0.118 + 5*0.089 + 3.328
    assert cm.eval_time(cm.SCHEMES["jia"].user, cm.TIMINGS["client"]) == F("83.803")
    # 2*5.275 + 2*1.97 + 2*0.012 + 5*0.009 + 2*0.339
    assert cm.eval_time(cm.SCHEMES["tsai"].server, cm.TIMINGS["server"]) == F("15.237")


def test_missing_inversion_timing():
    with pytest.raises(InputsMissingError):
        cm.eval_time(cm.SCHEMES["tsai"].user, cm.TIMINGS["client"])
    assert cm.eval_time_partial(cm.SCHEMES["irshad"].user, cm.TIMINGS["client"]) == F("155.681")


def test_table_statuses():
    rows = {(r.scheme, r.side): r for r in cm.computation_table()}
    assert rows[("Tsai et al.", "user")].status.startswith("unreproducible")
    assert "t_inv" in rows[("Tsai et al.", "user")].note
    assert "inconsistent" in rows[("Tsai et al.", "user")].note
    assert rows[("Irshad et al.", "user")].status == "unreproducible: missing t_inv"
    assert sum(r.reproduced for r in rows.values()) == 6


@given(st.lists(st.integers(0, 9), min_size=6, max_size=6),
       st.lists(st.fractions(min_value=F(1, 1000), max_value=100), min_size=6, max_size=6))
def test_eval_time_is_linear(coeffs, times):
    formula = cm.CostFormula(*coeffs)
    timings = cm.OpTimings(*times)
    doubled = cm.CostFormula(*[2 * c for c in coeffs])
    assert cm.eval_time(doubled, timings) == 2 * cm.eval_time(formula, timings)
    assert cm.eval_time(formula, timings) == sum(c * t for c, t in zip(coeffs, times))


def test_message_size_rows():
    rows, solved = cm.communication_table()
    assert solved == {"GT": 1024}
    assert {r["scheme"]: r["computed_bits"] for r in rows} == {
        "Tsai et al.": 4608, "Irshad et al.": 5632, "Jia et al.": 4736, "Proposed": 2624,
    }


def test_size_solver_errors():
    f = cm.SizeFormula(G=1, H=1)
    with pytest.raises(OverdeterminedError):
        cm.solve_missing_size(f, 100, {"G": 50, "H": 50})
    with pytest.raises(UnderdeterminedError):
        cm.solve_missing_size(f, 100, {})
    with pytest.raises(MissingSizeError):
        cm.eval_size(f, {"G": 1})
    assert cm.solve_missing_size(cm.SizeFormula(G=2, H=1), 300, {"H": 100}) == ("G", 100)


def test_implementation_wire_size_matches_frames():
    sizes = cm.implementation_sizes(cc.P256)
    assert cm.eval_size(cm.PROPOSED_WIRE, sizes) == 8 * (69 + 36 + 32) == 1096


def test_live_counts():
    from mecauth import netsim
    p, _, _ = netsim.make_parties(cc.P256, seed=2)
    user, server, _ = run_in_process(p.params, p.user_creds, p.server_creds, p.directory, random.Random(0), 1000)
    checks = cm.verify_live_counts(user.counter, server.counter)
    assert checks["user"].ok and checks["server"].ok
    assert checks["user"].extras == {"h2_mask": 1, "h2_kdf": 1}


def test_report_is_json_serialisable():
    report = cm.cost_report()
    text = json.dumps(report)
    assert "80.032" in text and "2624" in text
    assert "5.946" in cm.format_cost_report(report)
