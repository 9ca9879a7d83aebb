import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from mecauth import crypto_core as cc  # noqa: E402
from mecauth import netsim  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def p256_world():
    return netsim.make_parties(cc.P256, seed=11, n_users=3)


@pytest.fixture(scope="session")
def toy_world():
    return netsim.make_parties(cc.TOY, seed=5, n_users=2)


@pytest.fixture
def parties(p256_world):
    return p256_world[0]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        status, title, msg = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title} {msg}")
