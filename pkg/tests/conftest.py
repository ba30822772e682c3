import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flowrep.evidence import RatingEvent, TransactionLog
from flowrep.simlab import GeneratorConfig, gen_matrix

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ALICE, BOB, CHARLIE, DAVID = 1, 2, 3, 4


def _events(rater, ratee, pos=0, neu=0, neg=0):
    return ([RatingEvent(rater, ratee, 1)] * pos + [RatingEvent(rater, ratee, 0)] * neu
            + [RatingEvent(rater, ratee, -1)] * neg)


def scenario_log(scenario: str) -> TransactionLog:
    """Alice's ratings of Bob, Charlie and David in the two motivating scenarios."""
    counts = {
        "a": {BOB: (1, 999, 0), CHARLIE: (9, 991, 0), DAVID: (0, 100, 900)},
        "b": {BOB: (100, 900, 0), CHARLIE: (900, 100, 0), DAVID: (200, 600, 200)},
    }[scenario]
    events = []
    for ratee, (p, z, m) in counts.items():
        events += _events(ALICE, ratee, p, z, m)
    return TransactionLog.from_events(events, user_count=4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def market():
    """A default-parameter generated matrix (n = 40) with a random start vector."""
    g = np.random.default_rng(7)
    A = np.asarray(gen_matrix(GeneratorConfig(n=40), g))
    return A, g.random(40)


# -- acceptance reporting ----------------------------------------------------

@pytest.fixture
def acceptance(request):
    lines = request.config.stash.setdefault(_ACCEPT_KEY, [])

    def record(label: str, ok: bool, detail: str = "") -> bool:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        print(lines[-1])
        return ok

    return record


_ACCEPT_KEY = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
