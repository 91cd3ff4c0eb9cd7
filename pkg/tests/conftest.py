import numpy as np
import pytest

from phaseid.model import MeasurementCampaign, Phase, make_timestamps
from phaseid.simfeeder import build_feeder, generate_campaign


def event_campaign(phases, T=48, seed=0, loss=0.0, integer=True):
    """Small campaign of step-event loads with P the exact per-phase sum of H."""
    rng = np.random.default_rng(seed)
    n = len(phases)
    H = np.zeros((T, n))
    for i in range(n):
        level = 0.0
        for t in range(T):
            if rng.random() < 0.2:
                level = float(rng.integers(0, 30) * 100)
            H[t, i] = level + rng.integers(50, 150)
    if not integer:
        H = H + rng.random(H.shape)
    P = np.zeros((T, 3))
    for i, p in enumerate(phases):
        P[:, int(p)] += H[:, i]
    P *= 1.0 + loss
    ids = [f"c{i}" for i in range(n)]
    return MeasurementCampaign(
        timestamps=make_timestamps(T, 15),
        customer_ids=ids,
        power=H,
        transformer_power=P,
        truth={cid: Phase(int(p)) for cid, p in zip(ids, phases)},
    )


@pytest.fixture(scope="session")
def campaigns():
    """Noiseless 20-day campaigns for every preset, keyed by preset name."""
    return {name: generate_campaign(build_feeder(name, 0), 0) for name in "ABCDEF"}


@pytest.fixture(scope="session")
def campaign_a(campaigns):
    return campaigns["A"]


@pytest.fixture(scope="session")
def short_campaign():
    """Preset C over 4 days; cheap enough for many-run checks."""
    return generate_campaign(build_feeder("C", 3, days=4), 3)


# acceptance verdicts, filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
