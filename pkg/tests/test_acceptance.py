"""Acceptance suite: one test per criterion, at the stated tolerances.

Run ``pytest tests/test_acceptance.py -v``; a per-criterion PASS/FAIL line is
printed in the terminal summary.  The heavy Monte Carlo checks (7, 8) take a
few minutes on one core.
"""

import itertools
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE, event_campaign
from phaseid.bench import Scenario, accuracy, sweep
from phaseid.cli import main
from phaseid.ensemble import EnsembleConfig, bagging_assign, boosting_assign
from phaseid.identify import greedy_power_match, kmeans, mlp_assign, mlv_assign, pearson_scores
from phaseid.metrology import TABLE_CLASS_ORDER, MeterClass, NoiseContext, inject_noise
from phaseid.model import MeasurementCampaign, Phase, drop_voltage_columns, make_timestamps
from phaseid.simfeeder import build_feeder, generate_campaign

from test_identify import textbook_score

PRESET_NAMES = "ABCDEF"
CONFIG = Path(__file__).resolve().parents[1] / "configs" / "example_bench.json"


def verdict(k, ok, detail):
    k = str(k)
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def triples(assignments):
    return [(a.customer_id, a.predicted, a.score) for a in assignments]


def test_criterion_1_noise_calibration():
    t0 = time.perf_counter()
    T = N = 1000
    ctx = NoiseContext(seed=11)
    worst = 0.0
    for name in ("0.1", "0.2", "0.5", "1.0"):
        c = MeasurementCampaign(timestamps=make_timestamps(T), customer_ids=[f"m{i}" for i in range(N)],
                                voltage=np.full((T, N), 230.0))
        meter = MeterClass.from_name(name)
        err = inject_noise(c, meter, ctx).voltage - 230.0
        worst = max(worst, abs(err.std() / (meter.delta_class * 230.0 / 3) - 1))
    meter = MeterClass.from_name("0.5s")
    for frac, expected in ((0.1, 0.005 * 0.2 * 9200 / 3), (0.5, 0.005 * 4600 / 3)):
        reading = frac * 9200
        c = MeasurementCampaign(timestamps=make_timestamps(T), customer_ids=[f"m{i}" for i in range(N)],
                                power=np.full((T, N), reading))
        err = inject_noise(c, meter, ctx).power - reading
        worst = max(worst, abs(err.std() / expected - 1))
    dt = time.perf_counter() - t0
    verdict(1, worst < 0.01 and dt < 10, f"max relative std error {worst:.4%}, {dt:.1f} s")


def test_criterion_2_noiseless_perfection():
    t0 = time.perf_counter()
    rows = []
    ok = True
    for name in PRESET_NAMES:
        c = generate_campaign(build_feeder(name, 0), 0)
        acc = {
            "mlv": accuracy(mlv_assign(c), c.truth),
            "boosting": accuracy(boosting_assign(c), c.truth),
            "bagging": accuracy(bagging_assign(c), c.truth),
            "mlp": accuracy(mlp_assign(c), c.truth),
        }
        ok &= acc["mlv"] == acc["boosting"] == acc["bagging"] == 1.0 and acc["mlp"] >= 0.95
        rows.append(f"{name}:mlp={acc['mlp']:.3f}")
    dt = time.perf_counter() - t0
    verdict(2, ok and dt < 60, f"{' '.join(rows)}, {dt:.1f} s")


@pytest.fixture(scope="module")
def noisy_presets():
    ctx = NoiseContext(seed=5, run_index=2)
    out = {}
    for name in PRESET_NAMES:
        c = generate_campaign(build_feeder(name, 0), 0)
        out[name] = inject_noise(c, MeterClass.from_name("1.0"), ctx)
    return out


def test_criterion_3_degeneration_identities(noisy_presets):
    ok = True
    for c in noisy_presets.values():
        mlv, mlp = triples(mlv_assign(c)), triples(mlp_assign(c))
        ok &= triples(boosting_assign(c, EnsembleConfig(-2.0))) == mlv
        ok &= triples(boosting_assign(c, EnsembleConfig(2.0))) == mlp
        ok &= triples(bagging_assign(drop_voltage_columns(c, 1.0, 0))) == mlv
    verdict(3, ok, "exact list equality on six noisy presets")


def test_criterion_4_kmeans_descent():
    failures = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(int(rng.integers(3, 80)), int(rng.integers(1, 50)))) * rng.uniform(0.1, 10)
        labels, centers, J, it, hist = kmeans(X, 3, rng=seed)
        descent = all(b <= a for a, b in zip(hist, hist[1:]))
        means = np.array([X[labels == j].mean(axis=0) if (labels == j).any() else centers[j] for j in range(3)])
        D = ((X[:, None, :] - means[None]) ** 2).sum(axis=2)
        fixed = np.array_equal(D.argmin(axis=1), labels)
        failures += not (descent and fixed)
    verdict(4, failures == 0, f"{failures}/100 instances violate descent or fixed point")


def test_criterion_5_correlation_oracle():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(1000):
        T = int(rng.integers(3, 200))
        x = rng.normal(230, rng.uniform(0.01, 5), T)
        y = rng.normal(230, rng.uniform(0.01, 5), T)
        got = pearson_scores(x, np.column_stack([y, y, y])).scores[0]
        want = textbook_score(x, y)
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    verdict(5, worst <= 1e-9, f"max relative deviation {worst:.2e}")


def test_criterion_6_mlp_brute_force():
    rng = np.random.default_rng(6)
    ok, fractions = True, []
    for k in range(30):
        n = int(rng.integers(2, 7))
        T = int(rng.integers(12, 51))
        phases = [Phase(int(x)) for x in rng.integers(0, 3, n)]
        c = event_campaign(phases, T=T, seed=k)
        out, residual = greedy_power_match(c)
        ok &= bool((residual == 0).all())
        noisy = inject_noise(c, MeterClass.from_name("1.0"), NoiseContext(seed=k))
        acc = accuracy(mlp_assign(noisy), c.truth)
        ids = c.customer_ids
        all_acc = [sum(int(p) == int(c.truth[i]) for p, i in zip(combo, ids)) / n
                   for combo in itertools.product(range(3), repeat=n)]
        frac = np.mean([acc >= a for a in all_acc])
        fractions.append(frac)
        ok &= frac >= 0.5
    verdict(6, ok, f"worst percentile {min(fractions):.3f}, residues exactly zero")


@pytest.fixture(scope="module")
def class_sweep():
    t0 = time.perf_counter()
    pooled = {}
    for name in PRESET_NAMES:
        for r in sweep(Scenario(feeder=name, runs=50), "meter_class", TABLE_CLASS_ORDER):
            for e in r.entries:
                pooled.setdefault((e.meter_class, e.method), []).append(e.mean)
    means = {k: float(np.mean(v)) for k, v in pooled.items()}
    return means, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_7_qualitative_ordering(class_sweep):
    m, dt = class_sweep
    transfo, customer, km = m[("1.0", "mlv-transfo")], m[("1.0", "mlv-customer")], m[("1.0", "kmeans")]
    order_ok = transfo >= customer >= km
    class_ok = m[("0.1", "mlv-transfo")] >= transfo
    mlp = [m[(cls, "mlp")] for cls in TABLE_CLASS_ORDER]
    mono_ok = all(b <= a + 0.01 for a, b in zip(mlp, mlp[1:]))
    detail = (f"class 1.0: transfo {transfo:.4f} customer {customer:.4f} kmeans {km:.4f}; "
              f"transfo 0.1 {m[('0.1', 'mlv-transfo')]:.4f}; mlp {[round(x, 4) for x in mlp]}; {dt:.0f} s")
    verdict(7, order_ok and class_ok and mono_ok and dt < 900, detail)


FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


@pytest.mark.slow
@pytest.mark.parametrize("meter_class", ["0.5s", "1.0"])
def test_criterion_8_voltage_fraction(meter_class):
    curves = {m: np.zeros(len(FRACTIONS)) for m in ("bagging", "mlv-transfo", "mlp")}
    endpoints_ok = True
    for name in PRESET_NAMES:
        s = Scenario(feeder=name, meter_class=meter_class, runs=50, methods=("mlv-transfo", "mlp", "bagging"))
        reps = sweep(s, "voltage_fraction", FRACTIONS)
        endpoints_ok &= reps[0].entry("bagging").accuracies == reps[0].entry("mlp").accuracies
        endpoints_ok &= reps[-1].entry("bagging").accuracies == reps[-1].entry("mlv-transfo").accuracies
        for m in curves:
            curves[m] += np.array([r.entry(m).mean for r in reps]) / len(PRESET_NAMES)
    bag = curves["bagging"]
    mono_ok = all(b >= a - 0.01 for a, b in zip(bag, bag[1:]))
    flat_ok = np.ptp(curves["mlp"]) == 0.0
    detail = (f"class {meter_class}: bagging {np.round(bag, 4).tolist()}, "
              f"mlp {np.round(curves['mlp'], 4).tolist()}")
    verdict(f"8 @{meter_class}", mono_ok and endpoints_ok and flat_ok, detail)


def test_criterion_9_determinism(tmp_path):
    outs = []
    for k, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"run{k}"
        assert main(["bench", "--config", str(CONFIG), "--out", str(out), "--workers", str(workers)]) == 0
        outs.append(out)
    files = ("report.json", "runs.csv", "runs_summary.csv")
    same = all((o / f).read_bytes() == (outs[0] / f).read_bytes() for o in outs[1:] for f in files)
    verdict(9, same, "bench reports byte-identical across repeats and worker counts 1 and 2")
