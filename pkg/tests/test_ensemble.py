import numpy as np
import pytest

from phaseid.bench import accuracy
from phaseid.ensemble import EnsembleConfig, bagging_assign, boosting_assign
from phaseid.identify import PreconditionError, greedy_power_match, mlp_assign, mlv_assign
from phaseid.metrology import MeterClass, NoiseContext, inject_noise
from phaseid.model import drop_voltage_columns, window


def triples(assignments):
    return [(a.customer_id, a.predicted, a.score) for a in assignments]


@pytest.fixture(scope="module")
def noisy(campaigns):
    c = campaigns["E"]
    return inject_noise(c, MeterClass.from_name("1.0"), NoiseContext(seed=1))


def test_bagging_full_coverage_is_voltage(noisy):
    out = bagging_assign(noisy)
    assert triples(out) == triples(mlv_assign(noisy))
    assert {a.route for a in out} == {"voltage"} and out[0].method_tag == "bagging"


def test_bagging_zero_coverage_is_power(noisy):
    c = drop_voltage_columns(noisy, 0.0, 0)
    out = bagging_assign(c)
    assert triples(out) == triples(mlp_assign(c))
    assert {a.route for a in out} == {"power"}


def test_bagging_half_coverage(noisy):
    c = drop_voltage_columns(noisy, 0.5, 3)
    out = {a.customer_id: a for a in bagging_assign(c)}
    v = {a.customer_id: a for a in mlv_assign(c)}
    assert len(v) == int(np.ceil(0.5 * c.N))
    for cid, a in v.items():
        assert (out[cid].predicted, out[cid].score, out[cid].route) == (a.predicted, a.score, "voltage")
    rest = [cid for cid in c.customer_ids if cid not in v]
    p = {a.customer_id: a for a in greedy_power_match(c, customer_subset=rest)[0]}
    for cid in rest:
        assert (out[cid].predicted, out[cid].score, out[cid].route) == (p[cid].predicted, p[cid].score, "power")


def test_boosting_threshold_extremes(noisy):
    assert triples(boosting_assign(noisy, EnsembleConfig(-2.0))) == triples(mlv_assign(noisy))
    assert triples(boosting_assign(noisy, EnsembleConfig(2.0))) == triples(mlp_assign(noisy))


def test_boosting_noiseless_presets(campaigns):
    for c in campaigns.values():
        assert accuracy(boosting_assign(c), c.truth) == 1.0
        assert accuracy(bagging_assign(c), c.truth) == 1.0


def test_boosting_stage_two_uses_residual(noisy):
    cfg = EnsembleConfig(0.9)
    out = boosting_assign(noisy, cfg)
    pre = {a.customer_id: a.predicted for a in out if a.route == "voltage"}
    rest = [a.customer_id for a in out if a.route == "power"]
    assert pre and rest
    ref = {a.customer_id: a for a in greedy_power_match(noisy, None, rest, pre)[0]}
    for a in out:
        if a.route == "voltage":
            assert a.score > 0.9 * noisy.T
        else:
            assert (a.predicted, a.score) == (ref[a.customer_id].predicted, ref[a.customer_id].score)


def test_ensembles_agree_on_confident_customers(noisy):
    cfg = EnsembleConfig(0.5)
    bag = {a.customer_id: a for a in bagging_assign(noisy, cfg)}
    for a in boosting_assign(noisy, cfg):
        if a.route == "voltage":
            assert bag[a.customer_id].predicted == a.predicted


def test_customer_without_data_unassigned(campaigns):
    c = campaigns["C"]
    V, H = c.voltage.copy(), c.power.copy()
    V[:, 4] = np.nan
    H[:, 4] = np.nan
    c = c.replace(voltage=V, power=H)
    for fn in (bagging_assign, boosting_assign):
        a = fn(c)[4]
        assert a.predicted is None and a.flag == "no-data"


def test_separate_power_campaign(campaigns):
    c = campaigns["B"]
    vc = drop_voltage_columns(window(c, 0, 3), 0.5, 1)
    for fn in (bagging_assign, boosting_assign):
        out = fn(vc, EnsembleConfig(), power_campaign=c)
        assert accuracy(out, c.truth) == 1.0
    with pytest.raises(PreconditionError):
        bagging_assign(vc, EnsembleConfig(), power_campaign=campaigns["C"])


def test_threshold_uses_voltage_length(campaigns):
    assert EnsembleConfig(0.2).threshold(96) == pytest.approx(19.2)
    with pytest.raises(ValueError):
        EnsembleConfig(float("nan"))
