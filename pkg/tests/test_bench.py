import pytest

from phaseid.bench import BenchReport, Scenario, accuracy, merge_reports, run_scenario, sweep
from phaseid.metrology import TABLE_CLASS_ORDER
from phaseid.model import Phase, PhaseAssignment

FAST = dict(feeder="C", days=3, runs=3, kmeans_restarts=2)


def pa(cid, ph):
    return PhaseAssignment(cid, ph, 0.0, "mlp")


def test_accuracy_examples():
    truth = {"x": Phase.a, "y": Phase.b, "z": Phase.c}
    assert accuracy([pa("x", Phase.a), pa("y", Phase.b), pa("z", Phase.a)], truth) == pytest.approx(2 / 3)
    assert accuracy([pa(k, v) for k, v in truth.items()], truth) == 1.0
    assert accuracy([pa(k, None) for k in truth], truth) == 0.0
    assert accuracy([], truth) == 0.0
    with pytest.raises(ValueError):
        accuracy([pa("x", Phase.a)], {})


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(methods=("mlv",))
    with pytest.raises(ValueError):
        Scenario(meter_class="3.0")
    with pytest.raises(ValueError):
        Scenario(voltage_fraction=1.5)
    with pytest.raises(ValueError):
        Scenario(voltage_days=30)
    with pytest.raises(ValueError):
        Scenario.from_dict({"feeder": "A", "colour": 1})
    s = Scenario(**FAST)
    assert Scenario.from_dict(s.to_dict()) == s


def test_exact_class_is_perfect():
    r = run_scenario(Scenario(meter_class="exact", methods=("mlv-transfo", "mlp", "bagging", "boosting"), **FAST))
    for e in r.entries:
        assert e.accuracies == [1.0] * 3 and e.std == 0.0
        assert e.seeds == [[0, 0], [0, 1], [0, 2]]


def test_fraction_endpoints():
    s = Scenario(meter_class="1.0", methods=("mlv-transfo", "mlp", "bagging"), **FAST)
    full, none = sweep(s, "voltage_fraction", [1.0, 0.0])
    assert full.entry("bagging").accuracies == full.entry("mlv-transfo").accuracies
    assert none.entry("bagging").accuracies == none.entry("mlp").accuracies
    assert full.entry("mlp").accuracies == none.entry("mlp").accuracies


def test_runs_deterministic_across_workers():
    s = Scenario(meter_class="0.5", **FAST)
    a = run_scenario(s)
    b = run_scenario(Scenario(**{**s.to_dict(), "workers": 2}))
    assert [(e.method, e.accuracies, e.mapping) for e in a.entries] == \
           [(e.method, e.accuracies, e.mapping) for e in b.entries]


def test_not_applicable_method():
    base = {"feeder": "C", "days": 2, "runs": 2}
    from phaseid.simfeeder import build_feeder
    feeder = build_feeder("C", 0, days=2, include_reference_customer=False).to_dict()
    r = run_scenario(Scenario(**{**base, "feeder": feeder, "methods": ("mlv-customer", "mlv-transfo")}))
    e = r.entry("mlv-customer")
    assert not e.applicable and e.accuracies == []
    assert r.entry("mlv-transfo").applicable


def test_sweep_cardinality_and_errors():
    s = Scenario(methods=("mlv-transfo",), **FAST)
    reps = sweep(s, "class", list(TABLE_CLASS_ORDER))
    assert [r.entries[0].meter_class for r in reps] == list(TABLE_CLASS_ORDER)
    assert len(merge_reports(reps).entries) == 6
    with pytest.raises(ValueError):
        sweep(s, "voltage_fraction", [])
    with pytest.raises(ValueError):
        sweep(s, "runs", [1])
    assert merge_reports([]).entries == []


def test_voltage_days_sweep():
    s = Scenario(feeder="C", days=4, runs=2, power_days=4, methods=("mlv-transfo", "mlp", "boosting"))
    reps = sweep(s, "voltage_days", [1, 2, 4])
    assert [r.entries[0].value for r in reps] == [1, 2, 4]
    mlp = [r.entry("mlp").accuracies for r in reps]
    assert mlp[0] == mlp[1] == mlp[2]


def test_report_helpers():
    r = run_scenario(Scenario(meter_class="exact", methods=("mlp",), **FAST))
    assert isinstance(r, BenchReport) and r.means() == {"mlp": 1.0}
    with pytest.raises(KeyError):
        r.entry("kmeans")
