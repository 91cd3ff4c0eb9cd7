"""Monte Carlo benchmark harness.

A scenario fixes one clean synthetic campaign (loads drawn once from the
base seed) and re-draws only the measurement noise on every run.  Runs are
pure functions of ``(scenario, run index)`` and are reduced in run order, so
reports do not depend on how runs are scheduled.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .ensemble import EnsembleConfig, bagging_assign, boosting_assign
from .identify import PreconditionError, kmeans_assign, mlp_assign, mlv_assign
from .metrology import MeterClass, NoiseContext, inject_noise
from .model import METHOD_TAGS, MeasurementCampaign, PhaseAssignment, drop_voltage_columns, window
from .simfeeder import PRESETS, FeederSpec, build_feeder, generate_campaign

SWEEP_PARAMETERS = ("voltage_fraction", "voltage_days", "meter_class")


def accuracy(pred: Sequence[PhaseAssignment], truth: Mapping) -> float:
    """Fraction of labelled customers assigned to their true phase.

    Customers missing from ``pred`` or left unassigned count as wrong.
    """
    if not truth:
        raise ValueError("accuracy needs ground-truth labels")
    by_id = {a.customer_id: a.predicted for a in pred}
    hits = sum(1 for cid, ph in truth.items() if by_id.get(cid) is not None and by_id[cid] == ph)
    return hits / len(truth)


@dataclass(frozen=True)
class Scenario:
    """One benchmark configuration; mirrors the JSON config one-to-one."""

    feeder: Union[str, dict] = "A"
    meter_class: str = "0.5s"
    methods: tuple = ("mlv-transfo", "mlv-customer", "kmeans", "mlp", "bagging", "boosting")
    voltage_fraction: float = 1.0
    voltage_days: Optional[float] = None
    power_days: Optional[float] = None
    days: float = 20.0
    resolution: float = 15.0
    runs: int = 50
    seed: int = 0
    threshold_coefficient: float = 0.2
    salient_count: Optional[int] = None
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 300
    kmeans_eps: float = 1e-6
    transformer_class: Optional[str] = None
    transformer_nominal_power: Optional[float] = None
    redraw_loads: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            if m not in METHOD_TAGS:
                raise ValueError(f"unknown method {m!r}; valid: {', '.join(METHOD_TAGS)}")
        MeterClass.from_name(self.meter_class)
        if self.transformer_class is not None:
            MeterClass.from_name(self.transformer_class)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 0.0 <= self.voltage_fraction <= 1.0:
            raise ValueError("voltage_fraction must lie in [0, 1]")
        for name in ("voltage_days", "power_days"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= self.days:
                raise ValueError(f"{name} must lie in (0, days]")
        if isinstance(self.feeder, str) and self.feeder.upper() not in PRESETS:
            raise ValueError(f"unknown preset {self.feeder!r}; valid: {', '.join(PRESETS)}")

    @property
    def feeder_name(self) -> str:
        return self.feeder.upper() if isinstance(self.feeder, str) else self.feeder["name"]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scenario":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ReportEntry:
    feeder: str
    meter_class: str
    method: str
    param: str
    value: object
    accuracies: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    applicable: bool = True
    mapping: Optional[str] = None  # K-means cluster labelling mode

    @property
    def runs(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else math.nan

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies)) if self.accuracies else math.nan


@dataclass
class BenchReport:
    scenario: dict
    entries: list = field(default_factory=list)

    def entry(self, method: str) -> ReportEntry:
        for e in self.entries:
            if e.method == method:
                return e
        raise KeyError(method)

    def means(self) -> dict:
        return {e.method: e.mean for e in self.entries}


def _feeder_spec(s: Scenario) -> FeederSpec:
    if isinstance(s.feeder, str):
        return build_feeder(s.feeder, s.seed, days=s.days, resolution=s.resolution)
    return FeederSpec.from_dict(s.feeder)


def clean_campaign(s: Scenario, load_seed: Optional[int] = None) -> MeasurementCampaign:
    f = _feeder_spec(s)
    return generate_campaign(f, s.seed if load_seed is None else load_seed)


def _prepare(s: Scenario, clean: MeasurementCampaign):
    c = clean
    if s.voltage_fraction < 1.0 and c.voltage is not None:
        c = drop_voltage_columns(c, s.voltage_fraction, s.seed)
    return c


def _run_method(method, s: Scenario, vc, pc):
    """Returns ``(assignments, mapping_mode)``; raises PreconditionError when not applicable."""
    cfg = EnsembleConfig(s.threshold_coefficient, s.salient_count,
                         "transformer")
    if method == "mlv-transfo":
        return mlv_assign(vc, "transformer"), None
    if method == "mlv-customer":
        return mlv_assign(vc, "customer"), None
    if method == "kmeans":
        _, a, mode = kmeans_assign(vc, s.kmeans_eps, s.kmeans_max_iter, s.kmeans_restarts, s.seed)
        return a, mode
    if method == "mlp":
        return mlp_assign(pc, s.salient_count), None
    if method == "bagging":
        return bagging_assign(vc, cfg, pc), None
    if method == "boosting":
        return boosting_assign(vc, cfg, pc), None
    raise ValueError(method)


def run_once(s: Scenario, prepared: MeasurementCampaign, run: int) -> dict:
    """Accuracy of every requested method for one noise realisation.

    Returns ``{method: (accuracy or None, mapping mode)}``; None marks a
    method whose data requirements are not met.
    """
    if s.redraw_loads:
        prepared = _prepare(s, clean_campaign(s, load_seed=s.seed + 7919 * (run + 1)))
    ctx = NoiseContext(U_n=prepared.nominal_voltage, P_n=prepared.nominal_power, seed=s.seed,
                       run_index=run, transformer_P_n=s.transformer_nominal_power)
    tclass = None if s.transformer_class is None else MeterClass.from_name(s.transformer_class)
    noisy = inject_noise(prepared, MeterClass.from_name(s.meter_class), ctx, tclass)
    vc = noisy if s.voltage_days is None else window(noisy, 0, s.voltage_days)
    pc = noisy if s.power_days is None else window(noisy, 0, s.power_days)
    out = {}
    for method in s.methods:
        try:
            pred, mode = _run_method(method, s, vc, pc)
        except PreconditionError:
            out[method] = (None, None)
            continue
        out[method] = (accuracy(pred, noisy.truth), mode)
    return out


def _run_task(args):
    s, prepared, run = args
    return run_once(s, prepared, run)


def _execute(s: Scenario, prepared: MeasurementCampaign, param: str, value) -> BenchReport:
    tasks = [(s, prepared, r) for r in range(s.runs)]
    if s.workers > 1 and s.runs > 1:
        with ProcessPoolExecutor(max_workers=s.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    # parallelism must not leak into the report
    scenario = {k: v for k, v in s.to_dict().items() if k != "workers"}
    report = BenchReport(scenario=scenario)
    for method in s.methods:
        e = ReportEntry(s.feeder_name, s.meter_class, method, param, value)
        for r, res in enumerate(results):
            acc, mode = res[method]
            if acc is None:
                e.applicable = False
                e.accuracies, e.seeds = [], []
                break
            e.accuracies.append(acc)
            e.seeds.append([s.seed, r])
            e.mapping = mode
        report.entries.append(e)
    return report


def run_scenario(s: Scenario, clean: Optional[MeasurementCampaign] = None) -> BenchReport:
    """Run ``s.runs`` Monte Carlo repetitions and aggregate per method."""
    clean = clean_campaign(s) if clean is None else clean
    return _execute(s, _prepare(s, clean), "base", None)


def sweep(s: Scenario, parameter: str, values: Sequence) -> list[BenchReport]:
    """One report per value of ``parameter``; all share the same clean campaign."""
    if parameter == "class":
        parameter = "meter_class"
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; valid: {', '.join(SWEEP_PARAMETERS)}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    clean = clean_campaign(s)
    reports = []
    for v in values:
        sv = dataclasses.replace(s, **{parameter: v})
        report = _execute(sv, _prepare(sv, clean), parameter, v)
        reports.append(report)
    return reports


def merge_reports(reports: Sequence[BenchReport]) -> BenchReport:
    """Concatenate the entries of several reports (scenario of the first)."""
    if not reports:
        return BenchReport(scenario={})
    out = BenchReport(scenario=dict(reports[0].scenario))
    for r in reports:
        out.entries.extend(r.entries)
    return out
