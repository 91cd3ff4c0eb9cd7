"""Core data types: phases, measurement campaigns and phase assignments.

A campaign holds customer and transformer time series as ``T x N`` and
``T x 3`` arrays.  Customers without data for a quantity carry an all-NaN
column; partially missing columns are invalid.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

MINUTES_PER_DAY = 24 * 60


class Phase(enum.IntEnum):
    """One of the three LV phases, ordered a < b < c for tie-breaking."""

    a = 0
    b = 1
    c = 2

    @classmethod
    def parse(cls, value) -> "Phase":
        if isinstance(value, Phase):
            return value
        try:
            return cls[str(value).strip().lower()]
        except KeyError:
            raise ValueError(f"unknown phase {value!r}; expected one of a, b, c") from None

    def __str__(self) -> str:
        return self.name


PHASES = (Phase.a, Phase.b, Phase.c)

METHOD_TAGS = ("mlv-transfo", "mlv-customer", "kmeans", "mlp", "bagging", "boosting")


@dataclass(frozen=True)
class PhaseAssignment:
    """Predicted phase of one customer.

    ``predicted`` is None when the customer could not be assigned (no usable
    data).  ``route`` names the data path that decided an ensemble
    assignment ("voltage" or "power"); ``flag`` carries warnings such as
    "undefined" for zero-variance input.
    """

    customer_id: str
    predicted: Optional[Phase]
    score: float
    method_tag: str
    route: Optional[str] = None
    flag: Optional[str] = None

    @property
    def assigned(self) -> bool:
        return self.predicted is not None


def _frozen(a):
    if a is None:
        return None
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeasurementCampaign:
    """Smart-meter measurement campaign.

    Attributes:
        timestamps: ``T`` sample times (``datetime64[s]``), uniformly spaced.
        customer_ids: ``N`` meter identifiers.
        voltage: ``T x N`` average customer voltages in V (matrix U).
        power: ``T x N`` average customer active power in W, consumption
            positive (matrix H).
        transformer_voltage: ``T x 3`` LV-side per-phase voltage reference.
        transformer_power: ``T x 3`` per-phase supplied power (matrix P).
        reference_voltage: ``T x 3`` voltages of a three-phase reference
            customer, used as alternative correlation reference.
        reference_customer: identifier of that three-phase customer.
        truth: ground-truth phase per customer id.
        nominal_voltage, nominal_power: meter nominal values U_n, P_n.
    """

    timestamps: np.ndarray
    customer_ids: tuple
    voltage: Optional[np.ndarray] = None
    power: Optional[np.ndarray] = None
    transformer_voltage: Optional[np.ndarray] = None
    transformer_power: Optional[np.ndarray] = None
    reference_voltage: Optional[np.ndarray] = None
    reference_customer: Optional[str] = None
    truth: Optional[Mapping[str, Phase]] = None
    nominal_voltage: float = 230.0
    nominal_power: float = 9200.0

    def __post_init__(self):
        ts = np.asarray(self.timestamps)
        if not np.issubdtype(ts.dtype, np.datetime64):
            ts = ts.astype("datetime64[s]")
        ts = ts.astype("datetime64[s]")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "customer_ids", tuple(str(i) for i in self.customer_ids))
        for name in ("voltage", "power", "transformer_voltage", "transformer_power", "reference_voltage"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.truth is not None:
            object.__setattr__(self, "truth", {str(k): Phase.parse(v) for k, v in self.truth.items()})

    @property
    def T(self) -> int:
        return len(self.timestamps)

    @property
    def N(self) -> int:
        return len(self.customer_ids)

    @property
    def resolution_minutes(self) -> float:
        if self.T < 2:
            return math.nan
        return float((self.timestamps[1] - self.timestamps[0]) / np.timedelta64(1, "m"))

    def has_voltage(self) -> np.ndarray:
        """Boolean mask of customers with a voltage column."""
        return _present_columns(self.voltage, self.N)

    def has_power(self) -> np.ndarray:
        return _present_columns(self.power, self.N)

    def index_of(self, customer_id: str) -> int:
        return self.customer_ids.index(customer_id)

    def replace(self, **changes) -> "MeasurementCampaign":
        return dataclasses.replace(self, **changes)


def _present_columns(matrix, n) -> np.ndarray:
    if matrix is None:
        return np.zeros(n, dtype=bool)
    return ~np.isnan(matrix).all(axis=0)


def make_timestamps(T: int, resolution_minutes: float = 15, start: str = "2021-01-04T00:00:00") -> np.ndarray:
    step = np.timedelta64(int(round(resolution_minutes * 60)), "s")
    return np.datetime64(start, "s") + step * np.arange(T)


def validate_campaign(c: MeasurementCampaign) -> list[str]:
    """Return human-readable invariant violations; empty when the campaign is valid."""
    problems = []
    T, N = c.T, c.N
    lengths = {}
    for name in ("voltage", "power", "transformer_voltage", "transformer_power", "reference_voltage"):
        m = getattr(c, name)
        if m is None:
            continue
        if m.ndim != 2:
            problems.append(f"{name}: expected a 2-D matrix, got {m.ndim}-D")
            continue
        lengths[name] = m.shape[0]
        width = N if name in ("voltage", "power") else 3
        if m.shape[1] != width:
            problems.append(f"{name}: expected {width} columns, got {m.shape[1]}")
    names = list(lengths)
    for first, second in zip(names, names[1:]):
        if lengths[first] != lengths[second]:
            problems.append(f"T mismatch: {first} {lengths[first]} vs {second} {lengths[second]}")
    for name, rows in lengths.items():
        if rows != T:
            problems.append(f"T mismatch: timestamps {T} vs {name} {rows}")

    if len(set(c.customer_ids)) != N:
        problems.append("customer_ids: duplicate identifiers")

    if T >= 2:
        steps = np.diff(c.timestamps).astype(np.int64)
        if steps[0] <= 0:
            problems.append("timestamps not strictly increasing at index 1")
        for k in np.flatnonzero(steps != steps[0]):
            problems.append(f"non-uniform step at index {k + 1}")

    for name in ("voltage", "power"):
        m = getattr(c, name)
        if m is None or m.ndim != 2:
            continue
        nan = np.isnan(m)
        partial = nan.any(axis=0) & ~nan.all(axis=0)
        for j in np.flatnonzero(partial):
            problems.append(f"{name}: column {j} ({c.customer_ids[j]}) partially missing")
    for name in ("transformer_voltage", "transformer_power", "reference_voltage"):
        m = getattr(c, name)
        if m is not None and m.ndim == 2 and np.isnan(m).any():
            problems.append(f"{name}: contains missing samples")

    if c.reference_voltage is not None and c.reference_customer is None:
        problems.append("reference_voltage present without reference_customer id")
    if c.truth is not None:
        missing = [i for i in c.customer_ids if i not in c.truth]
        if missing:
            problems.append(f"truth: no label for {len(missing)} customers (first: {missing[0]})")
    return problems


def samples_per_day(c: MeasurementCampaign) -> int:
    res = c.resolution_minutes
    if not res or math.isnan(res):
        raise ValueError("campaign resolution undefined (need T >= 2)")
    per_day = MINUTES_PER_DAY / res
    if abs(per_day - round(per_day)) > 1e-9:
        raise ValueError(f"resolution {res} min does not divide a day")
    return int(round(per_day))


def window(c: MeasurementCampaign, start: int, days: float) -> MeasurementCampaign:
    """Slice every matrix to ``days`` worth of rows starting at row ``start``."""
    n = int(round(days * samples_per_day(c)))
    if start < 0 or start >= c.T or n < 0 or start + n > c.T:
        raise IndexError(f"window [{start}, {start + n}) outside campaign of length {c.T}")
    rows = slice(start, start + n)
    sliced = {
        name: None if getattr(c, name) is None else getattr(c, name)[rows]
        for name in ("voltage", "power", "transformer_voltage", "transformer_power", "reference_voltage")
    }
    return c.replace(timestamps=c.timestamps[rows], **sliced)


def drop_voltage_columns(c: MeasurementCampaign, keep_fraction: float, seed: int) -> MeasurementCampaign:
    """Keep voltage data for a seeded random ``ceil(keep_fraction * N)`` customers.

    The retained sets are nested: for a fixed seed, a larger fraction keeps a
    superset of the customers kept by a smaller one.
    """
    if c.voltage is None:
        raise ValueError("campaign has no voltage matrix")
    if not 0.0 <= keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction {keep_fraction} outside [0, 1]")
    k = math.ceil(keep_fraction * c.N - 1e-12)
    order = np.random.default_rng(seed).permutation(c.N)
    keep = np.zeros(c.N, dtype=bool)
    keep[order[:k]] = True
    voltage = np.array(c.voltage)
    voltage[:, ~keep] = np.nan
    return c.replace(voltage=voltage)


def assignments_by_id(assignments: Sequence[PhaseAssignment]) -> dict:
    return {a.customer_id: a for a in assignments}
