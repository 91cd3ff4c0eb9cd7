"""Synthetic radial LV feeders with ground-truth phase labels.

A feeder is a tree of cable sections rooted at the distribution transformer.
Customer voltages follow a linearised single-phase drop model: each section
drops ``Z_s * I_s`` where ``I_s`` is the same-phase current flowing through
it, approximated as downstream power over the nominal voltage.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional, Union

import numpy as np
from scipy.signal import lfilter

from .model import MINUTES_PER_DAY, MeasurementCampaign, Phase, make_timestamps

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class FeederPreset:
    name: str
    n_users: int
    yearly_energy_per_user: float  # kWh
    main_path_length: float  # m
    avg_path_impedance: float  # ohm


PRESETS = {
    "A": FeederPreset("A", 22, 1852.0, 878.0, 0.206),
    "B": FeederPreset("B", 125, 1894.0, 245.0, 0.117),
    "C": FeederPreset("C", 11, 1802.0, 102.0, 0.0598),
    "D": FeederPreset("D", 20, 4173.0, 138.0, 0.196),
    "E": FeederPreset("E", 45, 2066.0, 173.0, 0.106),
    "F": FeederPreset("F", 74, 1905.0, 149.0, 0.0914),
}


@dataclass(frozen=True)
class FeederSpec:
    """Concrete radial feeder.

    Nodes are numbered from 0 (the transformer).  ``parent[k]`` is the
    upstream node of node ``k`` and ``section_impedance[k]`` /
    ``section_length[k]`` describe the cable between them; entry 0 is unused.
    """

    name: str
    n_customers: int
    parent: tuple
    section_impedance: tuple
    section_length: tuple
    customer_node: tuple
    true_phase: tuple
    main_path_length: float
    avg_path_impedance: float
    yearly_energy_per_user: float
    resolution: float = 15.0
    days: float = 20.0
    include_reference_customer: bool = True
    reference_node: Optional[int] = None
    nominal_voltage: float = 230.0
    nominal_power: float = 9200.0
    transformer_impedance: float = 0.025  # ohm, per phase
    loss_factor: float = 0.02
    upstream_fluctuation: float = 2.5  # V, shared slow MV variation
    phase_fluctuation: float = 0.15  # V, per-phase slow variation

    @property
    def customer_ids(self) -> tuple:
        width = max(3, len(str(self.n_customers)))
        return tuple(f"{self.name}-{i + 1:0{width}d}" for i in range(self.n_customers))

    @property
    def n_samples(self) -> int:
        return int(round(self.days * MINUTES_PER_DAY / self.resolution))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["true_phase"] = [str(Phase(p)) for p in self.true_phase]
        for k in ("parent", "section_impedance", "section_length", "customer_node"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeederSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown feeder spec keys: {sorted(unknown)}")
        d["true_phase"] = tuple(int(Phase.parse(p)) for p in d["true_phase"])
        for k in ("parent", "section_impedance", "section_length", "customer_node"):
            d[k] = tuple(d[k])
        return validate_feeder(cls(**d))


def validate_feeder(f: FeederSpec) -> FeederSpec:
    n_nodes = len(f.parent)
    if len(f.section_impedance) != n_nodes or len(f.section_length) != n_nodes:
        raise ValueError("parent, section_impedance and section_length must have equal length")
    if n_nodes < 1 or f.parent[0] != -1:
        raise ValueError("node 0 must be the transformer root with parent -1")
    for k in range(1, n_nodes):
        p = f.parent[k]
        if not 0 <= p < k:
            raise ValueError(f"node {k}: parent {p} must precede it (tree rooted at node 0)")
        if not f.section_impedance[k] > 0:
            raise ValueError(f"node {k}: section impedance must be positive")
    if len(f.customer_node) != f.n_customers or len(f.true_phase) != f.n_customers:
        raise ValueError("customer_node and true_phase must have one entry per customer")
    for i, node in enumerate(f.customer_node):
        if not 0 <= node < n_nodes:
            raise ValueError(f"customer {i}: node {node} does not exist")
    for p in f.true_phase:
        Phase(p)
    if f.reference_node is not None and not 0 <= f.reference_node < n_nodes:
        raise ValueError("reference_node does not exist")
    if f.include_reference_customer and f.reference_node is None:
        raise ValueError("include_reference_customer requires reference_node")
    if f.resolution <= 0 or f.days < 0:
        raise ValueError("resolution must be positive and days non-negative")
    return f


def node_distance(f: FeederSpec, weights) -> np.ndarray:
    """Cumulative sum of per-section ``weights`` from the root to each node."""
    out = np.zeros(len(f.parent))
    for k in range(1, len(f.parent)):
        out[k] = out[f.parent[k]] + weights[k]
    return out


def path_impedances(f: FeederSpec) -> np.ndarray:
    """Impedance from the transformer to each customer's connection node."""
    return node_distance(f, f.section_impedance)[list(f.customer_node)]


def _ancestors(f: FeederSpec, node: int) -> set:
    out = set()
    while node > 0:
        out.add(node)
        node = f.parent[node]
    return out


def build_feeder(
    preset: Union[FeederPreset, FeederSpec, str],
    seed: int = 0,
    *,
    days: float = 20.0,
    resolution: float = 15.0,
    include_reference_customer: bool = True,
    **overrides,
) -> FeederSpec:
    """Realise a named preset as a concrete tree, or validate a custom spec.

    Lengths are rescaled so the longest transformer-to-customer path equals the
    preset's main path length, and a uniform per-metre impedance is chosen so
    the mean customer path impedance matches the preset exactly.
    """
    if isinstance(preset, FeederSpec):
        return validate_feeder(replace(preset, **overrides) if overrides else preset)
    if isinstance(preset, str):
        try:
            preset = PRESETS[preset.upper()]
        except KeyError:
            raise ValueError(f"unknown preset {preset!r}; valid: {', '.join(PRESETS)}") from None
    rng = np.random.default_rng([seed, 0xFEED])
    n = preset.n_users

    # a few branches leave the transformer; the first one becomes the main
    # path.  Laterals hang off branch nodes and every customer gets its own
    # service node.
    n_branches = 1 if n < 6 else int(rng.integers(2, 4))
    per_branch = max(2, int(math.ceil(n / (3 * n_branches))))
    parent = [-1]
    length = [0.0]
    branches = []
    for b in range(n_branches):
        reach = 1.0 if b == 0 else float(rng.uniform(0.4, 0.9))
        chain = []
        for k in range(per_branch):
            parent.append(0 if k == 0 else chain[-1])
            length.append(reach * float(rng.uniform(0.5, 1.5)))
            chain.append(len(parent) - 1)
        branches.append(chain)
    trunk = branches[0]
    attach_points = [node for chain in branches for node in chain]
    for _ in range(max(1, len(attach_points) // 3)):
        node = int(rng.choice(attach_points))
        for _ in range(int(rng.integers(1, 3))):
            parent.append(node)
            length.append(float(rng.uniform(0.2, 0.6)))
            node = len(parent) - 1
            attach_points.append(node)
    customer_node = []
    for i in range(n):
        # the end of the main branch always hosts a customer
        host = trunk[-1] if i == 0 else int(rng.choice(attach_points))
        parent.append(host)
        length.append(float(rng.uniform(0.05, 0.25)))
        customer_node.append(len(parent) - 1)

    parent_t = tuple(parent)
    tmp = FeederSpec(preset.name, n, parent_t, tuple([1.0] * len(parent)), tuple(length),
                     tuple(customer_node), tuple([0] * n), 0.0, 0.0, 0.0)
    dist = node_distance(tmp, length)
    scale = preset.main_path_length / dist[customer_node].max()
    length = [x * scale for x in length]
    dist = dist * scale
    ohm_per_m = preset.avg_path_impedance / dist[customer_node].mean()
    impedance = [x * ohm_per_m for x in length]
    impedance[0] = 0.0
    length[0] = 0.0

    phases = np.arange(n) % 3
    rng.shuffle(phases)

    reference_node = None
    if include_reference_customer:
        # a three-phase customer roughly halfway down the trunk
        reference_node = trunk[len(trunk) // 2]

    spec = FeederSpec(
        name=preset.name,
        n_customers=n,
        parent=parent_t,
        section_impedance=tuple(impedance),
        section_length=tuple(length),
        customer_node=tuple(customer_node),
        true_phase=tuple(int(p) for p in phases),
        main_path_length=float(dist[customer_node].max()),
        avg_path_impedance=float(dist[customer_node].mean() * ohm_per_m),
        yearly_energy_per_user=preset.yearly_energy_per_user,
        resolution=resolution,
        days=days,
        include_reference_customer=include_reference_customer,
        reference_node=reference_node,
    )
    if overrides:
        spec = replace(spec, **overrides)
    return validate_feeder(spec)


def _daily_shape(hours: np.ndarray, rng) -> np.ndarray:
    morning = np.exp(-0.5 * ((hours - rng.uniform(6.5, 8.5)) / 1.0) ** 2)
    evening = np.exp(-0.5 * ((hours - rng.uniform(17.5, 20.5)) / 1.8) ** 2)
    return 0.35 + 0.6 * morning + 1.0 * evening


def _ar1(n: int, step: float, correlation: float, rng) -> np.ndarray:
    """Unit-variance AR(1) series; ``correlation`` and ``step`` in the same unit."""
    if n == 0:
        return np.zeros(0)
    a = math.exp(-step / correlation)
    e = rng.standard_normal(n) * math.sqrt(1.0 - a * a)
    e[0] = rng.standard_normal()
    return lfilter([1.0], [1.0, -a], e)


def _switching(minutes: int, mean_duration: float, magnitudes, rng) -> np.ndarray:
    n_events = len(magnitudes)
    starts = rng.integers(0, minutes, size=n_events)
    durations = np.maximum(1, rng.exponential(mean_duration, size=n_events)).astype(int)
    delta = np.zeros(minutes + 1)
    np.add.at(delta, starts, magnitudes)
    np.add.at(delta, np.minimum(starts + durations, minutes), -magnitudes)
    return np.cumsum(delta)[:minutes]


def synth_loads(f: FeederSpec, seed: int = 0) -> np.ndarray:
    """Per-customer active power (W) as a ``T x N`` matrix.

    Each profile combines a daily baseline with continuous small fluctuation,
    frequent small appliances and rarer large appliances whose magnitudes are
    heavy-tailed.  Profiles are built on a one-minute grid and averaged to the
    meter resolution, then scaled so the mean annualised energy per customer
    equals the feeder's yearly energy exactly.
    """
    T = f.n_samples
    n = f.n_customers
    if T == 0:
        return np.zeros((0, n))
    rng = np.random.default_rng([seed, 0x10AD])
    sub = max(1, int(round(f.resolution)))
    minutes = T * sub
    days = minutes / MINUTES_PER_DAY
    hours = (np.arange(minutes) / 60.0) % 24.0
    H = np.empty((T, n))
    for i in range(n):
        base = _daily_shape(hours, rng) * rng.uniform(80.0, 160.0)
        fine = base * (1.0 + 0.3 * _ar1(minutes, 1.0, 20.0, rng))
        small_rate = rng.uniform(10.0, 25.0)
        small = rng.uniform(40.0, 250.0, size=rng.poisson(small_rate * days))
        fine += _switching(minutes, 12.0, small, rng)
        large_rate = rng.uniform(2.0, 6.0)
        large = np.minimum(300.0 * (1.0 + rng.pareto(2.0, size=rng.poisson(large_rate * days))), 7000.0)
        fine += _switching(minutes, rng.uniform(20.0, 60.0), large, rng)
        H[:, i] = fine.reshape(T, sub).mean(axis=1) * rng.lognormal(0.0, 0.3)
    H = np.maximum(H, 0.0)
    annual_kwh = H.mean() * HOURS_PER_YEAR / 1000.0
    return H * (f.yearly_energy_per_user / annual_kwh)


def annualized_energy(H: np.ndarray) -> np.ndarray:
    """Annualised energy in kWh per customer column."""
    return H.mean(axis=0) * HOURS_PER_YEAR / 1000.0


def transformer_power(f: FeederSpec, H: np.ndarray, loss_factor: Optional[float] = None) -> np.ndarray:
    lam = f.loss_factor if loss_factor is None else loss_factor
    P = np.zeros((H.shape[0], 3))
    for j in range(3):
        cols = [i for i, p in enumerate(f.true_phase) if p == j]
        if cols:
            P[:, j] = H[:, cols].sum(axis=1) * (1.0 + lam)
    return P


def shared_impedance(f: FeederSpec) -> np.ndarray:
    """``N x N`` impedance of the common path of two customers on the same phase.

    Zero for customers on different phases.
    """
    anc = [_ancestors(f, node) for node in f.customer_node]
    n = f.n_customers
    Z = np.zeros((n, n))
    for i in range(n):
        for k in range(i, n):
            if f.true_phase[i] != f.true_phase[k]:
                continue
            common = anc[i] & anc[k]
            Z[i, k] = Z[k, i] = sum(f.section_impedance[s] for s in common)
    return Z


def upstream_voltage(f: FeederSpec, T: int, seed: int = 0) -> np.ndarray:
    """No-load LV voltage per phase: U_n plus shared and per-phase slow variation."""
    rng = np.random.default_rng([seed, 0x5EED])
    shared = _ar1(T, f.resolution, 120.0, rng) * f.upstream_fluctuation
    out = np.empty((T, 3))
    for j in range(3):
        out[:, j] = f.nominal_voltage + shared + _ar1(T, f.resolution, 120.0, rng) * f.phase_fluctuation
    return out


def simulate_voltages(f: FeederSpec, H: np.ndarray, seed: int = 0, source: Optional[np.ndarray] = None):
    """Customer (``T x N``) and transformer (``T x 3``) voltages for loads ``H``.

    The transformer voltage includes the drop over the transformer's own
    series impedance, so it too reflects the per-phase loading.  ``source``
    replaces the seeded upstream voltage (useful for hand-checked cases).
    """
    T = H.shape[0]
    U_n = f.nominal_voltage
    src = upstream_voltage(f, T, seed) if source is None else np.asarray(source, dtype=float)
    P = transformer_power(f, H, loss_factor=0.0)
    U_tx = src - f.transformer_impedance * P / U_n
    phase_idx = np.asarray(f.true_phase, dtype=int)
    drop = H @ shared_impedance(f) / U_n
    U = U_tx[:, phase_idx] - drop
    return U, U_tx


def reference_voltages(f: FeederSpec, H: np.ndarray, U_tx: np.ndarray) -> np.ndarray:
    """Per-phase voltage at the three-phase reference customer (no own load)."""
    anc = _ancestors(f, f.reference_node)
    out = np.array(U_tx, dtype=float)
    for i, node in enumerate(f.customer_node):
        common = anc & _ancestors(f, node)
        z = sum(f.section_impedance[s] for s in common)
        if z:
            out[:, f.true_phase[i]] -= z * H[:, i] / f.nominal_voltage
    return out


def generate_campaign(f: FeederSpec, seed: int = 0) -> MeasurementCampaign:
    """Noiseless, fully labelled campaign for feeder ``f``."""
    H = synth_loads(f, seed)
    P = transformer_power(f, H)
    U, U_tx = simulate_voltages(f, H, seed)
    ref = None
    ref_id = None
    if f.include_reference_customer:
        ref = reference_voltages(f, H, U_tx)
        ref_id = f"{f.name}-3ph"
    ids = f.customer_ids
    return MeasurementCampaign(
        timestamps=make_timestamps(f.n_samples, f.resolution),
        customer_ids=ids,
        voltage=U,
        power=H,
        transformer_voltage=U_tx,
        transformer_power=P,
        reference_voltage=ref,
        reference_customer=ref_id,
        truth={cid: Phase(p) for cid, p in zip(ids, f.true_phase)},
        nominal_voltage=f.nominal_voltage,
        nominal_power=f.nominal_power,
    )
