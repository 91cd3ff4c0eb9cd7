"""IEC accuracy-class noise model.

The maximal error allowed by a class is treated as three standard
deviations of a zero-mean Gaussian.  Every noise draw is a pure function
of ``(seed, run_index, quantity, meter id, timestamp)`` so that slicing a
campaign before or after noise injection gives identical cells.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import MeasurementCampaign


@dataclass(frozen=True)
class MeterClass:
    name: str
    delta_class: float
    s_type: bool = False

    def __post_init__(self):
        if not self.delta_class >= 0:
            raise ValueError(f"delta_class must be non-negative, got {self.delta_class}")

    @classmethod
    def from_name(cls, name: str) -> "MeterClass":
        try:
            return METER_CLASSES[str(name)]
        except KeyError:
            valid = ", ".join(METER_CLASSES)
            raise ValueError(f"unknown meter class {name!r}; valid: {valid}") from None

    @property
    def is_noiseless(self) -> bool:
        return self.delta_class == 0


METER_CLASSES = {
    "0.1": MeterClass("0.1", 0.001),
    "0.2": MeterClass("0.2", 0.002),
    "0.5": MeterClass("0.5", 0.005),
    "1.0": MeterClass("1.0", 0.01),
    "0.2s": MeterClass("0.2s", 0.002, True),
    "0.5s": MeterClass("0.5s", 0.005, True),
    # zero-noise analog used for ground-truth checks
    "exact": MeterClass("exact", 0.0),
}

# Column order used when reporting class sweeps: s-classes first, then by delta.
TABLE_CLASS_ORDER = ("0.2s", "0.5s", "0.1", "0.2", "0.5", "1.0")


@dataclass(frozen=True)
class NoiseContext:
    """Nominal values and seeds for one noise realisation.

    ``P_base`` only matters for per-unit pipelines; with measurements in
    watts it stays 1.  ``transformer_P_n`` overrides the nominal rating of
    the transformer power meters (defaults to ``P_n``).
    """

    U_n: float = 230.0
    P_n: float = 9200.0
    P_base: float = 1.0
    seed: int = 0
    run_index: int = 0
    transformer_P_n: Optional[float] = None

    def __post_init__(self):
        for name in ("U_n", "P_n", "P_base"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.transformer_P_n is not None and not self.transformer_P_n > 0:
            raise ValueError("transformer_P_n must be positive")


def sigma_voltage(meter: MeterClass, ctx: NoiseContext) -> float:
    return meter.delta_class * ctx.U_n / 3.0


def sigma_power(meter: MeterClass, reading, ctx: NoiseContext, P_n: Optional[float] = None):
    """Standard deviation of the power error for one or many readings.

    Regular classes scale with the nominal rating.  For s-classes the error
    scales with the actual reading above 20 % of the rating and is floored at
    that level below it; the proportional branch is extended above 100 %.
    """
    P_n = ctx.P_n if P_n is None else P_n
    reading = np.asarray(reading, dtype=float)
    if not meter.s_type:
        out = np.full(reading.shape, meter.delta_class * P_n / 3.0)
    else:
        level = np.maximum(np.abs(reading), 0.2 * P_n)
        out = meter.delta_class * level / ctx.P_base / 3.0
    return out[()] if out.ndim == 0 else out


# --- keyed Gaussian stream -------------------------------------------------

def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _key(*parts) -> np.uint64:
    digest = hashlib.blake2b("\x1f".join(str(p) for p in parts).encode(), digest_size=8).digest()
    return np.uint64(int.from_bytes(digest, "little"))


def keyed_normals(meter_keys: np.ndarray, timestamps: np.ndarray) -> np.ndarray:
    """Standard normal draws indexed by (meter key, timestamp).

    Returns a ``len(timestamps) x len(meter_keys)`` matrix.  Two counter-based
    hashes give independent uniforms that are turned into a normal with the
    Box-Muller transform.
    """
    keys = np.asarray(meter_keys, dtype=np.uint64)[None, :]
    ts = np.asarray(timestamps).astype("datetime64[s]").astype(np.int64).view(np.uint64)[:, None]
    with np.errstate(over="ignore"):
        base = _splitmix64(keys ^ _splitmix64(ts))
        u1 = _splitmix64(base)
        u2 = _splitmix64(base ^ np.uint64(0xD1B54A32D192ED03))
    scale = 2.0 ** -53
    # shift into (0, 1] so log is finite
    f1 = ((u1 >> np.uint64(11)).astype(np.float64) + 1.0) * scale
    f2 = (u2 >> np.uint64(11)).astype(np.float64) * scale
    return np.sqrt(-2.0 * np.log(f1)) * np.cos(2.0 * np.pi * f2)


def _keys(ctx: NoiseContext, quantity: str, ids) -> np.ndarray:
    return np.array([_key(ctx.seed, ctx.run_index, quantity, i) for i in ids], dtype=np.uint64)


def inject_noise(
    c: MeasurementCampaign,
    meter: MeterClass,
    ctx: NoiseContext,
    transformer_meter: Optional[MeterClass] = None,
) -> MeasurementCampaign:
    """Add class-consistent Gaussian error to every present measurement.

    Transformer meters use ``meter`` unless ``transformer_meter`` is given.
    Missing (NaN) cells stay missing; truth labels are untouched.
    """
    tmeter = meter if transformer_meter is None else transformer_meter
    if meter.is_noiseless and tmeter.is_noiseless:
        return c
    ts = c.timestamps
    changes = {}
    if c.voltage is not None and not meter.is_noiseless:
        z = keyed_normals(_keys(ctx, "U", c.customer_ids), ts)
        changes["voltage"] = c.voltage + sigma_voltage(meter, ctx) * z
    if c.power is not None and not meter.is_noiseless:
        z = keyed_normals(_keys(ctx, "H", c.customer_ids), ts)
        changes["power"] = c.power + sigma_power(meter, c.power, ctx) * z
    if c.reference_voltage is not None and not meter.is_noiseless:
        ids = [f"{c.reference_customer}/{p}" for p in "abc"]
        z = keyed_normals(_keys(ctx, "U", ids), ts)
        changes["reference_voltage"] = c.reference_voltage + sigma_voltage(meter, ctx) * z
    if not tmeter.is_noiseless:
        ids = [f"transformer/{p}" for p in "abc"]
        if c.transformer_voltage is not None:
            z = keyed_normals(_keys(ctx, "U", ids), ts)
            changes["transformer_voltage"] = c.transformer_voltage + sigma_voltage(tmeter, ctx) * z
        if c.transformer_power is not None:
            z = keyed_normals(_keys(ctx, "P", ids), ts)
            sig = sigma_power(tmeter, c.transformer_power, ctx, P_n=ctx.transformer_P_n)
            changes["transformer_power"] = c.transformer_power + sig * z
    return c.replace(**changes)
