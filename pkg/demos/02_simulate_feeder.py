"""Building a synthetic feeder and its measurement campaign.

Each preset fixes the customer count, yearly energy, main path length and
mean path impedance.  The generator draws a radial topology that meets those
statistics, synthesises household loads and derives voltages with a
linearised drop model.
"""

import numpy as np

from phaseid import PRESETS, build_feeder, generate_campaign, validate_campaign
from phaseid.simfeeder import annualized_energy, path_impedances

print("preset  users  energy[kWh]  path[m]  Z[ohm]   ->  built Z   energy")
for name, p in PRESETS.items():
    f = build_feeder(name, seed=0)
    c = generate_campaign(f, seed=0)
    assert validate_campaign(c) == []
    print(f"{name:>6} {p.n_users:6d} {p.yearly_energy_per_user:12.0f} {p.main_path_length:8.0f} "
          f"{p.avg_path_impedance:7.4f}   ->  {path_impedances(f).mean():7.4f}  "
          f"{annualized_energy(c.power).mean():7.0f}")

f = build_feeder("A", seed=0)
c = generate_campaign(f, seed=0)
print(f"\npreset A: {c.N} customers, {c.T} samples at {c.resolution_minutes:.0f} min")
print("phase counts:", np.bincount(f.true_phase, minlength=3).tolist())
drop = c.transformer_voltage[:, list(f.true_phase)] - c.voltage
print(f"voltage drop to customers: median {np.median(drop):.2f} V, max {drop.max():.2f} V")
print("reference customer:", c.reference_customer)
