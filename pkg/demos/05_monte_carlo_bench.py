"""Monte Carlo benchmarking and parameter sweeps.

A scenario fixes one clean campaign and redraws only the meter noise on each
run.  Sweeps reuse the same clean campaign for every value, so differences
between values come from the swept parameter alone.
"""

import tempfile
from pathlib import Path

from phaseid import Scenario, run_scenario, sweep
from phaseid.bench import merge_reports
from phaseid.io import save_report

s = Scenario(feeder="A", meter_class="0.5", runs=5, days=10, kmeans_restarts=3)
report = run_scenario(s)
for e in report.entries:
    print(f"{e.method:>12}: mean {e.mean:.3f}  std {e.std:.3f}")

reps = sweep(Scenario(feeder="A", runs=5, days=10, methods=("mlv-transfo", "mlp")), "meter_class",
             ["0.2s", "0.5", "1.0"])
for r in reps:
    print(r.entries[0].meter_class, {e.method: round(e.mean, 3) for e in r.entries})

out = Path(tempfile.mkdtemp())
save_report(merge_reports(reps), "csv", out / "runs.csv")
print("\nplot-ready CSV:", out / "runs_summary.csv")
print((out / "runs_summary.csv").read_text())
