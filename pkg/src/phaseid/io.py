"""Campaign bundles and report files.

A bundle is a directory of wide CSV files, one per measured quantity::

    customers_voltage.csv    timestamp,<meter id>,...
    customers_power.csv      timestamp,<meter id>,...
    transformer_voltage.csv  timestamp,a,b,c
    transformer_power.csv    timestamp,a,b,c
    reference_voltage.csv    timestamp,a,b,c   (three-phase reference customer)
    labels.csv               customer_id,phase
    meta.json                resolution, units, nominal values, id order

Absent quantities are absent files.  Floats are written with ``repr`` so a
save/load round trip is exact.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bench import BenchReport, ReportEntry
from .model import MeasurementCampaign, Phase, PhaseAssignment, validate_campaign

CUSTOMER_FILES = {"voltage": "customers_voltage.csv", "power": "customers_power.csv"}
PHASE_FILES = {
    "transformer_voltage": "transformer_voltage.csv",
    "transformer_power": "transformer_power.csv",
    "reference_voltage": "reference_voltage.csv",
}


class CampaignParseError(ValueError):
    def __init__(self, file, line: int, column: Optional[int], message: str):
        self.file, self.line, self.column = str(file), line, column
        where = f"{self.file}:{line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{where}: {message}")


class CampaignValidationError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid campaign: " + "; ".join(self.violations))


def _fmt_time(ts) -> str:
    return str(np.datetime64(ts, "s"))


def _write_wide(path: Path, timestamps, header: Sequence[str], matrix: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", *header])
        for t, row in zip(timestamps, matrix):
            w.writerow([_fmt_time(t), *(repr(float(x)) for x in row)])


def save_campaign(c: MeasurementCampaign, path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    for name in (*CUSTOMER_FILES, *PHASE_FILES):
        f = out / {**CUSTOMER_FILES, **PHASE_FILES}[name]
        if f.exists():
            f.unlink()
    for name, fname in CUSTOMER_FILES.items():
        m = getattr(c, name)
        if m is None:
            continue
        present = ~np.isnan(m).all(axis=0)
        if not present.any():
            continue
        ids = [cid for cid, p in zip(c.customer_ids, present) if p]
        _write_wide(out / fname, c.timestamps, ids, m[:, present])
    for name, fname in PHASE_FILES.items():
        m = getattr(c, name)
        if m is not None:
            _write_wide(out / fname, c.timestamps, ["a", "b", "c"], m)
    labels = out / "labels.csv"
    if c.truth is not None:
        with open(labels, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["customer_id", "phase"])
            for cid in c.customer_ids:
                w.writerow([cid, str(c.truth[cid])])
    elif labels.exists():
        labels.unlink()
    meta = {
        "customer_ids": list(c.customer_ids),
        "nominal_power": c.nominal_power,
        "nominal_voltage": c.nominal_voltage,
        "reference_customer": c.reference_customer,
        "resolution_minutes": c.resolution_minutes if c.T >= 2 else None,
        "units": {"power": "W", "voltage": "V"},
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out


def _read_wide(path: Path, expected_header: Optional[Sequence[str]] = None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CampaignParseError(path, 1, None, "empty file")
    header = rows[0]
    if not header or header[0] != "timestamp":
        raise CampaignParseError(path, 1, 1, "first column must be 'timestamp'")
    ids = header[1:]
    if expected_header is not None and list(ids) != list(expected_header):
        raise CampaignParseError(path, 1, None, f"expected columns {list(expected_header)}, got {ids}")
    times = []
    data = np.empty((len(rows) - 1, len(ids)))
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != len(header):
            raise CampaignParseError(path, line, None, f"expected {len(header)} fields, got {len(row)}")
        try:
            times.append(np.datetime64(row[0], "s"))
        except ValueError:
            raise CampaignParseError(path, line, 1, f"bad timestamp {row[0]!r}") from None
        for k, cell in enumerate(row[1:]):
            try:
                data[r, k] = float(cell)
            except ValueError:
                raise CampaignParseError(path, line, k + 2, f"bad number {cell!r}") from None
    return np.array(times, dtype="datetime64[s]"), ids, data


def load_campaign(path) -> MeasurementCampaign:
    """Read a bundle directory; raises on malformed rows or inconsistent files."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"campaign bundle {root} not found")
    meta = {}
    if (root / "meta.json").exists():
        try:
            meta = json.loads((root / "meta.json").read_text())
        except json.JSONDecodeError as e:
            raise CampaignParseError(root / "meta.json", e.lineno, e.colno, e.msg) from None

    tables = {}
    for name, fname in {**CUSTOMER_FILES, **PHASE_FILES}.items():
        if (root / fname).exists():
            expected = ["a", "b", "c"] if name in PHASE_FILES else None
            tables[name] = _read_wide(root / fname, expected)
    if not tables:
        raise CampaignValidationError(["bundle contains no measurement files"])

    ids = meta.get("customer_ids")
    if ids is None:
        ids = []
        for name in CUSTOMER_FILES:
            for cid in tables.get(name, (None, []))[1]:
                if cid not in ids:
                    ids.append(cid)
    ids = [str(i) for i in ids]

    problems = []
    first = next(iter(tables))
    timestamps = tables[first][0]
    for name, (ts, _, data) in tables.items():
        if len(ts) != len(timestamps):
            problems.append(f"T mismatch: {first} {len(timestamps)} vs {name} {len(ts)}")
        elif not np.array_equal(ts, timestamps):
            problems.append(f"timestamps of {name} differ from {first}")
    if problems:
        raise CampaignValidationError(problems)

    fields = {}
    for name in CUSTOMER_FILES:
        if name not in tables:
            continue
        _, cols, data = tables[name]
        unknown = [cid for cid in cols if cid not in ids]
        if unknown:
            raise CampaignValidationError([f"{name}: unknown meter ids {unknown[:3]}"])
        full = np.full((len(timestamps), len(ids)), np.nan)
        for k, cid in enumerate(cols):
            full[:, ids.index(cid)] = data[:, k]
        fields[name] = full
    for name in PHASE_FILES:
        if name in tables:
            fields[name] = tables[name][2]

    truth = None
    if (root / "labels.csv").exists():
        truth = {}
        with open(root / "labels.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["customer_id", "phase"]:
            raise CampaignParseError(root / "labels.csv", 1, None, "header must be customer_id,phase")
        for r, row in enumerate(rows[1:]):
            if len(row) != 2:
                raise CampaignParseError(root / "labels.csv", r + 2, None, "expected 2 fields")
            try:
                truth[row[0]] = Phase.parse(row[1])
            except ValueError as e:
                raise CampaignParseError(root / "labels.csv", r + 2, 2, str(e)) from None

    c = MeasurementCampaign(
        timestamps=timestamps,
        customer_ids=ids,
        truth=truth,
        reference_customer=meta.get("reference_customer"),
        nominal_voltage=float(meta.get("nominal_voltage", 230.0)),
        nominal_power=float(meta.get("nominal_power", 9200.0)),
        **fields,
    )
    problems = validate_campaign(c)
    if problems:
        raise CampaignValidationError(problems)
    return c


def save_assignments(assignments: Sequence[PhaseAssignment], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["customer_id", "phase", "score", "method"])
        for a in assignments:
            phase = "" if a.predicted is None else str(a.predicted)
            score = "" if a.score is None or math.isnan(a.score) else repr(float(a.score))
            w.writerow([a.customer_id, phase, score, a.method_tag])
    return path


# --- reports ---------------------------------------------------------------

RUN_HEADER = ["feeder", "class", "method", "param", "run", "accuracy"]
SUMMARY_HEADER = ["feeder", "class", "method", "param", "runs", "mean", "std"]


def _param_label(e: ReportEntry) -> str:
    return "base" if e.param == "base" else f"{e.param}={e.value}"


def _r4(x: float):
    return None if x is None or math.isnan(x) else round(float(x), 4)


def report_to_dict(report: BenchReport) -> dict:
    entries = []
    for e in report.entries:
        entries.append({
            "accuracies": [_r4(a) for a in e.accuracies],
            "applicable": e.applicable,
            "class": e.meter_class,
            "feeder": e.feeder,
            "mapping": e.mapping,
            "mean": _r4(e.mean),
            "method": e.method,
            "param": e.param,
            "runs": e.runs,
            "seeds": e.seeds,
            "std": _r4(e.std),
            "value": e.value,
        })
    return {"entries": entries, "scenario": report.scenario}


def _fmt4(x) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def save_report(report: BenchReport, format: str, path) -> Path:
    """Write ``report`` as JSON, or as long-format CSV plus a ``*_summary.csv``."""
    path = Path(path)
    if format == "json":
        path.write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")
        return path
    if format != "csv":
        raise ValueError(f"unknown report format {format!r}; expected json or csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_HEADER)
        for e in report.entries:
            for r, acc in enumerate(e.accuracies):
                w.writerow([e.feeder, e.meter_class, e.method, _param_label(e), r, _fmt4(acc)])
    summary = path.with_name(path.stem + "_summary.csv")
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for e in report.entries:
            w.writerow([e.feeder, e.meter_class, e.method, _param_label(e), e.runs, _fmt4(e.mean), _fmt4(e.std)])
    return path
