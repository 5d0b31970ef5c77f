"""Shared CSV schemas for predictor, simulator, and harness outputs.

Every file starts with a `# lfperf-<name>-csv-v1` version line; readers
reject files whose version line does not match.  Formats are documented in
docs/formats.md.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

SCENARIO_SCHEMA = "# lfperf-scenario-csv-v1"
GAPS_SCHEMA = "# lfperf-gaps-csv-v1"
POISSON_SCHEMA = "# lfperf-poisson-csv-v1"

SCENARIO_COLUMNS = [
    "scenario", "structure", "R", "dist", "update_pct", "threads", "layout",
    "predicted_ops_s", "sim_ops_s", "measured_ops_s", "A", "Bq", "events_per_op",
]

MERGE_KEY = ("structure", "R", "dist", "update_pct", "threads", "layout")


class SchemaError(ValueError):
    pass


@dataclass
class ScenarioRow:
    scenario: str
    structure: str
    key_range: int
    dist: str
    update_pct: float
    threads: int
    layout: str
    predicted_ops_s: float | None = None
    sim_ops_s: float | None = None
    measured_ops_s: float | None = None
    quad_a: float | None = None
    quad_b: float | None = None
    events_per_op: float | None = None

    def __post_init__(self):
        if all(v is None for v in (self.predicted_ops_s, self.sim_ops_s,
                                   self.measured_ops_s)):
            raise SchemaError("a scenario row needs at least one result column")

    def key(self):
        return (self.structure, self.key_range, self.dist,
                round(self.update_pct, 6), self.threads, self.layout)

    def merged_with(self, other: "ScenarioRow") -> "ScenarioRow":
        def pick(a, b):
            return a if a is not None else b

        return ScenarioRow(
            self.scenario, self.structure, self.key_range, self.dist,
            self.update_pct, self.threads, self.layout,
            pick(self.predicted_ops_s, other.predicted_ops_s),
            pick(self.sim_ops_s, other.sim_ops_s),
            pick(self.measured_ops_s, other.measured_ops_s),
            pick(self.quad_a, other.quad_a),
            pick(self.quad_b, other.quad_b),
            pick(self.events_per_op, other.events_per_op),
        )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_scenarios(rows: list[ScenarioRow], path) -> None:
    with open(path, "w", newline="") as f:
        f.write(SCENARIO_SCHEMA + "\n")
        writer = csv.writer(f)
        writer.writerow(SCENARIO_COLUMNS)
        for r in rows:
            writer.writerow([
                r.scenario, r.structure, r.key_range, r.dist,
                _fmt(r.update_pct), r.threads, r.layout,
                _fmt(r.predicted_ops_s), _fmt(r.sim_ops_s), _fmt(r.measured_ops_s),
                _fmt(r.quad_a), _fmt(r.quad_b), _fmt(r.events_per_op),
            ])


def read_scenarios(path) -> list[ScenarioRow]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != SCENARIO_SCHEMA:
        raise SchemaError(f"{path}: missing or mismatched schema header "
                          f"(expected {SCENARIO_SCHEMA!r})")
    reader = csv.DictReader(text[1:])
    missing = set(SCENARIO_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise SchemaError(f"{path}: missing columns {sorted(missing)}")

    def num(row, col):
        raw = row[col].strip()
        return float(raw) if raw else None

    out = []
    for row in reader:
        out.append(ScenarioRow(
            row["scenario"], row["structure"], int(row["R"]), row["dist"],
            float(row["update_pct"]), int(row["threads"]), row["layout"],
            num(row, "predicted_ops_s"), num(row, "sim_ops_s"),
            num(row, "measured_ops_s"), num(row, "A"), num(row, "Bq"),
            num(row, "events_per_op"),
        ))
    return out


def merge_scenarios(groups: list[list[ScenarioRow]]) -> list[ScenarioRow]:
    merged: dict[tuple, ScenarioRow] = {}
    order: list[tuple] = []
    for rows in groups:
        for row in rows:
            k = row.key()
            if k in merged:
                merged[k] = merged[k].merged_with(row)
            else:
                merged[k] = row
                order.append(k)
    return [merged[k] for k in order]


@dataclass
class ErrorSummary:
    pairs: int
    quantiles: dict[str, float] = field(default_factory=dict)

    def describe(self, name: str) -> str:
        qs = ", ".join(f"{k}={v:.3%}" for k, v in self.quantiles.items())
        return f"{name}: {self.pairs} pairs; |rel err| {qs}" if self.pairs else \
            f"{name}: no overlapping rows"


def relative_errors(rows: list[ScenarioRow], reference: str) -> tuple[list, ErrorSummary]:
    """Per-row relative error of the prediction against a result column."""
    import numpy as np

    pairs = []
    for r in rows:
        ref = getattr(r, reference)
        if r.predicted_ops_s is not None and ref:
            pairs.append((r, (r.predicted_ops_s - ref) / ref))
    if not pairs:
        return [], ErrorSummary(0)
    errs = np.abs([e for _, e in pairs])
    summary = ErrorSummary(len(pairs), {
        "p50": float(np.quantile(errs, 0.5)),
        "p90": float(np.quantile(errs, 0.9)),
        "max": float(errs.max()),
    })
    return pairs, summary


def write_gaps(gaps_by_key: dict[int, "list[float]"], path) -> None:
    with open(path, "w", newline="") as f:
        f.write(GAPS_SCHEMA + "\n")
        writer = csv.writer(f)
        writer.writerow(["key", "gap_cycles"])
        for key, gaps in sorted(gaps_by_key.items()):
            for g in gaps:
                writer.writerow([key, f"{g:.6g}"])


def read_gaps(path) -> dict[int, list[float]]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != GAPS_SCHEMA:
        raise SchemaError(f"{path}: missing or mismatched schema header")
    reader = csv.DictReader(text[1:])
    out: dict[int, list[float]] = {}
    for row in reader:
        out.setdefault(int(row["key"]), []).append(float(row["gap_cycles"]))
    return out


def write_poisson_stats(stats, path) -> None:
    with open(path, "w", newline="") as f:
        f.write(POISSON_SCHEMA + "\n")
        writer = csv.writer(f)
        writer.writerow(["key", "n_samples", "mean_gap", "ks_stat", "p_value"])
        for s in stats:
            writer.writerow([s.key, len(s.samples), _fmt(s.mean_gap),
                             _fmt(s.ks_stat), _fmt(s.p_value)])
