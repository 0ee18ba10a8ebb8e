"""
Datasheet-style reports, comparison tables and exports.

A :class:`DeviceReport` only accepts metric values together with the
measurement set they came from; invalid sets are recorded in the validity
section and their metrics are dropped, so an invalidated test can never
reach a numeric cell.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import MetricAbsentEverywhere, ValidationError
from .metrics import MeasurementSet, MetricKind, MetricResult, metric_from_set

ABSENT = "absent"


@dataclass
class DeviceReport:
    device: str
    label: str | None = None
    metrics: list[MetricResult] = field(default_factory=list)
    validity: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def add_set(self, mset: MeasurementSet, metrics: Iterable[MetricResult] = ()) -> None:
        self.validity.append(
            {
                "procedure": mset.procedure,
                "valid": mset.valid,
                "reason": mset.invalidation_reason,
                "config_hash": mset.provenance.get("config_hash"),
            }
        )
        if mset.valid:
            self.metrics.extend(metrics)

    def metric(self, kind: MetricKind) -> MetricResult | None:
        for m in self.metrics:
            if m.kind is kind:
                return m
        return None

    @property
    def all_valid(self) -> bool:
        return all(v["valid"] for v in self.validity)

    def to_dict(self) -> dict:
        return {
            "device": self.device,
            "label": self.label,
            "metrics": [m.to_dict() for m in self.metrics],
            "validity": self.validity,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DeviceReport":
        return cls(
            device=d["device"],
            label=d.get("label"),
            metrics=[MetricResult.from_dict(m) for m in d.get("metrics", [])],
            validity=[dict(v) for v in d.get("validity", [])],
            config=dict(d.get("config", {})),
        )


def standard_metrics(mset: MeasurementSet) -> list[MetricResult]:
    """Metrics that follow directly from a set's procedure and stored weights."""
    if not mset.valid:
        return []
    if mset.procedure == "peak":
        return [metric_from_set(mset, MetricKind.ECR)]
    if mset.procedure == "variable_load":
        out = [metric_from_set(mset, MetricKind.EER_VL)]
        if mset.weights is not None and mset.weights.reduced_load_fraction == 0.5:
            out.append(metric_from_set(mset, MetricKind.TEEER))
            out.append(metric_from_set(mset, MetricKind.TEER_ATIS))
        return out
    if mset.procedure == "extended_idle":
        return [metric_from_set(mset, MetricKind.EER_EX)]
    return []


@dataclass
class ComparisonRow:
    device: str
    label: str | None
    value: float | None
    note: str = ""


@dataclass
class ComparisonTable:
    kind: MetricKind
    rows: list[ComparisonRow] = field(default_factory=list)

    @property
    def units(self) -> str:
        return self.kind.units

    @property
    def header(self) -> list[str]:
        return ["device", "label", f"{self.kind.value} ({self.units})", "leader", "note"]

    def leader(self) -> int | None:
        """Index of the best row (lowest ECR, highest efficiency)."""
        present = [(i, r.value) for i, r in enumerate(self.rows) if r.value is not None]
        if not present:
            return None
        pick = max if self.kind.higher_is_better else min
        return pick(present, key=lambda iv: iv[1])[0]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "units": self.units,
            "higher_is_better": self.kind.higher_is_better,
            "rows": [
                {"device": r.device, "label": r.label, "value": r.value, "note": r.note}
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ComparisonTable":
        kind = MetricKind(d["kind"])
        if d.get("units", kind.units) != kind.units:
            raise ValidationError("table units do not match metric kind")
        rows = [
            ComparisonRow(r["device"], r.get("label"), r.get("value"), r.get("note", ""))
            for r in d.get("rows", [])
        ]
        return cls(kind, rows)

    def render_text(self) -> str:
        leader = self.leader()
        cells = [self.header]
        for i, r in enumerate(self.rows):
            value = ABSENT if r.value is None else format_sig(r.value)
            cells.append([r.device, r.label or "", value, "*" if i == leader else "", r.note])
        widths = [max(len(row[c]) for row in cells) for c in range(len(cells[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in cells]
        return "\n".join(lines) + "\n"


def format_sig(value: float, digits: int = 4) -> str:
    """Fixed significant digits, keeping trailing zeros (``14`` -> ``14.00``)."""
    if value == 0 or not math.isfinite(value):
        return f"{value:.{digits - 1}f}" if value == 0 else str(value)
    decimals = digits - 1 - math.floor(math.log10(abs(value)))
    rounded = round(value, decimals)
    # rounding can carry into a new leading digit (9.9996 -> 10.00)
    decimals = digits - 1 - math.floor(math.log10(abs(rounded)))
    if decimals <= 0:
        return f"{round(value, decimals):.0f}"
    return f"{value:.{decimals}f}"


def render_comparison(reports: Sequence[DeviceReport], metric: MetricKind) -> ComparisonTable:
    table = ComparisonTable(metric)
    for rep in reports:
        m = rep.metric(metric)
        notes = [f"{v['procedure']}: {v['reason']}" for v in rep.validity if not v["valid"]]
        table.rows.append(
            ComparisonRow(rep.device, rep.label, None if m is None else m.value, "; ".join(notes))
        )
    if all(r.value is None for r in table.rows):
        raise MetricAbsentEverywhere(f"no report carries {metric.value}")
    return table


def canonical_json(obj) -> bytes:
    data = obj.to_dict() if hasattr(obj, "to_dict") else obj
    return (json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode("utf-8")


def export(obj, fmt: str = "json") -> bytes:
    """Serialise a report, table, measurement set or metric result."""
    if fmt == "json":
        return canonical_json(obj)
    if fmt != "csv":
        raise ValidationError(f"unknown export format {fmt!r}")
    if isinstance(obj, ComparisonTable):
        leader = obj.leader()
        return _csv_bytes(
            obj.header,
            (
                [r.device, r.label, r.value, "*" if i == leader else "", r.note]
                for i, r in enumerate(obj.rows)
            ),
        )
    if isinstance(obj, DeviceReport):
        rows = [[obj.device, m.kind.value, m.value, m.units] for m in obj.metrics]
        return _csv_bytes(["device", "kind", "value", "units"], rows)
    if isinstance(obj, MetricResult):
        return _csv_bytes(["kind", "value", "units"], [[obj.kind.value, obj.value, obj.units]])
    if isinstance(obj, MeasurementSet):
        header = ["phase", "load_fraction", "offered_gbps", "delivered_gbps", "power_w",
                  "duration_s", "packet_size_bytes"]
        rows = [
            [label, s.load_fraction, s.offered, s.delivered, s.power, s.duration_s,
             s.packet_size_bytes]
            for label, samples in obj.phases.items()
            for s in samples
        ]
        return _csv_bytes(header, rows)
    raise ValidationError(f"cannot export {type(obj).__name__} as CSV")


def parse_json(data: bytes | str, cls=None):
    """Inverse of JSON export; ``cls`` selects the type to rebuild."""
    d = json.loads(data)
    return d if cls is None else cls.from_dict(d)


def report_filename(device: str, procedure: str, confighash: str) -> str:
    safe = "".join(c if c.isalnum() or c in "-." else "-" for c in device)
    return f"{safe}_{procedure}_{confighash}.json"
