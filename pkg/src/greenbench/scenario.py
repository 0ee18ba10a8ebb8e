"""
Scenario documents: which device, which procedure, which parameters and seeds.

Scenario schema (JSON)::

    {
      "device": "table2_router.json",        # path, relative to the scenario
                                              # file or the fixture directory
      "procedure": "peak" | "variable_load" | "extended_idle" | "full_suite",
      "parameters": {...},                    # see the _plan builders below
      "seeds": {"device": 7, "orchestrator": 42},
      "label": "2002"                         # optional, shown in comparisons
    }
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .device import Device, DeviceModel
from .errors import GreenbenchError, ValidationError
from .metrics import MeasurementSet, PacketSizeWeights, WeightProfile
from .orchestrator import (
    ExTestPlan,
    NdrSearchConfig,
    ProbeConfig,
    VlTestPlan,
    config_hash,
    default_packet_size,
    find_ndr,
    run_extended_idle_test,
    run_peak,
    run_peak_suite,
    run_variable_load_test,
    warmup_until_stable,
)
from .reporting import DeviceReport, canonical_json, report_filename, standard_metrics

PROCEDURES = ("peak", "variable_load", "extended_idle", "full_suite")
FIXTURES_ENV = "GREENBENCH_FIXTURES"


def fixture_dir() -> Path:
    override = os.environ.get(FIXTURES_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("greenbench") / "fixtures"))


def load_json(path: str | os.PathLike) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def resolve(path: str, base: Path | None = None) -> Path:
    """Find ``path`` as given, next to ``base``, or in the fixture directory."""
    candidates = [Path(path)]
    if base is not None:
        candidates.append(base / path)
    candidates.append(fixture_dir() / path)
    if not path.endswith(".json"):
        candidates.append(fixture_dir() / f"{path}.json")
    for c in candidates:
        if c.is_file():
            return c
    raise ValidationError(f"{path}: file not found")


def load_device(path: str | os.PathLike, base: Path | None = None) -> DeviceModel:
    p = resolve(str(path), base)
    try:
        return DeviceModel.from_dict(load_json(p))
    except ValidationError as exc:
        if str(exc).startswith(str(p)):
            raise
        raise ValidationError(f"{p}: {exc}") from None


@dataclass
class Scenario:
    device: DeviceModel
    procedure: str
    parameters: dict = field(default_factory=dict)
    device_seed: int | None = None
    orchestrator_seed: int = 0
    label: str | None = None
    source: str | None = None

    def __post_init__(self):
        if self.procedure not in PROCEDURES:
            raise ValidationError(f"unknown procedure {self.procedure!r}; expected one of {PROCEDURES}")
        if not 0 <= self.orchestrator_seed < 2**64:
            raise ValidationError("orchestrator seed must be a 64-bit unsigned integer")
        if self.device_seed is not None:
            self.device = dataclasses.replace(self.device, seed=int(self.device_seed))
        # build the plans eagerly so validation errors surface before running
        _plans(self)

    @property
    def config_hash(self) -> str:
        return config_hash(
            self.device.to_dict(), self.procedure, self.parameters,
            {"device": self.device.seed, "orchestrator": self.orchestrator_seed},
        )


def load_scenario(path: str | os.PathLike) -> Scenario:
    path = resolve(str(path))
    doc = load_json(path)
    try:
        seeds = doc.get("seeds", {})
        return Scenario(
            device=load_device(doc["device"], path.parent),
            procedure=doc["procedure"],
            parameters=dict(doc.get("parameters", {})),
            device_seed=seeds.get("device"),
            orchestrator_seed=int(seeds.get("orchestrator", 0)),
            label=doc.get("label"),
            source=str(path),
        )
    except KeyError as exc:
        raise ValidationError(f"{path}: missing field {exc.args[0]!r}") from None
    except ValidationError as exc:
        msg = str(exc)
        raise ValidationError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from None


def _weights(d: Mapping | None) -> WeightProfile:
    if d is None:
        raise ValidationError("a weight profile is required (no default is assumed)")
    return WeightProfile.from_dict(d)


def _vl_plan(p: Mapping) -> VlTestPlan:
    probe = p.get("probe", {})
    return VlTestPlan(
        weights=_weights(p.get("weights")),
        phase_duration_s=p.get("phase_duration_s", (60.0, 60.0, 60.0)),
        probe=ProbeConfig(
            enabled=bool(probe.get("enabled", True)),
            response_window_s=float(probe.get("response_window_s", 1.0)),
            throughput_tolerance=float(probe.get("throughput_tolerance", 0.01)),
        ),
        warmup_required=bool(p.get("warmup_required", True)),
        packet_size_bytes=p.get("packet_size_bytes"),
    )


def _ex_plan(p: Mapping) -> ExTestPlan:
    return ExTestPlan(
        weights=_weights(p.get("weights")),
        state_schedule=tuple(tuple(x) for x in p["state_schedule"]),
        packet_size_bytes=p.get("packet_size_bytes"),
    )


def _plans(scn: Scenario) -> dict:
    p = scn.parameters
    if scn.procedure == "variable_load":
        return {"vl": _vl_plan(p)}
    if scn.procedure == "extended_idle":
        return {"ex": _ex_plan(p)}
    if scn.procedure == "full_suite":
        plans = {}
        sizes = p.get("packet_size_weights")
        if sizes is None:
            sizes = [[s, 1.0 / len(scn.device.ndr_by_packet_size)] for s in scn.device.ndr_by_packet_size]
        plans["sizes"] = PacketSizeWeights(tuple(tuple(x) for x in sizes))
        if "variable_load" in p:
            plans["vl"] = _vl_plan(p["variable_load"])
        if "extended_idle" in p:
            plans["ex"] = _ex_plan(p["extended_idle"])
        return plans
    return {}


@dataclass
class Outcome:
    scenario: Scenario
    sets: list[MeasurementSet]
    report: DeviceReport

    @property
    def valid(self) -> bool:
        return all(s.valid for s in self.sets)


def _warm(device: Device, p: Mapping) -> None:
    if device.warm or p.get("skip_warmup", False):
        return
    w = p.get("warmup", {})
    warmup_until_stable(
        device,
        window_samples=int(w.get("window_samples", 30)),
        stability_tol=float(w.get("stability_tol", 0.005)),
        timeout_s=float(w.get("timeout_s", 3600.0)),
        reading_interval_s=float(w.get("reading_interval_s", 10.0)),
    )


def _ndr_for(device: Device, p: Mapping, size: int) -> float:
    if "ndr_gbps" in p:
        return float(p["ndr_gbps"])
    cfg = NdrSearchConfig(
        size,
        resolution=float(p.get("resolution", 0.001)),
        loss_tolerance=float(p.get("loss_tolerance", 0.0)),
        trial_duration_s=float(p.get("trial_duration_s", 10.0)),
    )
    return find_ndr(device, cfg)


def run_scenario(scn: Scenario, orchestrator_seed: int | None = None) -> Outcome:
    if orchestrator_seed is not None:
        scn = dataclasses.replace(scn, orchestrator_seed=orchestrator_seed, device_seed=None)
    device = Device(scn.device)
    p = scn.parameters
    plans = _plans(scn)
    seed = scn.orchestrator_seed
    _warm(device, p)
    report = DeviceReport(
        scn.device.name,
        label=scn.label,
        config={
            "procedure": scn.procedure,
            "config_hash": scn.config_hash,
            "seeds": {"device": scn.device.seed, "orchestrator": seed},
            "parameters": p,
        },
    )
    sets = []

    if scn.procedure == "peak":
        size = int(p.get("packet_size_bytes", default_packet_size(device)))
        cfg = NdrSearchConfig(
            size,
            resolution=float(p.get("resolution", 0.001)),
            loss_tolerance=float(p.get("loss_tolerance", 0.0)),
            trial_duration_s=float(p.get("trial_duration_s", 10.0)),
        )
        mset = run_peak(device, size, float(p.get("duration_s", 60.0)), cfg)
        sets.append(mset)
        report.add_set(mset, standard_metrics(mset))

    elif scn.procedure == "variable_load":
        plan = plans["vl"]
        size = plan.packet_size_bytes or default_packet_size(device)
        mset = run_variable_load_test(device, _ndr_for(device, p, size), plan, seed)
        sets.append(mset)
        report.add_set(mset, standard_metrics(mset))

    elif scn.procedure == "extended_idle":
        plan = plans["ex"]
        size = plan.packet_size_bytes or default_packet_size(device)
        mset = run_extended_idle_test(device, _ndr_for(device, p, size), plan)
        sets.append(mset)
        report.add_set(mset, standard_metrics(mset))

    else:
        weights = plans["sizes"]
        suite = run_peak_suite(
            device,
            list(device.model.ndr_by_packet_size),
            weights,
            duration_s=float(p.get("duration_s", 60.0)),
            resolution=float(p.get("resolution", 0.001)),
            trial_duration_s=float(p.get("trial_duration_s", 10.0)),
        )
        sets.append(suite.measurements)
        report.add_set(suite.measurements, [suite.weighted_ecr, suite.weighted_peak])
        if "vl" in plans:
            plan = plans["vl"]
            size = plan.packet_size_bytes or default_packet_size(device)
            mset = run_variable_load_test(device, suite.ndr[size], plan, seed)
            sets.append(mset)
            report.add_set(mset, standard_metrics(mset))
        if "ex" in plans:
            plan = plans["ex"]
            size = plan.packet_size_bytes or default_packet_size(device)
            mset = run_extended_idle_test(device, suite.ndr[size], plan)
            sets.append(mset)
            report.add_set(mset, standard_metrics(mset))

    return Outcome(scn, sets, report)


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_outcome(outcome: Outcome, out_dir: Path) -> tuple[Path, list[Path]]:
    """Write the report and every measurement set; return their paths."""
    scn = outcome.scenario
    h = scn.config_hash
    report_path = out_dir / report_filename(scn.device.name, scn.procedure, h)
    set_paths = []
    for mset in outcome.sets:
        p = out_dir / "measurements" / report_filename(scn.device.name, mset.procedure, h)
        atomic_write(p, canonical_json(mset))
        set_paths.append(p)
    atomic_write(report_path, canonical_json(outcome.report))
    return report_path, set_paths


def detect_kind(doc: Mapping) -> str:
    if "procedure" in doc and "device" in doc:
        return "scenario"
    if "states" in doc:
        return "device"
    if "samples" in doc:
        return "measurement"
    if "metrics" in doc and "validity" in doc:
        return "report"
    raise ValidationError("unrecognised document: not a device, scenario, measurement or report")


def validate_file(path: str | os.PathLike) -> str:
    """Parse and check a document of any supported kind; return its kind."""
    path = Path(path)
    doc = load_json(path)
    kind = detect_kind(doc)
    try:
        if kind == "scenario":
            load_scenario(path)
        elif kind == "device":
            DeviceModel.from_dict(doc)
        elif kind == "measurement":
            MeasurementSet.from_dict(doc)
        else:
            DeviceReport.from_dict(doc)
    except ValidationError as exc:
        msg = str(exc)
        raise ValidationError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed {kind} document ({exc})") from None
    except GreenbenchError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return kind
