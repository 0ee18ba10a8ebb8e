"""
Test procedures run against a device under test.

All procedures drive a :class:`~greenbench.device.Device` through
``offer_load`` and the clock; nothing here peeks at the device's internal
state, so the same code would drive a hardware adapter exposing those calls.
Invalidated tests come back as data (``MeasurementSet.valid = False``),
never as exceptions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .device import Device
from .errors import MissingPacketSize, NoPassingRate, UnexpectedLoss, UnknownState, ValidationError, WarmupTimeout
from .metrics import (
    MeasurementSample,
    MeasurementSet,
    MetricResult,
    PacketSizeWeights,
    WeightProfile,
    compute_ecr,
    weighted_peak_throughput,
)

RETURN_TO_FULL_VIOLATION = "return-to-full-capacity violation"


@dataclass(frozen=True)
class NdrSearchConfig:
    packet_size_bytes: int
    resolution: float = 0.001
    loss_tolerance: float = 0.0
    trial_duration_s: float = 10.0

    def __post_init__(self):
        if not 0 < self.resolution < 1:
            raise ValidationError("resolution must lie in (0, 1)")
        if not 0 <= self.loss_tolerance < 1:
            raise ValidationError("loss_tolerance must lie in [0, 1)")
        if not self.trial_duration_s > 0:
            raise ValidationError("trial_duration_s must be > 0")


@dataclass(frozen=True)
class ProbeConfig:
    enabled: bool = True
    response_window_s: float = 1.0
    throughput_tolerance: float = 0.01

    def __post_init__(self):
        if not 0 < self.throughput_tolerance < 1:
            raise ValidationError("probe throughput_tolerance must lie in (0, 1)")
        if not self.response_window_s > 0:
            raise ValidationError("probe response_window_s must be > 0")

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "response_window_s": self.response_window_s,
            "throughput_tolerance": self.throughput_tolerance,
        }


@dataclass(frozen=True)
class VlTestPlan:
    """Full, reduced and idle phases, always in that order."""

    weights: WeightProfile
    phase_duration_s: tuple[float, float, float] = (60.0, 60.0, 60.0)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    warmup_required: bool = True
    packet_size_bytes: int | None = None

    def __post_init__(self):
        durations = self.phase_duration_s
        if isinstance(durations, (int, float)):
            durations = (float(durations),) * 3
        durations = tuple(float(d) for d in durations)
        object.__setattr__(self, "phase_duration_s", durations)
        if len(durations) != 3 or any(d <= 0 for d in durations):
            raise ValidationError("phase_duration_s needs three positive durations")
        if self.probe.enabled and min(durations[1:]) <= self.probe.response_window_s:
            raise ValidationError("non-full phases must outlast the probe response window")

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.to_dict(),
            "phase_duration_s": list(self.phase_duration_s),
            "probe": self.probe.to_dict(),
            "warmup_required": self.warmup_required,
            "packet_size_bytes": self.packet_size_bytes,
        }


@dataclass(frozen=True)
class ExTestPlan:
    """Three phases ``(state_id, phase_duration_s, load_fraction_of_state_capacity)``."""

    weights: WeightProfile
    state_schedule: tuple[tuple[int, float, float], ...]
    packet_size_bytes: int | None = None

    def __post_init__(self):
        sched = tuple((int(s), float(d), float(f)) for s, d, f in self.state_schedule)
        object.__setattr__(self, "state_schedule", sched)
        if len(sched) != 3:
            raise ValidationError("extended-idle plan needs exactly three phases")
        if sched[0][0] != 0:
            raise ValidationError("the first extended-idle phase must be state 0")
        for sid, dur, frac in sched:
            if dur <= 0:
                raise ValidationError(f"phase for state {sid} needs a positive duration")
            if not 0 <= frac <= 1:
                raise ValidationError(f"load fraction for state {sid} outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.to_dict(),
            "state_schedule": [list(p) for p in self.state_schedule],
            "packet_size_bytes": self.packet_size_bytes,
        }


@dataclass
class PeakSuiteResult:
    ndr: dict[int, float]
    peak_power: dict[int, float]
    ecr: dict[int, MetricResult]
    weighted_peak: MetricResult
    weighted_ecr: MetricResult
    measurements: MeasurementSet


def config_hash(*parts) -> str:
    """Short stable digest of JSON-serialisable configuration parts."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def default_packet_size(device: Device) -> int:
    return max(device.model.ndr_by_packet_size)


def warmup_until_stable(
    device: Device,
    window_samples: int = 30,
    stability_tol: float = 0.005,
    timeout_s: float = 3600.0,
    reading_interval_s: float = 10.0,
    packet_size: int | None = None,
) -> float:
    """Run the device at full load until power readings settle.

    Each reading is the average power over ``reading_interval_s``. Returns
    the simulated time at which the last ``window_samples`` readings span a
    relative range ``(max - min) / max`` below ``stability_tol``.
    """
    if window_samples < 2:
        raise ValidationError("window_samples must be >= 2")
    size = default_packet_size(device) if packet_size is None else packet_size
    load = min(device.model.ndr(size), device.model.line_rate)
    start = device.now_s
    readings: list[float] = []
    while device.now_s - start < timeout_s:
        readings.append(device.offer_load(load, size, reading_interval_s).power)
        window = readings[-window_samples:]
        if len(window) == window_samples:
            hi = max(window)
            if hi == 0 or (hi - min(window)) / hi < stability_tol:
                device.warm = True
                return device.now_s
    raise WarmupTimeout(
        f"power did not settle within {stability_tol:.3%} over {window_samples} readings "
        f"in {timeout_s} s"
    )


def _trial_passes(device: Device, offered: float, cfg: NdrSearchConfig) -> bool:
    sample = device.offer_load(offered, cfg.packet_size_bytes, cfg.trial_duration_s)
    return sample.loss_fraction <= cfg.loss_tolerance


def find_ndr(device: Device, cfg: NdrSearchConfig) -> float:
    """Bisect the non-drop rate over ``[0, line_rate]``.

    Returns the highest passing offered load once the bracket is narrower
    than ``resolution * line_rate``. Never overstates throughput.
    """
    line_rate = device.model.line_rate
    if _trial_passes(device, line_rate, cfg):
        return line_rate
    lo, hi = 0.0, line_rate
    width = cfg.resolution * line_rate
    while hi - lo >= width:
        mid = 0.5 * (lo + hi)
        if _trial_passes(device, mid, cfg):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        raise NoPassingRate(
            f"{device.model.name} drops traffic even at {hi:.6g} Gbps "
            f"({cfg.packet_size_bytes}-byte packets)"
        )
    return lo


def _peak_sample(
    device: Device, ndr: float, packet_size: int, duration_s: float, tolerance: float
) -> MeasurementSample:
    if not duration_s > 0:
        raise ValidationError("duration_s must be > 0")
    sample = device.offer_load(ndr, packet_size, duration_s)
    if sample.delivered < (1.0 - tolerance) * ndr:
        raise UnexpectedLoss(
            f"delivered {sample.delivered:.6g} Gbps of {ndr:.6g} Gbps NDR; the NDR is stale"
        )
    return sample


def measure_peak_energy(
    device: Device,
    ndr: float,
    packet_size: int,
    duration_s: float = 60.0,
    tolerance: float = 0.01,
) -> float:
    """Average watts while offering exactly ``ndr`` for ``duration_s``."""
    return _peak_sample(device, ndr, packet_size, duration_s, tolerance).power


def _provenance(device: Device, procedure: str, plan: dict, orchestrator_seed, start: float) -> dict:
    return {
        "device": device.model.name,
        "procedure": procedure,
        "config_hash": config_hash(device.model.to_dict(), procedure, plan, orchestrator_seed),
        "seeds": {"device": device.model.seed, "orchestrator": orchestrator_seed},
        "start_s": start,
        "end_s": device.now_s,
    }


def run_peak(
    device: Device,
    packet_size: int | None = None,
    duration_s: float = 60.0,
    ndr_cfg: NdrSearchConfig | None = None,
) -> MeasurementSet:
    """Two runs at one packet size: NDR search, then sustained peak power."""
    size = default_packet_size(device) if packet_size is None else packet_size
    cfg = ndr_cfg or NdrSearchConfig(size)
    start = device.now_s
    ndr = find_ndr(device, cfg)
    sample = _peak_sample(device, ndr, size, duration_s, 0.01)
    mset = MeasurementSet("peak", ndr, tags=[] if device.warm else ["warmup_skipped"])
    mset.add("full", sample)
    plan = {"packet_size_bytes": size, "duration_s": duration_s, "resolution": cfg.resolution,
            "loss_tolerance": cfg.loss_tolerance, "trial_duration_s": cfg.trial_duration_s}
    mset.provenance = _provenance(device, "peak", plan, None, start)
    return mset


def run_peak_suite(
    device: Device,
    packet_sizes,
    weights: PacketSizeWeights,
    duration_s: float = 60.0,
    resolution: float = 0.001,
    trial_duration_s: float = 10.0,
) -> PeakSuiteResult:
    """NDR and peak power at each packet size plus the size-weighted view.

    The weighted ECR divides the same weighted combination of per-size
    peak powers by the weighted peak throughput.
    """
    start = device.now_s
    sizes = sorted(int(s) for s in packet_sizes)
    for size, _ in weights.entries:
        if size not in sizes:
            raise MissingPacketSize(size)
    ndr, power, ecr = {}, {}, {}
    mset = MeasurementSet("peak_suite", 0.0, tags=[] if device.warm else ["warmup_skipped"])
    for size in sizes:
        cfg = NdrSearchConfig(size, resolution=resolution, trial_duration_s=trial_duration_s)
        ndr[size] = find_ndr(device, cfg)
        sample = _peak_sample(device, ndr[size], size, duration_s, 0.01)
        mset.add(f"full@{size}", sample)
        power[size] = sample.power
        ecr[size] = compute_ecr(sample.power, ndr[size])
    weighted = weighted_peak_throughput(ndr, weights)
    weighted_power = math.fsum(w * power[s] for s, w in weights.entries)
    weighted_ecr = compute_ecr(weighted_power, weighted.value)
    mset.ndr = weighted.value
    plan = {"packet_sizes": sizes, "weights": weights.to_list(), "duration_s": duration_s,
            "resolution": resolution, "trial_duration_s": trial_duration_s}
    mset.provenance = _provenance(device, "peak_suite", plan, None, start)
    return PeakSuiteResult(ndr, power, ecr, weighted, weighted_ecr, mset)


def _probe_offset(rng: np.random.Generator, device: Device, phase_s: float, window_s: float) -> float:
    # uniform instant, snapped to the step grid, leaving room for the window
    step = device.clock.step_s
    slots = device.clock.steps_for(phase_s - window_s)
    return int(rng.integers(0, slots + 1)) * step


def _run_phase(
    device: Device,
    mset: MeasurementSet,
    label: str,
    offered: float,
    ndr: float,
    size: int,
    duration_s: float,
    probe: ProbeConfig,
    probe_at: float | None,
) -> dict | None:
    if probe_at is None:
        mset.add(label, device.offer_load(offered, size, duration_s))
        return None
    window = probe.response_window_s
    before = probe_at
    after = duration_s - probe_at - window
    if before > 1e-9:
        mset.add(label, device.offer_load(offered, size, before))
    t_probe = device.now_s
    burst = device.offer_load(ndr, size, window)
    mset.add("probe", burst)
    if after > 1e-9:
        mset.add(label, device.offer_load(offered, size, after))
    passed = burst.delivered >= (1.0 - probe.throughput_tolerance) * ndr
    return {"phase": label, "at_s": t_probe, "delivered": burst.delivered, "passed": passed}


def run_variable_load_test(
    device: Device, ndr: float, plan: VlTestPlan, orchestrator_seed: int = 0
) -> MeasurementSet:
    """Full, reduced and idle phases, with a full-NDR probe in each non-full phase.

    A probe that cannot get ``(1 - tolerance) * ndr`` through within its
    response window invalidates the whole set.
    """
    if not ndr > 0:
        raise ValidationError("ndr must be > 0")
    size = default_packet_size(device) if plan.packet_size_bytes is None else plan.packet_size_bytes
    tags = []
    if plan.warmup_required and not device.warm:
        warmup_until_stable(device, packet_size=size)
    elif not device.warm:
        tags.append("warmup_skipped")
    start = device.now_s
    rng = np.random.default_rng(orchestrator_seed)
    d_full, d_red, d_idle = plan.phase_duration_s
    probe = plan.probe
    offsets = [None, None]
    if probe.enabled:
        offsets = [
            _probe_offset(rng, device, d_red, probe.response_window_s),
            _probe_offset(rng, device, d_idle, probe.response_window_s),
        ]
    mset = MeasurementSet("variable_load", ndr, weights=plan.weights, tags=tags)
    mset.add("full", device.offer_load(ndr, size, d_full))
    reduced = plan.weights.reduced_load_fraction * ndr
    probes = [
        _run_phase(device, mset, "reduced", reduced, ndr, size, d_red, probe, offsets[0]),
        _run_phase(device, mset, "idle", 0.0, ndr, size, d_idle, probe, offsets[1]),
    ]
    mset.provenance = _provenance(device, "variable_load", plan.to_dict(), orchestrator_seed, start)
    probes = [p for p in probes if p is not None]
    if probes:
        mset.provenance["probes"] = probes
    if any(not p["passed"] for p in probes):
        mset.invalidate(RETURN_TO_FULL_VIOLATION)
    return mset


def run_extended_idle_test(device: Device, ndr: float, plan: ExTestPlan) -> MeasurementSet:
    """Hold each scheduled power state at its load; transitions are not averaged."""
    if not ndr > 0:
        raise ValidationError("ndr must be > 0")
    states = {s.id: s for s in device.model.states}
    for sid, _, _ in plan.state_schedule:
        if sid not in states:
            raise UnknownState(sid)
    size = default_packet_size(device) if plan.packet_size_bytes is None else plan.packet_size_bytes
    start = device.now_s
    mset = MeasurementSet(
        "extended_idle", ndr, weights=plan.weights, tags=[] if device.warm else ["warmup_skipped"]
    )
    transitions = []
    for sid, duration, frac in plan.state_schedule:
        device.set_power_state(sid)
        waited = device.wait_for_transition()
        transitions.append({"state": sid, "transition_s": waited})
        offered = frac * states[sid].capacity_fraction * ndr
        mset.add(f"state-{sid}", device.offer_load(offered, size, duration))
    device.set_power_state(0)
    device.wait_for_transition()
    mset.provenance = _provenance(device, "extended_idle", plan.to_dict(), None, start)
    mset.provenance["transitions"] = transitions
    return mset
