"""
Energy-efficiency metrics for packet network equipment.

Every function here is pure: throughput values are plain floats in Gbps,
power values plain floats in watts (time-averaged), and each call returns a
:class:`MetricResult` that carries its kind, units and the inputs used.

Metric families:

- peak: ECR (W/Gbps, lower is better) and a packet-size weighted peak
  throughput used as the ECR denominator for multi-size ratings
- variable load: TEEER (logarithmic, dimensionless), ATIS TEER (Gbps/W,
  structurally inflated above 1/ECR) and EER-VL (Gbps/W)
- extended idle: EER-EX (Gbps/W) over explicit power states
- allowance budgets: pass/fail ceiling from per-interface allowances
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .errors import (
    InvalidMeasurementSet,
    MissingPacketSize,
    NonPositivePower,
    ReducedExceedsFull,
    StateOrderViolation,
    UnknownInterfaceClass,
    ValidationError,
    ZeroThroughput,
)

WEIGHT_TOL = 1e-9


class MetricKind(str, Enum):
    ECR = "ECR"
    TEEER = "TEEER"
    TEER_ATIS = "TEER_ATIS"
    EER_VL = "EER_VL"
    EER_EX = "EER_EX"
    ALLOWANCE = "ALLOWANCE"
    WEIGHTED_PEAK = "WEIGHTED_PEAK"

    @property
    def units(self) -> str:
        return UNITS[self]

    @property
    def higher_is_better(self) -> bool:
        # ALLOWANCE is a ceiling and ECR a cost per unit of work
        return self not in (MetricKind.ECR, MetricKind.ALLOWANCE)


UNITS = {
    MetricKind.ECR: "W/Gbps",
    MetricKind.TEEER: "dimensionless",
    MetricKind.TEER_ATIS: "Gbps/W",
    MetricKind.EER_VL: "Gbps/W",
    MetricKind.EER_EX: "Gbps/W",
    MetricKind.ALLOWANCE: "W",
    MetricKind.WEIGHTED_PEAK: "Gbps",
}


def parse_kind(name: str) -> MetricKind:
    """Accept ``ecr``, ``eer_vl``, ``EER-VL`` and similar spellings."""
    key = name.strip().upper().replace("-", "_")
    if key == "TEER":
        key = "TEER_ATIS"
    try:
        return MetricKind(key)
    except ValueError:
        raise ValidationError(f"unknown metric kind {name!r}") from None


@dataclass(frozen=True)
class MetricResult:
    kind: MetricKind
    value: float
    inputs: dict = field(default_factory=dict, compare=False)

    @property
    def units(self) -> str:
        return self.kind.units

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "value": self.value,
            "units": self.units,
            "inputs": self.inputs,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricResult":
        kind = MetricKind(d["kind"])
        if "units" in d and d["units"] != kind.units:
            raise ValidationError(f"units {d['units']!r} do not match kind {kind.value}")
        return cls(kind, float(d["value"]), dict(d.get("inputs", {})))


@dataclass(frozen=True)
class WeightProfile:
    """Load-phase weights (alpha, beta, epsilon) summing to one.

    ``reduced_load_fraction`` is the share of NDR offered during the
    reduced phase of a variable-load run. It does not enter any formula.
    """

    alpha: float
    beta: float
    epsilon: float
    reduced_load_fraction: float = 0.3

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon"):
            w = getattr(self, name)
            if not (0.0 <= w <= 1.0) or math.isnan(w):
                raise ValidationError(f"weight {name}={w} outside [0, 1]")
        total = self.alpha + self.beta + self.epsilon
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {total!r}, expected 1")
        if not 0.0 < self.reduced_load_fraction < 1.0:
            raise ValidationError(
                f"reduced_load_fraction={self.reduced_load_fraction} outside (0, 1)"
            )

    @classmethod
    def verizon(cls) -> "WeightProfile":
        """The fixed TEEER profile: 0.35 idle, 0.4 half load, 0.25 full load."""
        return cls(0.35, 0.4, 0.25, reduced_load_fraction=0.5)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "reduced_load_fraction": self.reduced_load_fraction,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "WeightProfile":
        return cls(
            float(d["alpha"]),
            float(d["beta"]),
            float(d["epsilon"]),
            float(d.get("reduced_load_fraction", 0.3)),
        )


@dataclass(frozen=True)
class PacketSizeWeights:
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(s), float(w)) for s, w in self.entries))
        sizes = [s for s, _ in self.entries]
        if not sizes:
            raise ValidationError("packet size weights are empty")
        if any(s <= 0 for s in sizes):
            raise ValidationError("packet sizes must be positive")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValidationError("packet sizes must be strictly increasing")
        if any(not 0.0 <= w <= 1.0 for _, w in self.entries):
            raise ValidationError("packet size weights must lie in [0, 1]")
        total = sum(w for _, w in self.entries)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"packet size weights sum to {total!r}, expected 1")

    def to_list(self) -> list:
        return [[s, w] for s, w in self.entries]


@dataclass(frozen=True)
class AllowanceTable:
    entries: Mapping[str, float]

    def __post_init__(self):
        for name, watts in self.entries.items():
            if not watts > 0:
                raise ValidationError(f"allowance for {name!r} must be > 0, got {watts}")


@dataclass(frozen=True)
class MeasurementSample:
    load_fraction: float
    offered: float
    delivered: float
    power: float
    duration_s: float
    packet_size_bytes: int

    def __post_init__(self):
        if not 0.0 <= self.load_fraction <= 1.0:
            raise ValidationError(f"load_fraction {self.load_fraction} outside [0, 1]")
        if self.offered < 0 or self.delivered < 0:
            raise ValidationError("throughput must be non-negative")
        if self.delivered > self.offered:
            raise ValidationError("delivered throughput exceeds offered")
        if self.power < 0:
            raise ValidationError("power must be non-negative")
        if not self.duration_s > 0:
            raise ValidationError("duration_s must be > 0")
        if self.packet_size_bytes <= 0:
            raise ValidationError("packet_size_bytes must be positive")

    @property
    def loss_fraction(self) -> float:
        if self.offered == 0:
            return 0.0
        return (self.offered - self.delivered) / self.offered

    def to_dict(self) -> dict:
        return {
            "load_fraction": self.load_fraction,
            "offered": self.offered,
            "delivered": self.delivered,
            "power": self.power,
            "duration_s": self.duration_s,
            "packet_size_bytes": self.packet_size_bytes,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MeasurementSample":
        return cls(
            float(d["load_fraction"]),
            float(d["offered"]),
            float(d["delivered"]),
            float(d["power"]),
            float(d["duration_s"]),
            int(d["packet_size_bytes"]),
        )


def phase_average(samples: Sequence[MeasurementSample]) -> tuple[float, float]:
    """Duration-weighted (delivered Gbps, power W) over a run of samples."""
    total = sum(s.duration_s for s in samples)
    if total <= 0:
        raise ValidationError("phase has no samples")
    delivered = sum(s.delivered * s.duration_s for s in samples) / total
    power = sum(s.power * s.duration_s for s in samples) / total
    return delivered, power


@dataclass
class MeasurementSet:
    """Samples from one test procedure, grouped by phase label.

    Phase labels are ``full``, ``reduced``, ``idle`` for variable-load runs,
    ``state-<k>`` for extended-idle runs and ``full@<size>`` for peak runs.
    Probe bursts are kept under ``probe`` and never enter phase averages.
    """

    procedure: str
    ndr: float
    phases: dict[str, list[MeasurementSample]] = field(default_factory=dict)
    valid: bool = True
    invalidation_reason: str | None = None
    weights: WeightProfile | None = None
    tags: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.valid and self.invalidation_reason is not None:
            raise ValidationError("a valid measurement set cannot carry an invalidation reason")
        if not self.valid and not self.invalidation_reason:
            raise ValidationError("an invalid measurement set needs a reason")

    def invalidate(self, reason: str) -> None:
        self.valid = False
        self.invalidation_reason = reason

    def add(self, phase: str, sample: MeasurementSample) -> None:
        self.phases.setdefault(phase, []).append(sample)

    def phase(self, label: str) -> tuple[float, float]:
        if label not in self.phases:
            raise ValidationError(f"measurement set has no {label!r} phase")
        return phase_average(self.phases[label])

    def require_valid(self) -> None:
        if not self.valid:
            raise InvalidMeasurementSet(
                f"refusing to compute metrics on invalidated test: {self.invalidation_reason}"
            )

    def to_dict(self) -> dict:
        return {
            "procedure": self.procedure,
            "ndr": self.ndr,
            "valid": self.valid,
            "invalidation_reason": self.invalidation_reason,
            "weights": None if self.weights is None else self.weights.to_dict(),
            "tags": list(self.tags),
            "provenance": self.provenance,
            "samples": {
                label: [s.to_dict() for s in samples] for label, samples in self.phases.items()
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MeasurementSet":
        weights = d.get("weights")
        return cls(
            procedure=d["procedure"],
            ndr=float(d["ndr"]),
            phases={
                label: [MeasurementSample.from_dict(s) for s in samples]
                for label, samples in d.get("samples", {}).items()
            },
            valid=bool(d["valid"]),
            invalidation_reason=d.get("invalidation_reason"),
            weights=None if weights is None else WeightProfile.from_dict(weights),
            tags=list(d.get("tags", [])),
            provenance=dict(d.get("provenance", {})),
        )


def _check_throughput(t: float, name: str = "throughput") -> None:
    if t < 0 or math.isnan(t):
        raise ValidationError(f"{name} must be non-negative, got {t}")


def _check_power(e: float, name: str = "power") -> None:
    if e < 0 or math.isnan(e):
        raise ValidationError(f"{name} must be non-negative, got {e}")


def _positive_throughput(t: float) -> None:
    _check_throughput(t)
    if t == 0:
        raise ZeroThroughput("throughput is zero; the ratio is meaningless")


def compute_ecr(energy: float, throughput: float) -> MetricResult:
    """Energy Consumption Rating: average power over effective throughput, W/Gbps."""
    _check_power(energy, "energy")
    _positive_throughput(throughput)
    return MetricResult(
        MetricKind.ECR, energy / throughput, {"energy_w": energy, "throughput_gbps": throughput}
    )


def weighted_power(e_idle: float, e_half: float, e_full: float, weights: WeightProfile) -> float:
    # alpha binds to 0 % load, beta to 50 %, epsilon to 100 %
    for name, e in (("e_idle", e_idle), ("e_half", e_half), ("e_full", e_full)):
        _check_power(e, name)
    p = weights.alpha * e_idle + weights.beta * e_half + weights.epsilon * e_full
    if not p > 0:
        raise NonPositivePower(f"weighted power {p} is not positive")
    return p


def compute_teeer(
    e_idle: float, e_half: float, e_full: float, throughput: float, weights: WeightProfile
) -> MetricResult:
    """Verizon TEEER, ``-log10(P / T)`` with P in watts and T in Gbps."""
    _positive_throughput(throughput)
    p = weighted_power(e_idle, e_half, e_full, weights)
    return MetricResult(
        MetricKind.TEEER,
        -math.log10(p / throughput),
        {
            "e_idle_w": e_idle,
            "e_half_w": e_half,
            "e_full_w": e_full,
            "throughput_gbps": throughput,
            "weighted_power_w": p,
            "weights": weights.to_dict(),
        },
    )


def compute_teer_atis(
    e_idle: float, e_half: float, e_full: float, max_throughput: float, weights: WeightProfile
) -> MetricResult:
    """ATIS TEER: maximum throughput divided by weighted power.

    This is reproduced as published, so whenever the device draws less than
    full power in a weighted phase the value exceeds 1/ECR.
    """
    _check_throughput(max_throughput, "max_throughput")
    p = weighted_power(e_idle, e_half, e_full, weights)
    return MetricResult(
        MetricKind.TEER_ATIS,
        max_throughput / p,
        {
            "e_idle_w": e_idle,
            "e_half_w": e_half,
            "e_full_w": e_full,
            "max_throughput_gbps": max_throughput,
            "weighted_power_w": p,
            "weights": weights.to_dict(),
        },
    )


def compute_eer_vl(
    t_full: float,
    t_reduced: float,
    e_full: float,
    e_reduced: float,
    e_idle: float,
    weights: WeightProfile,
) -> MetricResult:
    """Variable-load efficiency over a full / reduced / idle cycle, Gbps/W.

    Idle draws power but forwards nothing, so it only appears in the
    denominator.
    """
    _check_throughput(t_full, "t_full")
    _check_throughput(t_reduced, "t_reduced")
    for name, e in (("e_full", e_full), ("e_reduced", e_reduced), ("e_idle", e_idle)):
        _check_power(e, name)
    if t_reduced > t_full:
        raise ReducedExceedsFull(f"t_reduced={t_reduced} exceeds t_full={t_full}")
    a, b, eps = weights.alpha, weights.beta, weights.epsilon
    den = a * e_full + b * e_reduced + eps * e_idle
    if not den > 0:
        raise NonPositivePower(f"weighted power {den} is not positive")
    return MetricResult(
        MetricKind.EER_VL,
        (a * t_full + b * t_reduced) / den,
        {
            "t_full_gbps": t_full,
            "t_reduced_gbps": t_reduced,
            "e_full_w": e_full,
            "e_reduced_w": e_reduced,
            "e_idle_w": e_idle,
            "weights": weights.to_dict(),
        },
    )


def compute_eer_ex(
    t_full: float,
    t_r1: float,
    t_r2: float,
    e_full: float,
    e_r1: float,
    e_r2: float,
    weights: WeightProfile,
) -> MetricResult:
    """Extended-idle efficiency over power states 0, 1 and 2, Gbps/W.

    Unlike EER-VL there is no zero-utilization phase: every state forwards
    traffic and contributes to the numerator.
    """
    for name, t in (("t_full", t_full), ("t_r1", t_r1), ("t_r2", t_r2)):
        _check_throughput(t, name)
    for name, e in (("e_full", e_full), ("e_r1", e_r1), ("e_r2", e_r2)):
        _check_power(e, name)
    if not t_r2 <= t_r1 <= t_full:
        raise StateOrderViolation(
            f"state throughputs must satisfy t_r2 <= t_r1 <= t_full, got {t_r2}, {t_r1}, {t_full}"
        )
    a, b, eps = weights.alpha, weights.beta, weights.epsilon
    den = a * e_full + b * e_r1 + eps * e_r2
    if not den > 0:
        raise NonPositivePower(f"weighted power {den} is not positive")
    return MetricResult(
        MetricKind.EER_EX,
        (a * t_full + b * t_r1 + eps * t_r2) / den,
        {
            "t_full_gbps": t_full,
            "t_r1_gbps": t_r1,
            "t_r2_gbps": t_r2,
            "e_full_w": e_full,
            "e_r1_w": e_r1,
            "e_r2_w": e_r2,
            "weights": weights.to_dict(),
        },
    )


def allowance_budget(
    interface_counts: Mapping[str, int], table: AllowanceTable, measured: float
) -> tuple[MetricResult, bool]:
    """Sum per-interface allowances into a ceiling and test ``measured`` against it."""
    _check_power(measured, "measured")
    ceiling = 0.0
    for name, count in interface_counts.items():
        if name not in table.entries:
            raise UnknownInterfaceClass(name)
        if count < 0:
            raise ValidationError(f"negative interface count for {name!r}")
        ceiling += count * table.entries[name]
    result = MetricResult(
        MetricKind.ALLOWANCE,
        ceiling,
        {"interface_counts": dict(interface_counts), "measured_w": measured},
    )
    return result, measured <= ceiling


def weighted_peak_throughput(
    per_size_ndr: Mapping[int, float], weights: PacketSizeWeights
) -> MetricResult:
    """Convex combination of per-packet-size NDRs, Gbps."""
    total = 0.0
    for size, w in weights.entries:
        if size not in per_size_ndr:
            raise MissingPacketSize(size)
        _check_throughput(per_size_ndr[size], f"NDR at {size} bytes")
        total += w * per_size_ndr[size]
    return MetricResult(
        MetricKind.WEIGHTED_PEAK,
        total,
        {
            "per_size_ndr_gbps": {str(s): per_size_ndr[s] for s, _ in weights.entries},
            "packet_size_weights": weights.to_list(),
        },
    )


def metric_from_set(
    mset: MeasurementSet, kind: MetricKind, weights: WeightProfile | None = None
) -> MetricResult:
    """Compute ``kind`` from a measurement set, refusing invalidated sets.

    ``weights`` overrides the profile stored with the set. TEEER and ATIS
    TEER need a variable-load set whose reduced phase ran at half load.
    """
    mset.require_valid()
    weights = weights or mset.weights
    if kind is MetricKind.ECR:
        label = "full" if "full" in mset.phases else _first_peak_label(mset)
        t, e = mset.phase(label)
        return compute_ecr(e, t)
    if weights is None:
        raise ValidationError(f"{kind.value} needs a weight profile")
    if kind is MetricKind.EER_VL:
        t_f, e_f = mset.phase("full")
        t_r, e_r = mset.phase("reduced")
        _, e_i = mset.phase("idle")
        return compute_eer_vl(t_f, t_r, e_f, e_r, e_i, weights)
    if kind in (MetricKind.TEEER, MetricKind.TEER_ATIS):
        reduced = mset.weights.reduced_load_fraction if mset.weights else None
        if reduced != 0.5:
            raise ValidationError(f"{kind.value} needs the reduced phase at 50 % load")
        t_f, e_f = mset.phase("full")
        _, e_h = mset.phase("reduced")
        _, e_i = mset.phase("idle")
        fn = compute_teeer if kind is MetricKind.TEEER else compute_teer_atis
        return fn(e_i, e_h, e_f, t_f, weights)
    if kind is MetricKind.EER_EX:
        labels = [k for k in mset.phases if k.startswith("state-")]
        if len(labels) != 3:
            raise ValidationError("EER_EX needs exactly three state phases")
        (t0, e0), (t1, e1), (t2, e2) = (mset.phase(k) for k in labels)
        return compute_eer_ex(t0, t1, t2, e0, e1, e2, weights)
    raise ValidationError(f"{kind.value} cannot be computed from a measurement set")


def _first_peak_label(mset: MeasurementSet) -> str:
    for label in mset.phases:
        if label.startswith("full"):
            return label
    raise ValidationError("measurement set has no full-load phase")
