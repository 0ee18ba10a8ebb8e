"""
Deterministic simulated device under test.

A :class:`DeviceModel` is the immutable description (loadable from JSON);
:class:`Device` is a running instance with its own fixed-step clock. Time is
kept as an integer step count so timelines never drift.

Power is a piecewise-linear function of utilization of the effective power
state's own capacity, scaled by an exponential warm-up factor. While a state
transition is pending, the effective state is the lower-capacity endpoint,
so transitions never grant free capacity.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import PacketSizeUnknown, UnknownState, ValidationError
from .metrics import MeasurementSample

DEFAULT_STEP_S = 0.1
_EPS = 1e-9


@dataclass(frozen=True)
class PowerCurve:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(p)) for x, p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValidationError("power curve needs at least two points")
        loads = [x for x, _ in pts]
        if loads[0] != 0.0 or loads[-1] != 1.0:
            raise ValidationError("power curve must start at load 0 and end at load 1")
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise ValidationError("power curve load fractions must be strictly increasing")
        powers = [p for _, p in pts]
        # zero is allowed so an ideally proportional device can draw nothing at idle
        if any(p < 0 for p in powers):
            raise ValidationError("power curve watts must be >= 0")
        if any(b < a for a, b in zip(powers, powers[1:])):
            raise ValidationError("power curve must be monotone nondecreasing in load")
        object.__setattr__(self, "_loads", loads)

    @property
    def idle_power(self) -> float:
        return self.points[0][1]

    @property
    def full_power(self) -> float:
        return self.points[-1][1]

    def __call__(self, load: float) -> float:
        loads = self._loads
        i = bisect.bisect_left(loads, load)
        if i < len(loads) and loads[i] == load:
            return self.points[i][1]
        if i == 0:
            return self.points[0][1]
        if i == len(loads):
            return self.points[-1][1]
        (x0, p0), (x1, p1) = self.points[i - 1], self.points[i]
        return p0 + (p1 - p0) * (load - x0) / (x1 - x0)

    def to_list(self) -> list:
        return [[x, p] for x, p in self.points]


@dataclass(frozen=True)
class PowerState:
    id: int
    capacity_fraction: float
    curve: PowerCurve
    enter_latency_s: float = 0.0
    exit_latency_s: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.capacity_fraction <= 1.0:
            raise ValidationError(f"state {self.id}: capacity_fraction outside [0, 1]")
        if self.enter_latency_s < 0 or self.exit_latency_s < 0:
            raise ValidationError(f"state {self.id}: latencies must be >= 0")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "capacity_fraction": self.capacity_fraction,
            "curve": self.curve.to_list(),
            "enter_latency_s": self.enter_latency_s,
            "exit_latency_s": self.exit_latency_s,
        }


@dataclass(frozen=True)
class WarmupModel:
    """Cold devices draw ``steady * (1 - delta * exp(-t_on / tau_s))``."""

    delta: float
    tau_s: float

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValidationError("warmup delta must lie in [0, 1)")
        if not self.tau_s > 0:
            raise ValidationError("warmup tau_s must be > 0")

    def factor(self, t_on: float) -> float:
        return 1.0 - self.delta * math.exp(-t_on / self.tau_s)


@dataclass(frozen=True)
class CheatBehavior:
    """Downshift to ``target_state_id`` for each ``[start_s, end_s)`` window.

    At ``end_s`` the device starts heading back to state 0.
    """

    schedule: tuple[tuple[float, float, int], ...]
    kind: str = "scheduled_downshift"

    def __post_init__(self):
        sched = tuple((float(a), float(b), int(s)) for a, b, s in self.schedule)
        object.__setattr__(self, "schedule", sched)
        if self.kind != "scheduled_downshift":
            raise ValidationError(f"unsupported cheat kind {self.kind!r}")
        prev_end = -math.inf
        for start, end, _ in sched:
            if not start < end:
                raise ValidationError("cheat window must have start_s < end_s")
            if start < prev_end:
                raise ValidationError("cheat windows must be ordered and non-overlapping")
            prev_end = end


@dataclass(frozen=True)
class DeviceModel:
    name: str
    line_rate: float
    ndr_by_packet_size: Mapping[int, float]
    states: tuple[PowerState, ...]
    warmup: WarmupModel | None = None
    cheat: CheatBehavior | None = None
    seed: int = 0
    step_s: float = DEFAULT_STEP_S
    ndr_interpolation: bool = False
    power_noise_w: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self,
            "ndr_by_packet_size",
            {int(k): float(v) for k, v in sorted(self.ndr_by_packet_size.items(), key=lambda kv: int(kv[0]))},
        )
        object.__setattr__(self, "states", tuple(sorted(self.states, key=lambda s: s.id)))
        if not self.line_rate > 0:
            raise ValidationError("line_rate must be > 0")
        if not self.ndr_by_packet_size:
            raise ValidationError("ndr_by_packet_size is empty")
        for size, ndr in self.ndr_by_packet_size.items():
            if size <= 0:
                raise ValidationError("packet sizes must be positive")
            if not 0 < ndr <= self.line_rate:
                raise ValidationError(f"NDR at {size} bytes must lie in (0, line_rate]")
        ids = [s.id for s in self.states]
        if not ids or ids[0] != 0:
            raise ValidationError("device needs a power state with id 0")
        if ids != list(range(len(ids))):
            raise ValidationError("power state ids must be 0..n-1")
        if self.states[0].capacity_fraction != 1.0:
            raise ValidationError("state 0 must have capacity_fraction 1.0")
        if self.states[0].exit_latency_s != 0:
            raise ValidationError("state 0 must have exit_latency_s 0")
        caps = [s.capacity_fraction for s in self.states]
        if any(b >= a for a, b in zip(caps, caps[1:])):
            raise ValidationError("capacity_fraction must strictly decrease with state id")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if not self.step_s > 0:
            raise ValidationError("step_s must be > 0")
        if self.power_noise_w < 0:
            raise ValidationError("power_noise_w must be >= 0")
        if self.cheat is not None:
            for _, _, target in self.cheat.schedule:
                if target not in ids:
                    raise ValidationError(f"cheat schedule names unknown state {target}")

    def ndr(self, packet_size: int) -> float:
        table = self.ndr_by_packet_size
        if packet_size in table:
            return table[packet_size]
        if not self.ndr_interpolation:
            raise PacketSizeUnknown(packet_size)
        sizes = list(table)
        return float(np.interp(packet_size, sizes, [table[s] for s in sizes]))

    @property
    def min_power(self) -> float:
        return min(s.curve.idle_power for s in self.states)

    @property
    def max_power(self) -> float:
        return max(s.curve.full_power for s in self.states)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "line_rate": self.line_rate,
            "ndr_by_packet_size": {str(k): v for k, v in self.ndr_by_packet_size.items()},
            "states": [s.to_dict() for s in self.states],
            "warmup": None
            if self.warmup is None
            else {"delta": self.warmup.delta, "tau_s": self.warmup.tau_s},
            "cheat": None
            if self.cheat is None
            else {"kind": self.cheat.kind, "schedule": [list(w) for w in self.cheat.schedule]},
            "seed": self.seed,
            "step_s": self.step_s,
            "ndr_interpolation": self.ndr_interpolation,
            "power_noise_w": self.power_noise_w,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DeviceModel":
        try:
            states = tuple(
                PowerState(
                    id=int(s["id"]),
                    capacity_fraction=float(s["capacity_fraction"]),
                    curve=PowerCurve(tuple(tuple(p) for p in s["curve"])),
                    enter_latency_s=float(s.get("enter_latency_s", 0.0)),
                    exit_latency_s=float(s.get("exit_latency_s", 0.0)),
                )
                for s in d["states"]
            )
            warm = d.get("warmup")
            cheat = d.get("cheat")
            return cls(
                name=str(d["name"]),
                line_rate=float(d["line_rate"]),
                ndr_by_packet_size={int(k): float(v) for k, v in d["ndr_by_packet_size"].items()},
                states=states,
                warmup=None if warm is None else WarmupModel(float(warm["delta"]), float(warm["tau_s"])),
                cheat=None
                if cheat is None
                else CheatBehavior(
                    tuple(tuple(w) for w in cheat["schedule"]),
                    kind=cheat.get("kind", "scheduled_downshift"),
                ),
                seed=int(d.get("seed", 0)),
                step_s=float(d.get("step_s", DEFAULT_STEP_S)),
                ndr_interpolation=bool(d.get("ndr_interpolation", False)),
                power_noise_w=float(d.get("power_noise_w", 0.0)),
            )
        except KeyError as exc:
            raise ValidationError(f"device document is missing field {exc.args[0]!r}") from None


@dataclass
class SimClock:
    step_s: float = DEFAULT_STEP_S
    steps: int = 0

    @property
    def now_s(self) -> float:
        return self.steps * self.step_s

    def advance(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("the clock never runs backwards")
        self.steps += n

    def steps_for(self, seconds: float) -> int:
        # nearest whole step, tolerant of 0.1-style representation error
        return int(math.ceil(seconds / self.step_s - _EPS))


@dataclass
class _Pending:
    target: int
    complete_step: int


class Device:
    """A running simulated DUT. Not thread-safe; one procedure owns it at a time."""

    def __init__(self, model: DeviceModel, record_trace: bool = False):
        self.model = model
        self.clock = SimClock(model.step_s)
        self.state = 0
        self.pending: _Pending | None = None
        self.warm = model.warmup is None
        self.rng = np.random.default_rng(model.seed)
        self.trace: list[tuple[float, float, float]] | None = [] if record_trace else None
        self._states = {s.id: s for s in model.states}
        if model.cheat is not None:
            for start, end, target in model.cheat.schedule:
                if start <= 0 < end:
                    self.set_power_state(target)

    @property
    def now_s(self) -> float:
        return self.clock.now_s

    @property
    def effective_state(self) -> PowerState:
        sid = self.state
        if self.pending is not None:
            sid = max(sid, self.pending.target)
        return self._states[sid]

    def capacity(self, packet_size: int) -> float:
        """Deliverable Gbps right now at ``packet_size``."""
        return self.model.ndr(packet_size) * self.effective_state.capacity_fraction

    def warmup_factor(self, at_time: float | None = None) -> float:
        if self.model.warmup is None:
            return 1.0
        t = self.now_s if at_time is None else at_time
        return self.model.warmup.factor(t)

    def instantaneous_power(self, load_fraction: float, at_time: float | None = None) -> float:
        """Watts at ``load_fraction`` of the effective state's capacity."""
        if not 0.0 <= load_fraction <= 1.0:
            raise ValidationError(f"load_fraction {load_fraction} outside [0, 1]")
        return self.effective_state.curve(load_fraction) * self.warmup_factor(at_time)

    def set_power_state(self, state_id: int, at_time: float | None = None) -> float:
        """Command a state change; return the time at which it takes full effect.

        Moving to a higher id costs the target's ``enter_latency_s``; moving to
        a lower id costs the current state's ``exit_latency_s``.
        """
        if state_id not in self._states:
            raise UnknownState(state_id)
        start = self.now_s if at_time is None else at_time
        if self.pending is not None and self.pending.target == state_id:
            return self.transition_complete_time()
        if state_id == self.state:
            self.pending = None
            return start
        if state_id > self.state:
            latency = self._states[state_id].enter_latency_s
        else:
            latency = self._states[self.state].exit_latency_s
        done = start + latency
        complete_step = self.clock.steps_for(done)
        if complete_step <= self.clock.steps:
            self.state = state_id
            self.pending = None
        else:
            self.pending = _Pending(state_id, complete_step)
        return done

    def transition_complete_time(self) -> float:
        if self.pending is None:
            return self.now_s
        return self.pending.complete_step * self.clock.step_s

    def tick(self, n: int = 1) -> None:
        for _ in range(n):
            self._tick_once()

    def _tick_once(self) -> None:
        prev = self.clock.now_s
        self.clock.advance()
        now = self.clock.now_s
        cheat = self.model.cheat
        if cheat is not None:
            for start, end, target in cheat.schedule:
                if prev < start <= now + _EPS:
                    self.set_power_state(target)
                if prev < end <= now + _EPS:
                    self.set_power_state(0)
        if self.pending is not None and self.clock.steps >= self.pending.complete_step:
            self.state = self.pending.target
            self.pending = None

    def offer_load(self, offered: float, packet_size: int, duration_s: float) -> MeasurementSample:
        """Offer ``offered`` Gbps for ``duration_s`` and return the averaged sample.

        Each step is evaluated at its start time; delivered throughput is
        capped by the effective state's capacity and power follows the
        utilization of that capacity.
        """
        model = self.model
        if offered < 0 or offered > model.line_rate + _EPS:
            raise ValidationError(f"offered load {offered} outside [0, line_rate]")
        if not duration_s > 0:
            raise ValidationError("duration_s must be > 0")
        ndr = model.ndr(packet_size)
        n = max(1, self.clock.steps_for(duration_s))
        noise = model.power_noise_w
        delivered_sum = []
        power_sum = []
        for _ in range(n):
            st = self.effective_state
            cap = ndr * st.capacity_fraction
            delivered = offered if offered <= cap else cap
            util = delivered / cap if cap > 0 else 0.0
            if util > 1.0:
                util = 1.0
            power = st.curve(util) * self.warmup_factor()
            if noise:
                power = max(0.0, power + noise * self.rng.standard_normal())
            if self.trace is not None:
                self.trace.append((self.now_s, power, delivered))
            delivered_sum.append(delivered)
            power_sum.append(power)
            self._tick_once()
        delivered_avg = min(math.fsum(delivered_sum) / n, offered)
        return MeasurementSample(
            load_fraction=min(1.0, offered / ndr),
            offered=offered,
            delivered=delivered_avg,
            power=math.fsum(power_sum) / n,
            duration_s=n * self.clock.step_s,
            packet_size_bytes=packet_size,
        )

    def idle(self, duration_s: float) -> None:
        """Advance time with no traffic and no measurement."""
        self.tick(max(0, self.clock.steps_for(duration_s)))

    def wait_for_transition(self) -> float:
        """Tick until any pending transition completes; return elapsed seconds."""
        start = self.clock.steps
        while self.pending is not None:
            self._tick_once()
        return (self.clock.steps - start) * self.clock.step_s


def power_curve(points: Sequence[Sequence[float]]) -> PowerCurve:
    return PowerCurve(tuple(tuple(p) for p in points))
