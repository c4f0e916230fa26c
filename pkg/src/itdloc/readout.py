"""Embedded-processor readout emulation: periodic polling of coincidence
spike counters, id averaging, post-detection dead time with counter reset,
and the two output encodings (servo PWM schedule, serial text frames).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .lif import SpikeRecord


@dataclass(frozen=True)
class ReadoutConfig:
    """Polling-loop timing plus the detector ids to scan, in id order."""

    detector_ids: tuple
    iteration_time: float = 55e-6
    dead_time: float = 0.2

    def __post_init__(self):
        if self.iteration_time <= 0:
            raise ValueError("iteration_time must be > 0")
        if self.dead_time < 0:
            raise ValueError("dead_time must be >= 0")
        ids = tuple(int(i) for i in self.detector_ids)
        if len(set(ids)) != len(ids) or not ids:
            raise ValueError("detector_ids must be non-empty and unique")
        object.__setattr__(self, "detector_ids", ids)


@dataclass(frozen=True)
class DirectionEvent:
    """One detection: polling time and direction as a fractional index into
    the detector list."""

    t: float
    direction: float


@dataclass(frozen=True)
class PwmConfig:
    """Hobby-servo pulse timing."""

    period: float = 20e-3
    pulse_min: float = 1.0e-3
    pulse_max: float = 2.0e-3

    def __post_init__(self):
        if not 0 < self.pulse_min < self.pulse_max < self.period:
            raise ValueError("need 0 < pulse_min < pulse_max < period")


def poll_loop(record: SpikeRecord, cfg: ReadoutConfig, t_end: float):
    """Replay the polling program over a spike record.

    The loop reads all detector counters at each iteration boundary
    k * iteration_time. If any counter is non-zero, the direction is the
    plain mean of the active detector positions (each active detector
    counts once, regardless of its spike count), an event is emitted at the
    boundary, the processor sleeps for dead_time and only then clears the
    counters; spikes landing during the sleep are wiped by that reset,
    while spikes after the reset survive into the next read.
    """
    index_of = {nid: j for j, nid in enumerate(cfg.detector_ids)}
    n_det = len(cfg.detector_ids)
    counters = np.zeros(n_det, dtype=np.int64)

    times = record.times
    ids = record.ids
    ptr = 0
    events = []
    boundary = cfg.iteration_time
    eps = 1e-12

    while boundary <= t_end + eps:
        while ptr < times.size and times[ptr] <= boundary + eps:
            j = index_of.get(int(ids[ptr]))
            if j is not None:
                counters[j] += 1
            ptr += 1
        active = np.flatnonzero(counters)
        if active.size:
            events.append(DirectionEvent(t=boundary,
                                         direction=float(np.mean(active))))
            reset_time = boundary + cfg.dead_time
            while ptr < times.size and times[ptr] <= reset_time + eps:
                ptr += 1  # discarded: lands before the post-sleep reset
            counters[:] = 0
            k = int(np.floor(reset_time / cfg.iteration_time + 1e-9)) + 1
            boundary = k * cfg.iteration_time
        else:
            boundary += cfg.iteration_time
    return events


def pwm_pulse_width(direction: float, n_detectors: int, cfg: PwmConfig) -> float:
    """Linear map from detector position to servo pulse width."""
    if not 0 <= direction <= n_detectors - 1:
        raise ValueError(f"direction {direction} outside [0, {n_detectors - 1}]")
    frac = direction / (n_detectors - 1)
    return cfg.pulse_min + frac * (cfg.pulse_max - cfg.pulse_min)


def pwm_edges(direction: float, n_detectors: int, cfg: PwmConfig,
              n_periods: int = 1):
    """Yield (time_s, level) edges of the PWM signal: a rising edge at each
    period start and a falling edge one pulse width later."""
    width = pwm_pulse_width(direction, n_detectors, cfg)
    for k in range(n_periods):
        t0 = k * cfg.period
        yield (t0, 1)
        yield (t0 + width, 0)


def write_pwm_csv(path, direction: float, n_detectors: int, cfg: PwmConfig,
                  n_periods: int = 5) -> None:
    """Export the edge schedule as (t_s, level) CSV."""
    with open(path, "w") as fh:
        fh.write("t_s,level\n")
        for t, level in pwm_edges(direction, n_detectors, cfg, n_periods):
            fh.write(f"{t:.9f},{level}\n")


def serial_encode(event: DirectionEvent) -> str:
    """One text frame per detection: `t_us=<int> dir=<3-decimal>` plus a
    trailing newline."""
    return f"t_us={int(round(event.t * 1e6))} dir={event.direction:.3f}\n"


_SERIAL_RE = re.compile(r"^t_us=(-?\d+) dir=(-?\d+\.\d{3})$")


def serial_decode(line: str) -> DirectionEvent:
    """Parse a frame produced by serial_encode."""
    m = _SERIAL_RE.match(line.strip())
    if not m:
        raise ValueError(f"not a direction frame: {line!r}")
    return DirectionEvent(t=int(m.group(1)) * 1e-6, direction=float(m.group(2)))
