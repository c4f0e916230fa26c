"""Jeffress-style coincidence network: two counter-directional delay chains
of LIF neurons plus a coincidence-detector layer, the calibration of the
emergent per-stage delay, and the ITD/angle conversions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lif import (
    ExternalSpike,
    LifParams,
    NetworkSpec,
    Simulation,
    SynapseSpec,
)

# chain weight producing a 3.8 us per-stage delay with the default neuron
# parameters at dt = 0.1 us; center of the plateau found by tune_chain_weight
DEFAULT_CHAIN_WEIGHT = 4.095e-07


class CalibrationError(RuntimeError):
    """Raised when a delay chain fails to propagate cleanly."""


def psp_peak_per_ampere(params: LifParams) -> float:
    """Peak membrane deflection (volts) caused by 1 A of instantaneous
    synaptic current decaying with tau_syn, in continuous time."""
    tm, ts = params.tau_m, params.tau_syn
    if abs(tm - ts) < 1e-12 * tm:
        peak = tm / math.e
    else:
        t_star = (ts * tm / (tm - ts)) * math.log(tm / ts)
        peak = (ts * tm / (tm - ts)) * (
            math.exp(-t_star / tm) - math.exp(-t_star / ts)
        )
    return peak / params.c_m


def single_spike_fire_weight(params: LifParams) -> float:
    """Smallest synaptic weight (amperes) whose lone PSP just reaches
    threshold from rest, in continuous time."""
    return (params.v_thresh - params.v_leak) / psp_peak_per_ampere(params)


@dataclass(frozen=True)
class JeffressConfig:
    """Geometry-free network configuration.

    coincidence_weight defaults to 0.7x the single-spike firing weight so a
    lone chain never triggers a detector while two roughly coincident
    arrivals always do.
    """

    n_stages: int = 50
    chain_weight: float = DEFAULT_CHAIN_WEIGHT
    coincidence_weight: float | None = None
    neuron_params: LifParams = field(default_factory=LifParams)
    input_neuron_params: LifParams | None = None
    left_first_index: bool = True

    def __post_init__(self):
        if self.n_stages < 2:
            raise ValueError("n_stages must be >= 2")
        if self.chain_weight <= 0:
            raise ValueError("chain_weight must be > 0")

    @property
    def input_params(self) -> LifParams:
        return self.input_neuron_params or self.neuron_params

    def resolved_coincidence_weight(self) -> float:
        if self.coincidence_weight is not None:
            return self.coincidence_weight
        return 0.7 * single_spike_fire_weight(self.neuron_params)


@dataclass(frozen=True)
class GeometryParams:
    """Receiver geometry: microphone spacing, head radius, speed of sound."""

    mic_distance: float = 0.051
    head_radius: float | None = None
    speed_of_sound: float = 343.0

    def __post_init__(self):
        if self.mic_distance <= 0 or self.speed_of_sound <= 0:
            raise ValueError("mic_distance and speed_of_sound must be > 0")
        if self.head_radius is None:
            object.__setattr__(self, "head_radius", self.mic_distance / 2)
        elif self.head_radius <= 0:
            raise ValueError("head_radius must be > 0")


@dataclass(frozen=True)
class CalibrationResult:
    """Measured propagation delays of one chain traversal."""

    stage_delays: tuple
    stage_delay_mean: float
    stage_delay_std: float


@dataclass(frozen=True)
class JeffressNetwork:
    """Built network plus its deterministic id layout.

    Ids: 0 left input, 1 right input, 2..N+1 left chain (by detector
    position), N+2..2N+1 right chain (by detector position), 2N+2..3N+1
    coincidence detectors. With left_first_index the left input feeds
    position 0 and the right input feeds position N-1; flipping the flag
    mirrors the two entry points.
    """

    spec: NetworkSpec
    config: JeffressConfig
    input_left: int
    input_right: int
    left_chain: tuple
    right_chain: tuple
    detectors: tuple

    @property
    def n_stages(self) -> int:
        return self.config.n_stages

    def chain_order(self, side: str) -> tuple:
        """Chain ids in propagation order for 'left' or 'right'."""
        fwd = self.config.left_first_index
        if side == "left":
            ids = self.left_chain
            return ids if fwd else ids[::-1]
        if side == "right":
            ids = self.right_chain
            return ids[::-1] if fwd else ids
        raise ValueError("side must be 'left' or 'right'")

    def detector_index(self, neuron_id: int) -> int:
        return self.detectors.index(neuron_id)

    def detector_itd(self, j, delta: float) -> float:
        """ITD (right-channel delay, seconds) a detector position is tuned
        to, consistent with this network's orientation."""
        base = detector_to_itd(j, delta, self.n_stages)
        return -base if self.config.left_first_index else base

    def itd_to_position(self, itd: float, delta: float) -> float:
        """Fractional detector position tuned to a given ITD."""
        n = self.n_stages
        signed = -itd if self.config.left_first_index else itd
        return (n - 1 - signed / delta) / 2.0

    def describe(self) -> str:
        """Structured text dump: parameters, id layout and synapse table."""
        cfg = self.config
        lines = [
            "[network]",
            f"n_stages={cfg.n_stages}",
            f"n_neurons={self.spec.n_neurons}",
            f"n_synapses={len(self.spec.synapses)}",
            f"left_first_index={cfg.left_first_index}",
            f"chain_weight={cfg.chain_weight:.6e}",
            f"coincidence_weight={cfg.resolved_coincidence_weight():.6e}",
            "[layout]",
            f"input_left={self.input_left}",
            f"input_right={self.input_right}",
            f"left_chain={self.left_chain[0]}..{self.left_chain[-1]}",
            f"right_chain={self.right_chain[0]}..{self.right_chain[-1]}",
            f"detectors={self.detectors[0]}..{self.detectors[-1]}",
            "[neuron_params]",
        ]
        for name, p in (("chain", cfg.neuron_params), ("input", cfg.input_params)):
            lines.append(
                f"{name}: tau_m={p.tau_m:g} tau_syn={p.tau_syn:g} "
                f"v_leak={p.v_leak:g} v_thresh={p.v_thresh:g} "
                f"v_reset={p.v_reset:g} t_ref={p.t_ref:g} c_m={p.c_m:g}"
            )
        lines.append("[synapses]")
        for s in self.spec.synapses:
            lines.append(f"{s.pre}->{s.post} w={s.weight:.6e}")
        return "\n".join(lines) + "\n"


def build(cfg: JeffressConfig) -> JeffressNetwork:
    """Construct the 3N+2 neuron network: 2 analog-injected inputs, two
    N-stage chains fed from opposite ends, and N coincidence detectors,
    detector j receiving left-chain j and right-chain j."""
    n = cfg.n_stages
    w_coin = cfg.resolved_coincidence_weight()
    w_fire = single_spike_fire_weight(cfg.neuron_params)
    if w_coin >= w_fire:
        raise ValueError(
            f"coincidence_weight {w_coin:.3e} >= single-spike firing weight "
            f"{w_fire:.3e}; a lone chain would trigger detectors"
        )
    if cfg.chain_weight <= w_fire:
        raise ValueError(
            f"chain_weight {cfg.chain_weight:.3e} <= single-spike firing "
            f"weight {w_fire:.3e}; the chain cannot propagate"
        )

    input_left, input_right = 0, 1
    left_chain = tuple(range(2, n + 2))
    right_chain = tuple(range(n + 2, 2 * n + 2))
    detectors = tuple(range(2 * n + 2, 3 * n + 2))

    neurons = [cfg.input_params] * 2 + [cfg.neuron_params] * (3 * n)
    synapses = []
    if cfg.left_first_index:
        left_entry, left_step = 0, 1
        right_entry, right_step = n - 1, -1
    else:
        left_entry, left_step = n - 1, -1
        right_entry, right_step = 0, 1

    synapses.append(SynapseSpec(input_left, left_chain[left_entry], cfg.chain_weight))
    synapses.append(SynapseSpec(input_right, right_chain[right_entry], cfg.chain_weight))
    pos = left_entry
    for _ in range(n - 1):
        synapses.append(SynapseSpec(left_chain[pos], left_chain[pos + left_step],
                                    cfg.chain_weight))
        pos += left_step
    pos = right_entry
    for _ in range(n - 1):
        synapses.append(SynapseSpec(right_chain[pos], right_chain[pos + right_step],
                                    cfg.chain_weight))
        pos += right_step
    for j in range(n):
        synapses.append(SynapseSpec(left_chain[j], detectors[j], w_coin))
        synapses.append(SynapseSpec(right_chain[j], detectors[j], w_coin))

    spec = NetworkSpec(neurons=tuple(neurons), synapses=tuple(synapses))
    return JeffressNetwork(
        spec=spec, config=cfg,
        input_left=input_left, input_right=input_right,
        left_chain=left_chain, right_chain=right_chain, detectors=detectors,
    )


def calibrate_stage_delay(net: JeffressNetwork, dt: float,
                          t_inject: float = 5e-6,
                          window_per_stage: float = 30e-6) -> CalibrationResult:
    """Inject one synthetic spike at the left chain head and measure the
    successive chain spike times; the stage delay is their first difference.

    Fails if any stage stays silent or fires more than once inside the
    observation window.
    """
    order = net.chain_order("left")
    spec = NetworkSpec(
        neurons=net.spec.neurons,
        synapses=net.spec.synapses,
        external_spikes=(ExternalSpike(t_inject, order[0],
                                       net.config.chain_weight),),
    )
    duration = t_inject + net.n_stages * window_per_stage
    record, _ = Simulation(spec, dt).run(duration)

    spike_times = []
    for stage, nid in enumerate(order):
        times = record.spikes_of(nid)
        if times.size == 0:
            raise CalibrationError(f"chain stage {stage} (neuron {nid}) never fired")
        if times.size > 1:
            raise CalibrationError(
                f"chain stage {stage} (neuron {nid}) fired {times.size} times"
            )
        spike_times.append(times[0])
    deltas = np.diff(spike_times)
    return CalibrationResult(
        stage_delays=tuple(float(d) for d in deltas),
        stage_delay_mean=float(np.mean(deltas)),
        stage_delay_std=float(np.std(deltas)),
    )


def _probe_delay(weight: float, params: LifParams, dt: float, stages: int) -> float:
    """Per-stage delay of a bare chain driven by one injected spike, or inf
    if the chain does not propagate."""
    cfg = JeffressConfig(
        n_stages=stages,
        chain_weight=weight,
        coincidence_weight=0.5 * single_spike_fire_weight(params),
        neuron_params=params,
    )
    try:
        net = build(cfg)
        return calibrate_stage_delay(net, dt).stage_delay_mean
    except (ValueError, CalibrationError):
        return math.inf


def tune_chain_weight(target_delay: float, params: LifParams, dt: float,
                      tolerance: float = 1e-7, probe_stages: int = 9,
                      max_iter: int = 80) -> float:
    """Bisect the chain weight until the calibrated per-stage delay is
    within `tolerance` of the target. Deterministic; raises if the target
    lies outside the achievable delay range."""
    if target_delay <= 0:
        raise ValueError("target_delay must be > 0")
    w_fire = single_spike_fire_weight(params)
    lo, hi = 1.02 * w_fire, 400.0 * w_fire
    d_lo = _probe_delay(lo, params, dt, probe_stages)
    d_hi = _probe_delay(hi, params, dt, probe_stages)
    if not d_hi <= target_delay <= d_lo:
        raise ValueError(
            f"target delay {target_delay:.3g}s outside achievable range "
            f"[{d_hi:.3g}, {d_lo:.3g}]s"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        d = _probe_delay(mid, params, dt, probe_stages)
        if abs(d - target_delay) < tolerance:
            return mid
        if d > target_delay:
            lo = mid  # too slow, drive harder
        else:
            hi = mid
    raise RuntimeError(
        f"chain weight search did not converge to {target_delay:.3g}s "
        f"within {max_iter} iterations"
    )


def detector_to_itd(j, delta: float, n_stages: int) -> float:
    """ITD coded by detector position j for per-stage delay `delta`:
    (N - 1 - 2 j) * delta; linear in j, accepts fractional j from the
    averaging readout. Orientation handling may negate the result."""
    j = float(j)
    if not 0 <= j <= n_stages - 1:
        raise ValueError(f"detector index {j} outside [0, {n_stages - 1}]")
    return (n_stages - 1 - 2.0 * j) * delta


def itd_from_distances(d_left: float, d_right: float, c_sound: float = 343.0) -> float:
    """Arrival-time difference of a point source at distances d_left and
    d_right from the two receivers."""
    if c_sound <= 0:
        raise ValueError("speed of sound must be > 0")
    return (d_left - d_right) / c_sound


def woodworth_itd(theta: float, geom: GeometryParams) -> float:
    """Far-field head-diffraction ITD for azimuth theta in [-pi/2, pi/2]:
    r_head / c * (theta + sin(theta))."""
    if not -math.pi / 2 - 1e-12 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError("theta outside [-pi/2, pi/2]")
    return geom.head_radius / geom.speed_of_sound * (theta + math.sin(theta))


def woodworth_angle(itd: float, geom: GeometryParams,
                    residual_tol: float = 1e-9) -> float:
    """Invert the Woodworth map by bisection on the strictly increasing
    forward formula. The interval is shrunk below 1e-10 rad, so the
    returned angle reproduces the ITD well inside `residual_tol` seconds."""
    bound = woodworth_itd(math.pi / 2, geom)
    if abs(itd) > bound + residual_tol:
        raise ValueError(
            f"|itd|={abs(itd):.3g}s exceeds the half-space maximum {bound:.3g}s"
        )
    lo, hi = -math.pi / 2, math.pi / 2
    while hi - lo > 1e-10:
        theta = 0.5 * (lo + hi)
        if woodworth_itd(theta, geom) < itd:
            lo = theta
        else:
            hi = theta
    theta = 0.5 * (lo + hi)
    if abs(woodworth_itd(theta, geom) - itd) >= residual_tol:
        raise RuntimeError("woodworth inversion failed to converge")
    return theta


def planewave_angle(itd: float, mic_distance: float,
                    c_sound: float = 343.0) -> float:
    """Far-field two-receiver azimuth arcsin(itd * c / d).

    Arguments overshooting |1| by up to 0.5 % (rounded ITDs at the
    half-space edge) are clamped; anything larger is an error.
    """
    if mic_distance <= 0 or c_sound <= 0:
        raise ValueError("mic_distance and c_sound must be > 0")
    arg = itd * c_sound / mic_distance
    if abs(arg) > 1.005:
        raise ValueError(f"|itd * c / d| = {abs(arg):.4g} > 1: no real angle")
    return math.asin(max(-1.0, min(1.0, arg)))


def angular_resolution(delta: float, geom: GeometryParams) -> dict:
    """Small-angle spatial resolution near the midline implied by the stage
    delay: one entry for a single stage delay, one for the 2-delta detector
    pitch. Reported, never asserted."""
    factor = geom.speed_of_sound / (2.0 * geom.head_radius)
    return {
        "per_stage_rad": delta * factor,
        "per_detector_rad": 2.0 * delta * factor,
    }
