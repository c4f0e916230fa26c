"""Automated evaluation: single localization trials, multi-trial ITD sweeps
with per-ITD statistics, latency measurement and an independent
cross-correlation ITD estimator used as ground truth for the network path.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .frontend import (
    AudioClip,
    ClapSpec,
    FrontEndParams,
    apply_itd,
    condition,
    resample,
    synth_clap,
)
from .jeffress import JeffressNetwork
from .lif import AnalogInjection, Simulation
from .readout import ReadoutConfig, poll_loop


@dataclass(frozen=True)
class TrialConfig:
    """Everything one localization trial needs besides the ITD and seed."""

    net: JeffressNetwork
    frontend: FrontEndParams = field(default_factory=FrontEndParams)
    clap: ClapSpec = field(default_factory=ClapSpec)
    stimulus: AudioClip | None = None  # mono recording; overrides clap synth
    sample_rate: int = 192000
    duration: float = 1.1e-3
    dt: float = 1e-7
    r_src: float = 110e3
    injection_mode: str = "resistive"
    iteration_time: float = 55e-6
    dead_time: float = 0.2
    noise_amplitude: float = 0.0

    def readout_config(self) -> ReadoutConfig:
        return ReadoutConfig(detector_ids=self.net.detectors,
                             iteration_time=self.iteration_time,
                             dead_time=self.dead_time)

    def mono_stimulus(self) -> AudioClip:
        if self.stimulus is not None:
            if self.stimulus.n_channels != 1:
                return AudioClip(self.stimulus.sample_rate,
                                 self.stimulus.channel(0)[np.newaxis, :])
            return self.stimulus
        return synth_clap(self.clap, self.sample_rate, self.duration)


@dataclass(frozen=True)
class TrialResult:
    direction: float | None
    latency: float | None
    event_time: float | None = None
    crossing_time: float | None = None

    @property
    def miss(self) -> bool:
        return self.direction is None


@dataclass(frozen=True)
class SweepConfig:
    """Grid of ITDs x trials; every trial is independently seeded from
    (base_seed, itd index, trial index)."""

    trial: TrialConfig
    itds: tuple = tuple(np.linspace(-160e-6, 160e-6, 41))
    trials: int = 100
    noise_amplitude: float = 0.0
    base_seed: int = 2026
    stage_delay: float | None = None  # enables detector-range validation

    def __post_init__(self):
        object.__setattr__(self, "itds", tuple(float(x) for x in self.itds))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.stage_delay is not None:
            reach = (self.trial.net.n_stages - 1) * self.stage_delay
            worst = max(abs(x) for x in self.itds)
            if worst > reach:
                raise ValueError(
                    f"itd {worst * 1e6:.1f}us outside detector range "
                    f"+-{reach * 1e6:.1f}us"
                )


@dataclass(frozen=True)
class SweepRow:
    itd: float
    trial: int
    direction: float | None
    latency: float | None

    @property
    def miss(self) -> bool:
        return self.direction is None


@dataclass(frozen=True)
class ItdStats:
    itd: float
    mean: float | None
    std: float | None
    outliers: int
    misses: int


@dataclass(frozen=True)
class LinearFit:
    slope: float  # detector units per second of ITD
    intercept: float
    max_abs_residual: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    stats: tuple
    fit: LinearFit | None

    def directions(self, itd: float) -> list:
        return [r.direction for r in self.rows
                if r.itd == itd and r.direction is not None]


def trial_seed(base_seed: int, itd_index: int, trial_index: int) -> np.random.SeedSequence:
    """Stable per-trial seed stream."""
    return np.random.SeedSequence(entropy=base_seed,
                                  spawn_key=(itd_index, trial_index))


@dataclass(frozen=True)
class TrialDetail:
    """Intermediate products of one trial, for rasters and trace dumps."""

    result: TrialResult
    record: object
    traces: object
    events: tuple
    stereo: AudioClip
    conditioned: AudioClip


def run_trial_detailed(itd: float, seed, cfg: TrialConfig,
                       record_traces=()) -> TrialDetail:
    """One end-to-end localization: stimulus, inter-channel delay, optional
    per-channel noise, conditioning, resampling to the simulator rate,
    membrane injection, network run and readout replay.

    Latency is measured from the first time either conditioned channel
    crosses the input neurons' threshold to the readout event.
    """
    stereo = apply_itd(cfg.mono_stimulus(), itd)
    raw = stereo.samples
    if cfg.noise_amplitude > 0:
        rng = np.random.default_rng(seed)
        raw = raw + rng.normal(0.0, cfg.noise_amplitude, size=raw.shape)

    fs = stereo.sample_rate
    cond = np.stack([condition(raw[i], fs, cfg.frontend) for i in range(2)])

    v_thresh = cfg.net.config.input_params.v_thresh
    above = np.flatnonzero((cond >= v_thresh).any(axis=0))
    crossing = float(above[0]) / fs if above.size else None

    sim_rate = int(round(1.0 / cfg.dt))
    cond_clip = resample(AudioClip(fs, cond), sim_rate / fs)
    drive = cond_clip.samples
    need = int(round(cfg.duration * sim_rate)) + 1
    if drive.shape[1] < need:  # rounding slack; extend with the final value
        drive = np.pad(drive, ((0, 0), (0, need - drive.shape[1])), mode="edge")
    injections = (
        AnalogInjection(cfg.net.input_left, drive[0], sim_rate,
                        r_src=cfg.r_src, mode=cfg.injection_mode),
        AnalogInjection(cfg.net.input_right, drive[1], sim_rate,
                        r_src=cfg.r_src, mode=cfg.injection_mode),
    )
    record, traces = Simulation(cfg.net.spec.with_injections(injections),
                                cfg.dt).run(cfg.duration,
                                            record_traces=record_traces)
    events = poll_loop(record, cfg.readout_config(), t_end=cfg.duration)
    if not events:
        result = TrialResult(None, None, None, crossing)
    else:
        first = events[0]
        latency = first.t - crossing if crossing is not None else None
        result = TrialResult(first.direction, latency, first.t, crossing)
    return TrialDetail(result=result, record=record, traces=traces,
                       events=tuple(events), stereo=stereo,
                       conditioned=AudioClip(fs, cond))


def run_trial(itd: float, seed, cfg: TrialConfig) -> TrialResult:
    """Direction and latency of one trial; see run_trial_detailed."""
    return run_trial_detailed(itd, seed, cfg).result


def _sweep_cell(args):
    itd_index, trial_index, itd, cfg, base_seed, noise = args
    cell = replace(cfg, noise_amplitude=noise)
    try:
        res = run_trial(itd, trial_seed(base_seed, itd_index, trial_index), cell)
    except Exception as exc:
        raise RuntimeError(
            f"trial failed at itd={itd * 1e6:.3f}us, trial={trial_index}, "
            f"seed=({base_seed}, {itd_index}, {trial_index}): {exc}"
        ) from exc
    return itd_index, trial_index, res


def run_sweep(cfg: SweepConfig, jobs: int = 1, out_dir=None) -> SweepResult:
    """Run the full ITD x trial grid; rows are keyed by (itd, trial) and the
    result is identical regardless of worker count. When out_dir is given,
    sweep.csv and stats.csv are written there."""
    work = [
        (i, k, itd, cfg.trial, cfg.base_seed, cfg.noise_amplitude)
        for i, itd in enumerate(cfg.itds)
        for k in range(cfg.trials)
    ]
    results = {}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, k, res in pool.map(_sweep_cell, work, chunksize=8):
                results[(i, k)] = res
    else:
        for args in work:
            i, k, res = _sweep_cell(args)
            results[(i, k)] = res
    rows = tuple(
        SweepRow(itd=itd, trial=k,
                 direction=results[(i, k)].direction,
                 latency=results[(i, k)].latency)
        for i, itd in enumerate(cfg.itds)
        for k in range(cfg.trials)
    )
    stats_rows, fit = stats(rows)
    result = SweepResult(rows=rows, stats=stats_rows, fit=fit)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(out / "sweep.csv", result)
        write_stats_csv(out / "stats.csv", result)
    return result


def stats(rows) -> tuple:
    """Per-ITD mean/std/outlier/miss statistics plus a least-squares line
    through the per-ITD means. ITDs where every trial missed carry absent
    statistics and are excluded from the fit."""
    by_itd: dict = {}
    for r in rows:
        by_itd.setdefault(r.itd, []).append(r)
    out = []
    xs, ys = [], []
    for itd in sorted(by_itd):
        cell = by_itd[itd]
        hits = np.array([r.direction for r in cell if r.direction is not None])
        misses = sum(1 for r in cell if r.direction is None)
        if hits.size == 0:
            out.append(ItdStats(itd, None, None, 0, misses))
            continue
        mean = float(np.mean(hits))
        std = float(np.std(hits))
        outliers = int(np.sum(np.abs(hits - mean) > 3.0))
        out.append(ItdStats(itd, mean, std, outliers, misses))
        xs.append(itd)
        ys.append(mean)
    fit = None
    if len(xs) >= 2:
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = np.array(ys) - (slope * np.array(xs) + intercept)
        fit = LinearFit(slope=float(slope), intercept=float(intercept),
                        max_abs_residual=float(np.max(np.abs(resid))))
    return tuple(out), fit


def xcorr_oracle(stereo: AudioClip, max_lag: float) -> float:
    """ITD estimate independent of the network: the lag of the normalized
    cross-correlation peak between the two channels, refined by parabolic
    interpolation. Positive values mean the right channel lags, matching
    apply_itd's sign."""
    if stereo.n_channels != 2:
        raise ValueError("xcorr_oracle needs a stereo clip")
    if max_lag >= stereo.duration:
        raise ValueError("max_lag must be below the clip duration")
    left = stereo.channel(0) - np.mean(stereo.channel(0))
    right = stereo.channel(1) - np.mean(stereo.channel(1))
    norm = np.sqrt(np.sum(left**2) * np.sum(right**2))
    if norm == 0:
        raise ValueError("xcorr_oracle: a channel is silent (zero variance)")

    n = left.size
    max_shift = int(np.floor(max_lag * stereo.sample_rate))
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    spec = np.fft.rfft(right, nfft) * np.conj(np.fft.rfft(left, nfft))
    cc = np.fft.irfft(spec, nfft) / norm
    # cc[m] correlates right[k + m] with left[k]; positive lag = right lags
    lags = np.concatenate([np.arange(-max_shift, 0), np.arange(max_shift + 1)])
    vals = np.concatenate([cc[nfft - max_shift:], cc[:max_shift + 1]])
    peak = int(np.argmax(vals))
    lag = float(lags[peak])
    if 0 < peak < vals.size - 1:
        y0, y1, y2 = vals[peak - 1], vals[peak], vals[peak + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0:
            lag += 0.5 * (y0 - y2) / denom
    return lag / stereo.sample_rate


def write_sweep_csv(path, result: SweepResult) -> None:
    """Rows as `itd_us,trial,direction,latency_us,miss` with fixed
    3-decimal fields for byte-stable diffs."""
    with open(path, "w") as fh:
        fh.write("itd_us,trial,direction,latency_us,miss\n")
        for r in result.rows:
            d = f"{r.direction:.3f}" if r.direction is not None else ""
            lat = f"{r.latency * 1e6:.3f}" if r.latency is not None else ""
            fh.write(f"{r.itd * 1e6:.3f},{r.trial},{d},{lat},{int(r.miss)}\n")


def write_stats_csv(path, result: SweepResult) -> None:
    """Per-ITD stats as `itd_us,mean,std,outliers,misses`."""
    with open(path, "w") as fh:
        fh.write("itd_us,mean,std,outliers,misses\n")
        for s in result.stats:
            mean = f"{s.mean:.3f}" if s.mean is not None else ""
            std = f"{s.std:.3f}" if s.std is not None else ""
            fh.write(f"{s.itd * 1e6:.3f},{mean},{std},{s.outliers},{s.misses}\n")
