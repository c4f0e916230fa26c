"""Trial pipeline, sweep bookkeeping, statistics and the cross-correlation
oracle."""

import dataclasses

import numpy as np
import pytest

from itdloc.frontend import AudioClip, ClapSpec, apply_itd, synth_clap
from itdloc.harness import (
    SweepConfig,
    SweepRow,
    TrialConfig,
    run_sweep,
    run_trial,
    run_trial_detailed,
    stats,
    trial_seed,
    write_sweep_csv,
    xcorr_oracle,
)


class TestXcorrOracle:
    def test_identical_channels_zero_lag(self):
        clap = synth_clap(ClapSpec(rng_seed=3), 192000, 3e-3)
        stereo = apply_itd(clap, 0.0)
        assert xcorr_oracle(stereo, 400e-6) == pytest.approx(0.0, abs=1e-12)

    def test_constructed_shift_recovered(self):
        clap = synth_clap(ClapSpec(rng_seed=4), 192000, 3e-3)
        for itd in (149e-6, -149e-6):
            stereo = apply_itd(clap, itd)
            est = xcorr_oracle(stereo, 400e-6)
            assert est == pytest.approx(itd, abs=2.6e-6)  # half a sample

    def test_silent_channel_rejected(self):
        stereo = AudioClip(192000, np.stack([np.ones(64), np.zeros(64)]))
        with pytest.raises(ValueError, match="silent"):
            xcorr_oracle(stereo, 1e-4)

    def test_needs_stereo(self):
        with pytest.raises(ValueError, match="stereo"):
            xcorr_oracle(AudioClip(192000, np.ones(64)), 1e-4)


class TestRunTrial:
    def test_center_direction_and_latency(self, default_trial, default_net):
        res = run_trial(0.0, None, default_trial)
        center = (default_net.n_stages - 1) / 2
        assert res.direction == pytest.approx(center, abs=1.0)
        assert res.latency is not None and res.latency <= 0.5e-3

    def test_edge_itd_matches_detector_map(self, default_trial, default_net,
                                           stage_delay):
        res = run_trial(149e-6, None, default_trial)
        expected = default_net.itd_to_position(149e-6, stage_delay)
        assert res.direction == pytest.approx(expected, abs=2.0)

    def test_miss_on_subthreshold_stimulus(self, default_net):
        quiet = dataclasses.replace(
            TrialConfig(net=default_net),
            clap=ClapSpec(amplitude=0.3, rng_seed=5),
            noise_amplitude=0.02,
        )
        for k in range(3):
            detail = run_trial_detailed(0.0, trial_seed(1, 0, k), quiet)
            assert detail.result.miss
            assert detail.events == ()
            assert len(detail.record) == 0  # not a single spurious spike

    def test_flipped_orientation_mirrors_direction(self, default_trial,
                                                   default_net, stage_delay):
        from itdloc.jeffress import JeffressConfig, build
        flipped_net = build(JeffressConfig(left_first_index=False))
        itd = 80e-6
        d_fwd = run_trial(itd, None, default_trial).direction
        d_flip = run_trial(itd, None, TrialConfig(net=flipped_net)).direction
        n = default_net.n_stages
        assert d_fwd + d_flip == pytest.approx(n - 1, abs=1.0)
        # both orientations decode to the same ITD
        itd_fwd = default_net.detector_itd(d_fwd, stage_delay)
        itd_flip = flipped_net.detector_itd(d_flip, stage_delay)
        assert itd_fwd == pytest.approx(itd_flip, abs=2 * stage_delay)

    def test_detail_exposes_record_and_traces(self, default_trial, default_net):
        detail = run_trial_detailed(0.0, None, default_trial,
                                    record_traces=[default_net.input_left])
        assert detail.traces is not None
        assert default_net.input_left in detail.traces.v
        assert len(detail.record) > 0
        assert detail.conditioned.n_channels == 2

    def test_trigger_mode_full_pipeline(self, default_net, default_trial):
        import dataclasses
        trig = dataclasses.replace(default_trial, injection_mode="trigger")
        res = run_trial(0.0, None, trig)
        center = (default_net.n_stages - 1) / 2
        assert res.direction == pytest.approx(center, abs=1.0)


class TestRunSweep:
    def test_row_cardinality_and_keys(self, default_trial):
        cfg = SweepConfig(trial=default_trial, itds=(-40e-6, 0.0, 40e-6),
                          trials=2)
        res = run_sweep(cfg)
        assert len(res.rows) == 6
        assert [(r.itd, r.trial) for r in res.rows[:3]] == [
            (-40e-6, 0), (-40e-6, 1), (0.0, 0)]

    def test_csv_bytes_reproducible(self, default_trial, tmp_path):
        cfg = SweepConfig(trial=default_trial, itds=(0.0, 80e-6), trials=2,
                          noise_amplitude=0.1, base_seed=7)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_sweep_csv(a, run_sweep(cfg))
        write_sweep_csv(b, run_sweep(cfg))
        assert a.read_bytes() == b.read_bytes()

    def test_parallel_equals_serial(self, default_trial):
        cfg = SweepConfig(trial=default_trial, itds=(0.0, 60e-6), trials=2,
                          noise_amplitude=0.1, base_seed=3)
        assert run_sweep(cfg, jobs=2).rows == run_sweep(cfg, jobs=1).rows

    def test_itd_outside_detector_range_rejected(self, default_trial,
                                                 stage_delay):
        with pytest.raises(ValueError, match="detector range"):
            SweepConfig(trial=default_trial, itds=(300e-6,),
                        stage_delay=stage_delay)

    def test_failing_trial_aborts_with_context(self, default_net):
        bad = TrialConfig(net=default_net,
                          clap=ClapSpec(onset_time=5e-3))  # beyond duration
        cfg = SweepConfig(trial=bad, itds=(20e-6,), trials=1)
        with pytest.raises(RuntimeError, match=r"itd=20\.000us, trial=0"):
            run_sweep(cfg)

    def test_csv_formats(self, default_trial, tmp_path):
        cfg = SweepConfig(trial=default_trial, itds=(0.0,), trials=1)
        res = run_sweep(cfg, out_dir=tmp_path)  # writes both files itself
        sweep_lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert sweep_lines[0] == "itd_us,trial,direction,latency_us,miss"
        assert sweep_lines[1].startswith("0.000,0,24.500,")
        stats_lines = (tmp_path / "stats.csv").read_text().splitlines()
        assert stats_lines[0] == "itd_us,mean,std,outliers,misses"
        assert stats_lines[1] == "0.000,24.500,0.000,0,0"


class TestStats:
    def test_constant_rows_zero_std(self):
        rows = [SweepRow(0.0, k, 12.0, 1e-4) for k in range(5)]
        out, fit = stats(rows)
        assert out[0].std == 0.0 and out[0].mean == 12.0
        assert fit is None  # a single ITD cannot define a line

    def test_symmetric_itds_mirror(self, default_trial, default_net):
        res_p = run_trial(+100e-6, None, default_trial)
        res_m = run_trial(-100e-6, None, default_trial)
        center = default_net.n_stages - 1
        assert res_p.direction + res_m.direction == pytest.approx(center, abs=1.0)

    def test_all_miss_itd_absent_not_zero(self):
        rows = [SweepRow(0.0, 0, None, None), SweepRow(1e-5, 0, 3.0, 1e-4),
                SweepRow(2e-5, 0, 5.0, 1e-4)]
        out, fit = stats(rows)
        assert out[0].mean is None and out[0].std is None
        assert out[0].misses == 1
        assert fit is not None  # fitted over the two live ITDs

    def test_outlier_definition(self):
        rows = [SweepRow(0.0, k, v, 1e-4)
                for k, v in enumerate([10.0, 10.2, 9.8, 15.0])]
        out, _ = stats(rows)
        assert out[0].outliers == 1  # 15.0 sits beyond 3 units from the mean


def test_trial_seed_stable():
    a = np.random.default_rng(trial_seed(1, 2, 3)).integers(0, 1 << 30, 4)
    b = np.random.default_rng(trial_seed(1, 2, 3)).integers(0, 1 << 30, 4)
    c = np.random.default_rng(trial_seed(1, 2, 4)).integers(0, 1 << 30, 4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stereo_stimulus_uses_first_channel(default_net):
    clap = synth_clap(ClapSpec(rng_seed=8), 192000, 1.1e-3)
    fake_stereo = AudioClip(192000, np.stack([clap.channel(0),
                                              np.zeros(clap.n_samples)]))
    cfg = TrialConfig(net=default_net, stimulus=fake_stereo)
    assert np.array_equal(cfg.mono_stimulus().channel(0), clap.channel(0))
