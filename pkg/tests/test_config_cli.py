"""Strict config round-tripping and the command-line surface: subcommands,
outputs and exit codes."""

import json

import numpy as np
import pytest

from itdloc import cli
from itdloc.config import (
    ConfigError,
    RunConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)

from conftest import write_wav_16bit
from itdloc.frontend import ClapSpec, synth_clap


SMALL = {
    "network": {"n_stages": 8},
    "stimulus": {"duration": 9e-4,
                 "clap": {"onset_time": 1e-4, "rise_time": 5e-5}},
}


class TestConfig:
    def test_defaults_roundtrip(self):
        cfg = RunConfig()
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_dump_is_json_and_reloads(self, tmp_path):
        path = tmp_path / "cfg.json"
        save_config(RunConfig(), path)
        assert config_from_dict(json.loads(path.read_text())) == RunConfig()
        assert load_config(path) == RunConfig()

    def test_partial_override(self):
        cfg = config_from_dict(SMALL)
        assert cfg.network.n_stages == 8
        assert cfg.network.chain_weight == RunConfig().network.chain_weight
        assert cfg.stimulus.clap.onset_time == pytest.approx(1e-4)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown keys.*dtt"):
            config_from_dict({"dtt": 1e-7})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="network.*unknown"):
            config_from_dict({"network": {"nstages": 8}})

    def test_invalid_value_rejected(self):
        with pytest.raises(ConfigError, match="frontend"):
            config_from_dict({"frontend": {"v_floor": 2.0}})

    def test_optional_nested_input_neuron(self):
        cfg = config_from_dict({"network": {"input_neuron": {"t_ref": 1e-3}}})
        assert cfg.network.input_neuron.t_ref == pytest.approx(1e-3)
        assert cfg.network.input_neuron.tau_m == pytest.approx(15e-6)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(path)


@pytest.fixture()
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


class TestCli:
    def test_help_all_subcommands(self, capsys):
        for argv in (["--help"], ["calibrate", "--help"],
                     ["simulate", "--help"], ["sweep", "--help"],
                     ["oracle", "--help"], ["config", "--help"]):
            with pytest.raises(SystemExit) as exc:
                cli.main(argv)
            assert exc.value.code == 0
            assert "usage" in capsys.readouterr().out

    def test_config_dump_roundtrip(self, capsys):
        assert cli.main(["config", "dump"]) == 0
        out = capsys.readouterr().out
        assert config_from_dict(json.loads(out)) == RunConfig()

    def test_calibrate(self, small_config, tmp_path, capsys):
        rc = cli.main(["calibrate", "--config", str(small_config),
                       "--out", str(tmp_path / "cal")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "stage_delay_mean=3.800 us" in out
        tuned = load_config(tmp_path / "cal" / "tuned_config.json")
        assert tuned.network.n_stages == 8

    def test_calibrate_absurd_target_exit_3(self, small_config, capsys):
        rc = cli.main(["calibrate", "--config", str(small_config),
                       "--target-us", "0.001"])
        assert rc == 3
        assert "achievable range" in capsys.readouterr().err

    def test_simulate_writes_outputs(self, small_config, tmp_path, capsys):
        out = tmp_path / "sim"
        rc = cli.main(["simulate", "--config", str(small_config),
                       "--itd", "0", "--traces", "0,1", "--out", str(out)])
        assert rc == 0
        assert (out / "spikes.csv").exists()
        assert (out / "traces.csv").exists()
        assert (out / "network.txt").exists()
        events = (out / "events.txt").read_text().splitlines()
        assert len(events) == 1 and " dir=3.500" in events[0]

    def test_simulate_mirrored_rasters(self, small_config, tmp_path):
        # +-20 us stays inside the 8-stage detector range of +-26.6 us
        dirs = []
        for tag, itd in (("p", "20"), ("m", "-20")):
            out = tmp_path / tag
            assert cli.main(["simulate", "--config", str(small_config),
                             "--itd", itd, "--out", str(out)]) == 0
            line = (out / "events.txt").read_text()
            dirs.append(float(line.split("dir=")[1]))
        assert dirs[0] + dirs[1] == pytest.approx(7.0, abs=1.0)

    def test_simulate_seeded_noise_reproducible(self, small_config, tmp_path):
        lines = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            rc = cli.main(["simulate", "--config", str(small_config),
                           "--itd", "10", "--seed", "5", "--out", str(out)])
            assert rc == 0
            lines.append((out / "events.txt").read_text())
        assert lines[0] == lines[1]

    def test_simulate_from_wav_stimulus(self, small_config, tmp_path):
        clap = synth_clap(ClapSpec(rng_seed=9), 192000, 9e-4)
        wav = tmp_path / "stim.wav"
        write_wav_16bit(wav, clap.samples, 192000)
        out = tmp_path / "simw"
        rc = cli.main(["simulate", "--config", str(small_config),
                       "--wav", str(wav), "--itd", "0", "--out", str(out)])
        assert rc == 0
        assert "dir=" in (out / "events.txt").read_text()

    def test_simulate_missing_wav_exit_2(self, tmp_path, capsys):
        rc = cli.main(["simulate", "--wav", str(tmp_path / "ghost.wav"),
                       "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "ghost.wav" in capsys.readouterr().err

    def test_sweep_single_cell(self, small_config, tmp_path, capsys):
        out = tmp_path / "sw"
        rc = cli.main(["sweep", "--config", str(small_config),
                       "--trials", "1", "--itds", "0", "--out", str(out)])
        assert rc == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 2  # header + one row
        assert (out / "stats.csv").exists()

    def test_oracle_on_self_shifted_clip(self, tmp_path, capsys):
        clap = synth_clap(ClapSpec(rng_seed=12), 192000, 3e-3)
        wav = tmp_path / "clap.wav"
        write_wav_16bit(wav, clap.samples, 192000)
        rc = cli.main(["oracle", "--wav", str(wav), "--itd", "100"])
        assert rc == 0
        est = float(capsys.readouterr().out.split("itd_us=")[1])
        assert est == pytest.approx(100.0, abs=2.6)

    def test_oracle_mono_without_itd_exit_3(self, tmp_path, capsys):
        wav = tmp_path / "m.wav"
        write_wav_16bit(wav, np.sin(np.linspace(0, 50, 4000)), 192000)
        rc = cli.main(["oracle", "--wav", str(wav)])
        assert rc == 3
        assert "--itd" in capsys.readouterr().err

    def test_bad_config_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"unknown_section": 1}')
        rc = cli.main(["config", "dump", "--config", str(path)])
        assert rc == 2
        assert "unknown" in capsys.readouterr().err
