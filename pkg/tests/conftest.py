"""Shared fixtures: the default network (built once), its calibrated stage
delay, and independent signal oracles used to freeze expected values."""

from __future__ import annotations

import struct
import wave

import numpy as np
import pytest

from itdloc import jeffress
from itdloc.harness import TrialConfig

DT = 1e-7


@pytest.fixture(scope="session")
def default_net():
    return jeffress.build(jeffress.JeffressConfig())


@pytest.fixture(scope="session")
def stage_delay(default_net):
    return jeffress.calibrate_stage_delay(default_net, DT).stage_delay_mean


@pytest.fixture(scope="session")
def default_trial(default_net):
    return TrialConfig(net=default_net)


def sinc_interpolate(x: np.ndarray, t_samples: np.ndarray) -> np.ndarray:
    """Whittaker-Shannon interpolation of x at (fractional) sample times;
    the independent oracle for delay and resampling checks."""
    k = np.arange(x.size)
    out = np.empty(t_samples.size)
    chunk = 4096
    for lo in range(0, t_samples.size, chunk):
        part = t_samples[lo:lo + chunk, np.newaxis] - k[np.newaxis, :]
        out[lo:lo + chunk] = np.sinc(part) @ x
    return out


def write_wav_16bit(path, channels: np.ndarray, rate: int) -> None:
    """Write float [-1, 1] channels as a 16-bit PCM WAV via the stdlib."""
    channels = np.atleast_2d(channels)
    ints = np.clip(np.round(channels * 32767), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels.shape[0])
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(ints.T.tobytes())


def raw_wav_bytes(fmt_code: int, bits: int, n_channels: int, rate: int,
                  payload: bytes) -> bytes:
    """Assemble a minimal RIFF/WAVE file by hand."""
    block = n_channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_code, n_channels, rate,
                      rate * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks
