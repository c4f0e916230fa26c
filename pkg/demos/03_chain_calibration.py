#!/usr/bin/env python3
"""Tune the chain weight for a 3.8 us per-stage delay and calibrate the
full 50-stage network.

The tuner bisects the synaptic weight of the delay chain until one
injected spike propagates with the requested per-stage latency; the
calibration then injects a single spike at the chain head of the full
network and differences the successive stage spike times.
"""

import time

import numpy as np

from itdloc import (
    GeometryParams,
    JeffressConfig,
    LifParams,
    angular_resolution,
    build,
    calibrate_stage_delay,
    tune_chain_weight,
)

DT = 1e-7
TARGET = 3.8e-6

t0 = time.monotonic()
weight = tune_chain_weight(TARGET, LifParams(), DT)
print(f"tuned chain weight: {weight:.4e} A  ({time.monotonic() - t0:.2f} s)")

net = build(JeffressConfig(chain_weight=weight))
cal = calibrate_stage_delay(net, DT)
delays_us = np.array(cal.stage_delays) * 1e6
print(f"stage delays: mean {cal.stage_delay_mean * 1e6:.3f} us, "
      f"std {cal.stage_delay_std * 1e6:.4f} us over {delays_us.size} stages")
print(f"detector pitch (2 delta): {2 * cal.stage_delay_mean * 1e6:.1f} us")
print(f"chain reach: +-{(net.n_stages - 1) * cal.stage_delay_mean * 1e6:.1f} us "
      f"(half-space needs +-149 us at 51 mm spacing)")

res = angular_resolution(cal.stage_delay_mean, GeometryParams())
print(f"implied midline resolution: {np.degrees(res['per_stage_rad']):.2f} deg "
      f"per stage delay, {np.degrees(res['per_detector_rad']):.2f} deg per "
      f"detector step")
