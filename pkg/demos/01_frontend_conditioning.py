#!/usr/bin/env python3
"""Walk a synthetic clap through the analog front-end model.

The conditioning chain mirrors a passive preprocessing board: a 20 Hz
high-pass strips the DC bias, the signal is re-centered at 0.8 V, a series
diode removes everything below 0.6 V and a clamp caps the result at 1.2 V,
so whatever reaches a neuron membrane lies inside [0.2, 1.2] V.
"""

from pathlib import Path

import numpy as np

from itdloc import ClapSpec, FrontEndParams, condition, synth_clap, write_trace_csv

RATE = 192_000

clap = synth_clap(ClapSpec(), RATE, duration=3e-3)
raw = clap.channel(0)
params = FrontEndParams()
conditioned = condition(raw, RATE, params)

print("raw clap:         "
      f"{clap.n_samples} samples at {RATE} Hz, peak {np.max(np.abs(raw)):.3f} V")
print(f"conditioned:      window [{conditioned.min():.3f}, {conditioned.max():.3f}] V "
      f"(floor {params.v_floor}, clamp {params.v_clip})")

quiet = conditioned[: int(ClapSpec().onset_time * RATE)]
print(f"pre-onset level:  {quiet.mean():.3f} V (offset {params.v_offset} - "
      f"diode {params.v_diode})")

crossings = np.flatnonzero(conditioned >= 1.0)
if crossings.size:
    print(f"first sample at or above the 1.0 V neuron threshold: "
          f"{crossings[0] / RATE * 1e6:.0f} us")

Path("out").mkdir(exist_ok=True)
write_trace_csv("out/conditioned_clap.csv", conditioned, RATE)
print("wrote out/conditioned_clap.csv (time_s, volts)")
