"""
Steered response power on a circular array
==========================================

A single far-field source is turned into its ideal inter-channel phase
field, which is then scanned over the 72-bin azimuth grid.
"""

import numpy as np

from spatialdiar import AzimuthGrid, DoaAngle, SteeringTable, circular_array, srp_spectrum
from spatialdiar.providers import oracle_summed_dpipd
from spatialdiar.stft import StftConfig

# eight microphones on a 5 cm ring, 16 kHz analysis bins
geom = circular_array(8, 0.05)
freqs = StftConfig().freqs
grid = AzimuthGrid(5.0)
table = SteeringTable(geom, grid, freqs)

field = oracle_summed_dpipd(geom, freqs, [(DoaAngle.from_degrees(37.5), 1.0)])
spec = srp_spectrum(field, table)

# the peak lands on the source bin and reaches exactly one
b = spec.argmax()
print(f"peak at {grid.center_deg(b):.1f} deg, value {spec.values[b]:.12f}")

# a coarse text plot of the whole spectrum
for k in range(0, grid.n_bins, 3):
    v = spec.values[k]
    print(f"{grid.center_deg(k):7.1f} {'#' * int(round(max(v, 0.0) * 40)):<40} {v:+.3f}")

# sidelobes stay well below the main lobe for this aperture
print("largest value 30 deg or more away:",
      np.max([spec.values[k] for k in range(grid.n_bins) if grid.bin_distance(k, b) >= 6]))
