"""
Iterative detection and removal
===============================

Two sources with unequal strength share one phase field.  The strongest
peak is detected, its weight read off the spectrum, and its contribution
removed before looking again.
"""

from spatialdiar import AzimuthGrid, DoaAngle, IdlConfig, SteeringTable, circular_array, srp_spectrum
from spatialdiar.localizer import idl_localize, remove_source
from spatialdiar.providers import oracle_summed_dpipd
from spatialdiar.stft import StftConfig

geom = circular_array(8, 0.05)
freqs = StftConfig().freqs
grid = AzimuthGrid()
table = SteeringTable(geom, grid, freqs)

sources = [(-60.0, 0.7), (20.0, 0.3)]
field = oracle_summed_dpipd(geom, freqs, [(DoaAngle.from_degrees(a), b) for a, b in sources])

for det in idl_localize(field, IdlConfig(n_max=2, w_min=0.15), table):
    print(f"detected {det.azimuth_deg:6.1f} deg with weight {det.weight:.3f}")

# the same thing by hand, one step at a time
residual = field
for step in range(3):
    spec = srp_spectrum(residual, table)
    b = spec.argmax()
    w = min(max(spec.values[b], 0.0), 1.0)
    print(f"step {step}: peak {grid.center_deg(b):6.1f} deg, P = {spec.values[b]:.3f}")
    if w < 0.15:
        print("  below the stopping weight, done")
        break
    residual = remove_source(residual, b, w, table)

# weights differ slightly from 0.7 / 0.3: the two steering fields are not
# orthogonal on a small array, so each source leaks into the other's bin
