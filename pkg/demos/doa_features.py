"""
From detections to fused features
=================================

Detections become a frames-by-azimuth matrix, which is stretched to the
frame rate of an acoustic feature stream and added to it through a
projection.
"""

import numpy as np

from spatialdiar import AzimuthGrid
from spatialdiar.features import build_doa_matrix, fuse_additive, interpolate_nearest, random_projection
from spatialdiar.localizer import SourceDetection

grid = AzimuthGrid()
dets = [
    [SourceDetection(0, grid.quantize_deg(-30.0), -30.0, 0.9)],
    [SourceDetection(1, grid.quantize_deg(-30.0), -30.0, 0.8),
     SourceDetection(1, grid.quantize_deg(60.0), 60.0, 0.4)],
    [SourceDetection(2, grid.quantize_deg(60.0), 60.0, 0.7)],
]
o = build_doa_matrix(dets, grid, n_frames=3, frame_period=0.016)
print("nonzero entries (frame, bin, value):")
for t, b in zip(*np.nonzero(o.values)):
    print(f"  {t} {b:2d} {o.values[t, b]:.2f}")

# 3 localizer frames stretched to 10 feature frames: rows 0,0,0,0,1,1,1,2,2,2
up = interpolate_nearest(o, 10)
print("source row per output row:", [int(np.flatnonzero(np.all(o.values == r, axis=1))[0]) for r in up.values])

d = 16
x = np.random.default_rng(0).standard_normal((10, d))
w = random_projection(grid.n_bins, d, seed=0)
fused = fuse_additive(x, up, w)
print("change in feature norm per frame:", np.round(np.linalg.norm(fused - x, axis=1), 3))
