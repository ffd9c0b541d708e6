"""DOA matrix construction, nearest-neighbour upsampling and residual fusion."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geometry import AzimuthGrid
from .localizer import SourceDetection

__all__ = [
    "DoaMatrix",
    "build_doa_matrix",
    "interpolate_nearest",
    "nearest_indices",
    "fuse_additive",
    "random_projection",
    "read_doa_matrix_csv",
    "write_doa_matrix_csv",
]


@dataclass
class DoaMatrix:
    """Activity weights per (frame, azimuth bin), shape (T'', A), in [0, 1]."""

    values: np.ndarray
    frame_period: float
    grid: AzimuthGrid = AzimuthGrid()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.n_bins:
            raise ValueError(f"expected (T, {self.grid.n_bins}) matrix, got {self.values.shape}")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise ValueError("DOA matrix entries must lie in [0, 1]")

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    def binarized(self, threshold: float = 0.0) -> "DoaMatrix":
        return DoaMatrix((self.values > threshold).astype(float), self.frame_period, self.grid)


def build_doa_matrix(detections: Iterable[Sequence[SourceDetection]], grid: AzimuthGrid, n_frames: int, frame_period: float = 0.016) -> DoaMatrix:
    """Single-bin encoding of detections; the max weight wins on collisions."""
    o = np.zeros((n_frames, grid.n_bins))
    for frame_dets in detections:
        for d in frame_dets:
            if not 0 <= d.frame < n_frames:
                raise ValueError(f"detection frame {d.frame} outside [0, {n_frames})")
            w = float(np.clip(d.weight, 0.0, 1.0))
            if w > o[d.frame, d.bin]:
                o[d.frame, d.bin] = w
    return DoaMatrix(o, frame_period, grid)


def nearest_indices(n_src: int, n_dst: int) -> np.ndarray:
    """Source row for each target row: ``floor(t * n_src / n_dst)``."""
    if n_src <= 0:
        raise ValueError("cannot interpolate an empty DOA matrix")
    return (np.arange(n_dst) * n_src) // n_dst


def interpolate_nearest(o: DoaMatrix, target_frames: int, frame_period: float | None = None) -> DoaMatrix:
    if o.n_frames == 0:
        raise ValueError("cannot interpolate an empty DOA matrix")
    if target_frames < o.n_frames:
        raise ValueError("target frame count must not be smaller than the source")
    idx = nearest_indices(o.n_frames, target_frames)
    if frame_period is None:
        frame_period = o.frame_period * o.n_frames / target_frames
    return DoaMatrix(o.values[idx], frame_period, o.grid)


def fuse_additive(x: np.ndarray, o, w: np.ndarray) -> np.ndarray:
    """Residual fusion ``X + (O W) / sqrt(D)``.

    ``x`` is (T, D), ``o`` a DoaMatrix or (T, A) array, ``w`` (A, D).
    """
    x = np.asarray(x, dtype=float)
    ov = o.values if isinstance(o, DoaMatrix) else np.asarray(o, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.ndim != 2 or ov.ndim != 2 or w.ndim != 2:
        raise ValueError("fuse_additive expects 2-D operands")
    if ov.shape[0] != x.shape[0] or ov.shape[1] != w.shape[0] or w.shape[1] != x.shape[1]:
        raise ValueError(f"shape mismatch: X {x.shape}, O {ov.shape}, W {w.shape}")
    return x + (ov @ w) / np.sqrt(x.shape[1])


def random_projection(n_bins: int, dim: int, seed: int) -> np.ndarray:
    """Seeded Gaussian stand-in for the learned A -> D projection."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_bins, dim)) / np.sqrt(n_bins)


def write_doa_matrix_csv(o: DoaMatrix, fh=None) -> str:
    """One row per frame: ``frame,time_s`` then one column per bin centre."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["frame", "time_s"] + [f"az{c:g}" for c in o.grid.centers_deg])
    for t, row in enumerate(o.values):
        wr.writerow([t, f"{t * o.frame_period:.6f}"] + [f"{v:.6g}" for v in row])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_doa_matrix_csv(text: str, grid: AzimuthGrid = AzimuthGrid()) -> DoaMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty DOA matrix CSV")
    body = rows[1:]
    vals = np.array([[float(v) for v in r[2:]] for r in body]).reshape(len(body), grid.n_bins)
    period = float(body[1][1]) - float(body[0][1]) if len(body) > 1 else 0.0
    return DoaMatrix(vals, period, grid)
