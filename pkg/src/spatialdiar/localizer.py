"""SRP-style spatial spectrum and iterative detection-and-removal (IDL).

The spectrum of a field ``R`` at direction ``theta`` is

    P'(theta) = 2 / (M (M-1) F) * sum_{m<m'} Re{ R_mm'^H r_mm'(theta) }

so a unit-weight single-source field scores exactly 1 at its own direction.
Because the spectrum is linear in ``R``, removing ``beta * r(theta_b)`` from
the field subtracts ``beta * gram[b]`` from the spectrum, where ``gram`` is
the spectrum of each grid steering field over the grid. The batched path
uses that identity; the field path does the subtraction explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, AzimuthGrid, DpIpdField

__all__ = [
    "IdlConfig",
    "SourceDetection",
    "SpatialSpectrum",
    "SteeringTable",
    "detect_peak",
    "estimate_weight",
    "idl_from_spectrum",
    "idl_localize",
    "idl_localize_spectra",
    "remove_source",
    "srp_spectra",
    "srp_spectrum",
]


class SteeringTable:
    """Grid steering fields, shape (A, P, F), plus their Gram spectrum (A, A).

    Built once per (geometry, grid, frequencies) and shared read-only.
    """

    def __init__(self, geom: ArrayGeometry, grid: AzimuthGrid, freqs):
        self.geom = geom
        self.grid = grid
        self.freqs = np.asarray(freqs, dtype=float)
        tau = np.stack([geom.pair_delays(theta) for theta in grid.angles()])  # (A, P)
        self.values = np.exp(-2j * np.pi * tau[:, :, None] * self.freqs[None, None, :])
        self._flat = self.values.reshape(grid.n_bins, -1)
        self.norm = 1.0 / (geom.n_pairs * self.freqs.size)
        self.gram = np.real(np.conj(self._flat) @ self._flat.T) * self.norm

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1:]

    def field(self, a: int) -> DpIpdField:
        return DpIpdField(self.values[a], self.freqs)

    def check(self, values: np.ndarray):
        if values.shape[-2:] != self.shape:
            raise ValueError(
                f"field layout {values.shape[-2:]} does not match steering layout {self.shape}"
            )


@dataclass
class SpatialSpectrum:
    values: np.ndarray
    grid: AzimuthGrid

    def argmax(self) -> int:
        return int(np.argmax(self.values))


@dataclass(frozen=True)
class SourceDetection:
    frame: int
    bin: int
    azimuth_deg: float
    weight: float


@dataclass(frozen=True)
class IdlConfig:
    n_max: int = 2
    w_min: float = 0.15
    min_separation_bins: int = 2

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not 0.0 < self.w_min < 1.0:
            raise ValueError("w_min must lie in (0, 1)")
        if self.min_separation_bins < 0:
            raise ValueError("min_separation_bins must be >= 0")


def srp_spectrum(rhat: DpIpdField, steering: SteeringTable) -> SpatialSpectrum:
    steering.check(rhat.values)
    vals = np.real(steering._flat @ np.conj(rhat.values.ravel())) * steering.norm
    return SpatialSpectrum(vals, steering.grid)


def srp_spectra(values: np.ndarray, steering: SteeringTable) -> np.ndarray:
    """Spectra for a stack of fields (T, P, F) -> (T, A)."""
    steering.check(values)
    flat = np.conj(values.reshape(values.shape[0], -1))
    return np.real(flat @ steering._flat.T) * steering.norm


def detect_peak(spec, exclude=None) -> tuple[int, float]:
    """Dominant bin and its value; ties go to the lowest bin.

    ``exclude`` is an optional boolean mask of bins that may not be chosen.
    """
    vals = spec.values if isinstance(spec, SpatialSpectrum) else np.asarray(spec)
    if vals.size == 0:
        raise ValueError("empty spectrum")
    if exclude is not None:
        vals = np.where(exclude, -np.inf, vals)
    b = int(np.argmax(vals))
    return b, float(vals[b])


def estimate_weight(rhat: DpIpdField, theta_hat: int, steering: SteeringTable) -> float:
    """Energy fraction of ``rhat`` along the steering field of bin ``theta_hat``."""
    steering.check(rhat.values)
    proj = np.real(np.vdot(rhat.values, steering.values[theta_hat])) * steering.norm
    return float(np.clip(proj, 0.0, 1.0))


def remove_source(rhat: DpIpdField, theta_hat: int, beta_hat: float, steering: SteeringTable) -> DpIpdField:
    return DpIpdField(rhat.values - beta_hat * steering.values[theta_hat], rhat.freqs)


def _excluded(grid: AzimuthGrid, found: list[int], radius: int) -> np.ndarray:
    mask = np.zeros(grid.n_bins, dtype=bool)
    if radius > 0:
        bins = np.arange(grid.n_bins)
        for b in found:
            mask |= grid.bin_distance(bins, b) < radius
    else:
        mask[found] = True
    return mask


def _finish(grid: AzimuthGrid, frame: int, found: list[tuple[int, float]]) -> list[SourceDetection]:
    found = sorted(found, key=lambda bw: -bw[1])
    return [SourceDetection(frame, b, float(grid.center_deg(b)), w) for b, w in found]


def idl_localize(rhat: DpIpdField, cfg: IdlConfig, steering: SteeringTable, frame: int = 0) -> list[SourceDetection]:
    """Detect, weigh and remove sources one at a time from a single field."""
    grid = steering.grid
    found: list[tuple[int, float]] = []
    resid = rhat
    while len(found) < cfg.n_max:
        spec = srp_spectrum(resid, steering)
        mask = _excluded(grid, [b for b, _ in found], cfg.min_separation_bins)
        if mask.all():
            break
        b, _ = detect_peak(spec, mask)
        w = estimate_weight(resid, b, steering)
        if w < cfg.w_min:
            break
        found.append((b, w))
        resid = remove_source(resid, b, w, steering)
    return _finish(grid, frame, found)


def idl_from_spectrum(spectrum: np.ndarray, cfg: IdlConfig, steering: SteeringTable, frame: int = 0) -> list[SourceDetection]:
    """IDL driven from a precomputed spectrum, deflating through the Gram matrix."""
    grid = steering.grid
    spec = np.array(spectrum, dtype=float)
    found: list[tuple[int, float]] = []
    while len(found) < cfg.n_max:
        mask = _excluded(grid, [b for b, _ in found], cfg.min_separation_bins)
        if mask.all():
            break
        b, v = detect_peak(spec, mask)
        w = float(np.clip(v, 0.0, 1.0))
        if w < cfg.w_min:
            break
        found.append((b, w))
        spec -= w * steering.gram[b]
    return _finish(grid, frame, found)


def idl_localize_spectra(spectra: np.ndarray, cfg: IdlConfig, steering: SteeringTable, first_frame: int = 0) -> list[list[SourceDetection]]:
    """Run IDL on every row of a (T, A) spectrum stack."""
    peaks = spectra.max(axis=1)
    out = []
    for t, row in enumerate(spectra):
        if peaks[t] < cfg.w_min:
            out.append([])
        else:
            out.append(idl_from_spectrum(row, cfg, steering, first_frame + t))
    return out
