"""Providers of the per-frame summed DP-IPD field consumed by the localizer.

Two providers share one output layout, ``(frames, pairs, freqs)``:

* the oracle builds the ground-truth weighted sum of steering fields from
  known directions and activity weights;
* the PHAT provider estimates it from audio: phase-transformed pair
  cross-spectra followed by causal exponential smoothing.

Cross-spectra are formed as ``conj(X_m) * X_m'`` so that, under the
``exp(-i w t)`` DFT convention, a plane wave from ``theta`` yields exactly
``dp_ipd(theta)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.signal import lfilter

from .geometry import ArrayGeometry, DoaAngle, DpIpdField
from .stft import StftFrames

__all__ = [
    "EPS",
    "SourceActivity",
    "SmoothingState",
    "oracle_summed_dpipd",
    "oracle_dpipd_batches",
    "phat_instant",
    "phat_summed_dpipd",
    "PhatProvider",
]

EPS = 1e-12


@dataclass
class SourceActivity:
    """Per-frame active sources: ``frames[n]`` is a list of ``(DoaAngle, beta)``."""

    frames: list[list[tuple[DoaAngle, float]]] = field(default_factory=list)

    def __post_init__(self):
        for n, active in enumerate(self.frames):
            for _, beta in active:
                if not 0.0 <= beta <= 1.0:
                    raise ValueError(f"frame {n}: activity weight {beta} outside [0, 1]")

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, n):
        return self.frames[n]

    def source_count(self, n: int) -> int:
        return len(self.frames[n])


def oracle_summed_dpipd(geom: ArrayGeometry, freqs, activity: Sequence[tuple[DoaAngle, float]]) -> DpIpdField:
    """Ground-truth field ``sum_k beta_k * r(theta_k)`` for one frame."""
    freqs = np.asarray(freqs, dtype=float)
    values = np.zeros((geom.n_pairs, freqs.size), dtype=complex)
    for theta, beta in activity:
        if beta:
            tau = geom.pair_delays(theta)
            values += beta * np.exp(-2j * np.pi * tau[:, None] * freqs[None, :])
    return DpIpdField(values, freqs)


def oracle_dpipd_batches(geom: ArrayGeometry, freqs, activity: SourceActivity, batch: int = 256) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(start_frame, values)`` blocks of oracle fields, shape (B, P, F)."""
    freqs = np.asarray(freqs, dtype=float)
    cache: dict[DoaAngle, np.ndarray] = {}
    for start in range(0, len(activity), batch):
        stop = min(start + batch, len(activity))
        out = np.zeros((stop - start, geom.n_pairs, freqs.size), dtype=complex)
        for n in range(start, stop):
            for theta, beta in activity[n]:
                if theta not in cache:
                    tau = geom.pair_delays(theta)
                    cache[theta] = np.exp(-2j * np.pi * tau[:, None] * freqs[None, :])
                out[n - start] += beta * cache[theta]
        yield start, out


def phat_instant(spectra: np.ndarray) -> np.ndarray:
    """PHAT-normalized pair cross-spectra.

    ``spectra`` is (M, ..., F); the result is (..., P, F) with zeros wherever
    the cross-power magnitude is below ``EPS``.
    """
    m = spectra.shape[0]
    i, j = np.triu_indices(m, 1)
    cross = np.conj(spectra[i]) * spectra[j]
    mag = np.abs(cross)
    out = np.divide(cross, mag, out=np.zeros_like(cross), where=mag >= EPS)
    # pairs axis after the frame axes
    return np.moveaxis(out, 0, -2)


@dataclass
class SmoothingState:
    """Carry for the exponential smoother; ``previous`` is (P, F) or None."""

    alpha: float = 0.6
    previous: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")


def phat_summed_dpipd(frames: StftFrames, n: int, state: SmoothingState) -> tuple[DpIpdField, SmoothingState]:
    """One causal step of the PHAT provider at frame ``n``."""
    if not 0 <= n < frames.n_frames:
        raise IndexError(f"frame {n} out of range")
    inst = phat_instant(frames.values[:, n, :])
    if state.previous is not None and state.previous.shape != inst.shape:
        raise ValueError("smoothing state does not match pair/frequency layout")
    prev = np.zeros_like(inst) if state.previous is None else state.previous
    smoothed = state.alpha * prev + (1.0 - state.alpha) * inst
    return DpIpdField(smoothed, frames.freqs), SmoothingState(state.alpha, smoothed)


class PhatProvider:
    """Stateful PHAT estimator for one audio stream.

    Frames may be fed in arbitrary batches; output is identical to stepping
    ``phat_summed_dpipd`` frame by frame.
    """

    def __init__(self, alpha: float = 0.6):
        self.state = SmoothingState(alpha)

    @property
    def alpha(self) -> float:
        return self.state.alpha

    def reset(self):
        self.state = SmoothingState(self.state.alpha)

    def process(self, spectra: np.ndarray) -> np.ndarray:
        """Smoothed fields for a (M, T, F) block of spectra, shape (T, P, F)."""
        inst = phat_instant(spectra)
        if inst.shape[0] == 0:
            return inst
        a = self.state.alpha
        prev = self.state.previous
        zi = None if prev is None else (a * prev)[None]
        if zi is None:
            out = lfilter([1.0 - a], [1.0, -a], inst, axis=0)
        else:
            out, _ = lfilter([1.0 - a], [1.0, -a], inst, axis=0, zi=zi)
        self.state = SmoothingState(a, out[-1].copy())
        return out

    def batches(self, frames: StftFrames, batch: int = 256) -> Iterator[tuple[int, np.ndarray]]:
        for start in range(0, frames.n_frames, batch):
            yield start, self.process(frames.values[:, start : start + batch])
