"""Short-time Fourier analysis of multichannel signals (analysis only)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

__all__ = ["StftConfig", "StftFrames", "stft", "n_frames"]


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters. DC is dropped; bins 1..fft_size/2 are kept."""

    sample_rate: int = 16000
    fft_size: int = 512
    hop: int = 256
    window: str = "hann"

    def __post_init__(self):
        if self.fft_size <= 0 or self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if not 0 < self.hop <= self.fft_size:
            raise ValueError("hop must lie in (0, fft_size]")

    @property
    def bin_indices(self) -> np.ndarray:
        return np.arange(1, self.fft_size // 2 + 1)

    @property
    def freqs(self) -> np.ndarray:
        return self.bin_indices * self.sample_rate / self.fft_size

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2

    @property
    def frame_period(self) -> float:
        return self.hop / self.sample_rate

    def window_array(self) -> np.ndarray:
        # periodic Hann, the usual choice for analysis
        return get_window(self.window, self.fft_size, fftbins=True)


@dataclass
class StftFrames:
    """Spectra indexed (channel, frame, bin) plus the config they came from."""

    values: np.ndarray
    config: StftConfig

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def freqs(self) -> np.ndarray:
        return self.config.freqs

    def times(self) -> np.ndarray:
        """Frame start times ``n * hop / sample_rate``."""
        return np.arange(self.n_frames) * self.config.frame_period


def n_frames(n_samples: int, cfg: StftConfig) -> int:
    if n_samples < cfg.fft_size:
        return 0
    return (n_samples - cfg.fft_size) // cfg.hop + 1


def stft(signal, cfg: StftConfig = StftConfig()) -> StftFrames:
    """Hann-windowed STFT of a (M, N) or (N,) signal.

    Frame ``n`` covers samples ``[n*hop, n*hop + fft_size)``.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("signal must be 1-D or (channels, samples)")
    if x.shape[1] < cfg.fft_size:
        raise ValueError("input too short")
    frames = sliding_window_view(x, cfg.fft_size, axis=1)[:, :: cfg.hop, :]
    spec = np.fft.rfft(frames * cfg.window_array(), axis=-1)
    return StftFrames(spec[..., 1:], cfg)
