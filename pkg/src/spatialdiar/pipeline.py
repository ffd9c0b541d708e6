"""End-to-end drivers: audio -> DP-IPD -> spectra -> detections -> segments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .evaluation import SpeakerSegments
from .geometry import ArrayGeometry, AzimuthGrid
from .localizer import IdlConfig, SourceDetection, SteeringTable, idl_localize_spectra, srp_spectra
from .providers import PhatProvider, SourceActivity, oracle_dpipd_batches
from .stft import StftConfig, stft
from .streaming import BlockConfig, stream_blocks
from .tracker import TrackerConfig, associate_detections, tracks_to_segments

__all__ = ["Localization", "LocalizerSettings", "block_processor", "diarize", "localize", "localize_online"]


@dataclass
class LocalizerSettings:
    geometry: ArrayGeometry
    stft: StftConfig = StftConfig()
    grid: AzimuthGrid = AzimuthGrid()
    idl: IdlConfig = IdlConfig()
    alpha: float = 0.6
    batch: int = 256
    _steering: SteeringTable | None = field(default=None, repr=False, compare=False)

    @property
    def steering(self) -> SteeringTable:
        if self._steering is None:
            self._steering = SteeringTable(self.geometry, self.grid, self.stft.freqs)
        return self._steering


@dataclass
class Localization:
    detections: list[list[SourceDetection]]
    frame_period: float
    spectra: np.ndarray | None = None

    @property
    def n_frames(self) -> int:
        return len(self.detections)


def _run(batches, settings: LocalizerSettings, keep_spectra: bool):
    dets: list[list[SourceDetection]] = []
    kept = []
    for start, values in batches:
        spec = srp_spectra(values, settings.steering)
        if keep_spectra:
            kept.append(spec)
        dets.extend(idl_localize_spectra(spec, settings.idl, settings.steering, start))
    spectra = np.concatenate(kept) if kept else None
    if keep_spectra and spectra is None:
        spectra = np.zeros((0, settings.grid.n_bins))
    return dets, spectra


def localize(audio, settings: LocalizerSettings, provider: str = "phat", activity: SourceActivity | None = None, keep_spectra: bool = False) -> Localization:
    """Offline localization of a (M, N) recording."""
    audio = np.asarray(audio, dtype=float)
    if audio.shape[0] != settings.geometry.n_mics:
        raise ValueError(
            f"audio has {audio.shape[0]} channels, geometry has {settings.geometry.n_mics}"
        )
    if provider == "phat":
        frames = stft(audio, settings.stft)
        batches = PhatProvider(settings.alpha).batches(frames, settings.batch)
    elif provider == "oracle":
        if activity is None:
            raise ValueError("oracle provider needs ground-truth activity")
        batches = oracle_dpipd_batches(settings.geometry, settings.stft.freqs, activity, settings.batch)
    else:
        raise ValueError(f"unknown provider {provider!r}")
    dets, spectra = _run(batches, settings, keep_spectra)
    return Localization(dets, settings.stft.frame_period, spectra)


def block_processor(settings: LocalizerSettings, keep_spectra: bool = False):
    """PHAT + IDL over one block, with the smoother reset at the block start.

    Returns one item per hop-spaced frame start in the window; items are
    detection lists, or ``(detections, spectrum)`` when ``keep_spectra``.
    """
    cfg = settings.stft

    def process(window: np.ndarray):
        n = window.shape[1]
        units = -(-n // cfg.hop)
        # pad so every hop-aligned start in the window owns a full frame
        need = (units - 1) * cfg.hop + cfg.fft_size
        padded = np.pad(window, ((0, 0), (0, need - n)))
        frames = stft(padded, cfg)
        dets, spectra = _run(PhatProvider(settings.alpha).batches(frames, settings.batch), settings, True)
        if keep_spectra:
            return list(zip(dets, spectra))
        return dets

    return process


def localize_online(audio, settings: LocalizerSettings, block: BlockConfig = BlockConfig(), keep_spectra: bool = False) -> Localization:
    """Block-wise localization; frames are emitted per chunk only."""
    audio = np.asarray(audio, dtype=float)
    items = stream_blocks(audio, block, block_processor(settings, keep_spectra), settings.stft.sample_rate, settings.stft.hop)
    if keep_spectra:
        dets = [d for d, _ in items]
        spectra = np.array([s for _, s in items]).reshape(len(items), settings.grid.n_bins)
    else:
        dets, spectra = list(items), None
    dets = [[dataclasses.replace(d, frame=t) for d in frame_dets] for t, frame_dets in enumerate(dets)]
    return Localization(dets, settings.stft.frame_period, spectra)


def diarize(loc: Localization, tracker: TrackerConfig = TrackerConfig(), recording: str = "rec", offset: float = 0.0) -> SpeakerSegments:
    tracks = associate_detections(loc.detections, tracker)
    return tracks_to_segments(tracks, tracker, loc.frame_period, recording, offset)
