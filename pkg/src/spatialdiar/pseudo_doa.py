"""Pseudo-DOA targets for single-channel simulated mixtures.

Each speaker gets a random base azimuth (pairwise separated), perturbed
per active frame by a reflected Gaussian random walk. The result is a DOA
matrix in the same format the localizer produces for real recordings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .evaluation import SpeakerSegments
from .features import DoaMatrix
from .geometry import AzimuthGrid, wrap_degrees

__all__ = [
    "MAX_ATTEMPTS",
    "PseudoDoaConfig",
    "VadTimeline",
    "circular_distance_deg",
    "simulate_pseudo_doa",
    "write_tracks_csv",
]

MAX_ATTEMPTS = 10_000
MAX_ACTIVE = 2


def circular_distance_deg(a, b):
    d = np.abs(wrap_degrees(np.asarray(a) - np.asarray(b)))
    return np.minimum(d, 360.0 - d)


@dataclass
class VadTimeline:
    """Per-speaker sorted, non-overlapping ``(onset, offset)`` intervals in seconds."""

    intervals: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    def __post_init__(self):
        for spk, ivs in self.intervals.items():
            last = -math.inf
            for on, off in ivs:
                if off < on or on < last:
                    raise ValueError(f"speaker {spk}: intervals must be sorted and disjoint")
                last = off

    @property
    def speakers(self) -> list[str]:
        return sorted(self.intervals)

    @property
    def n_speakers(self) -> int:
        return len(self.intervals)

    def end(self) -> float:
        return max((ivs[-1][1] for ivs in self.intervals.values() if ivs), default=0.0)

    @classmethod
    def from_segments(cls, segs: SpeakerSegments) -> "VadTimeline":
        """Build from RTTM segments, merging overlapping turns per speaker."""
        per: dict[str, list[tuple[float, float]]] = {}
        for s in sorted(segs.segments, key=lambda s: (s.speaker, s.onset)):
            ivs = per.setdefault(s.speaker, [])
            if ivs and s.onset <= ivs[-1][1]:
                ivs[-1] = (ivs[-1][0], max(ivs[-1][1], s.offset))
            else:
                ivs.append((s.onset, s.offset))
        return cls(per)


@dataclass(frozen=True)
class PseudoDoaConfig:
    seed: int = 0
    min_separation_deg: float = 20.0
    jitter_std_deg: float = 1.0
    max_drift_deg: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.min_separation_deg <= 180.0:
            raise ValueError("min_separation_deg must lie in [0, 180]")
        if self.jitter_std_deg < 0 or self.max_drift_deg < 0:
            raise ValueError("jitter and drift must be non-negative")


def _draw_bases(rng: np.random.Generator, n: int, min_sep: float) -> np.ndarray:
    bases: list[float] = []
    attempts = 0
    while len(bases) < n:
        if attempts >= MAX_ATTEMPTS:
            raise ValueError(
                f"could not place {n} speakers {min_sep} degrees apart in {MAX_ATTEMPTS} attempts"
            )
        attempts += 1
        cand = rng.uniform(-180.0, 180.0)
        if all(circular_distance_deg(cand, b) >= min_sep for b in bases):
            bases.append(cand)
    return np.array(bases)


def _reflected_walk(rng: np.random.Generator, n: int, std: float, bound: float) -> np.ndarray:
    # folding the free walk into [-bound, bound] reflects it at both walls
    free = np.cumsum(rng.normal(0.0, std, n)) if std > 0 else np.zeros(n)
    if bound == 0:
        return np.zeros(n)
    period = 4.0 * bound
    y = np.mod(free + bound, period)
    y = np.where(y > 2.0 * bound, period - y, y)
    return y - bound


def _frame_state(vad: VadTimeline, n_frames: int, frame_period: float):
    """Per speaker: active mask and remaining seconds in the current interval."""
    centers = (np.arange(n_frames) + 0.5) * frame_period
    active = {}
    remaining = {}
    for spk in vad.speakers:
        act = np.zeros(n_frames, dtype=bool)
        rem = np.zeros(n_frames)
        for on, off in vad.intervals[spk]:
            sel = (centers >= on) & (centers < off)
            act |= sel
            rem[sel] = off - centers[sel]
        active[spk] = act
        remaining[spk] = rem
    return active, remaining


def simulate_pseudo_doa(vad: VadTimeline, cfg: PseudoDoaConfig, frame_period: float = 0.016, duration: float | None = None, grid: AzimuthGrid = AzimuthGrid()):
    """Generate a pseudo-DOA matrix and ground-truth azimuth tracks.

    Returns ``(DoaMatrix, tracks)`` where ``tracks[speaker]`` is a list of
    ``(frame, azimuth_deg)`` over every active frame of that speaker. The
    matrix keeps at most two speakers per frame, dropping whoever has the
    least time left in the current turn.
    """
    if duration is None:
        duration = vad.end()
    if vad.end() > duration + 1e-9:
        raise ValueError("duration does not cover all VAD intervals")
    n_frames = int(math.ceil(duration / frame_period - 1e-9))
    rng = np.random.default_rng(cfg.seed)
    speakers = vad.speakers
    bases = _draw_bases(rng, len(speakers), cfg.min_separation_deg)
    active, remaining = _frame_state(vad, n_frames, frame_period)

    az = {}
    tracks: dict[str, list[tuple[int, float]]] = {}
    for spk, base in zip(speakers, bases):
        frames = np.flatnonzero(active[spk])
        walk = _reflected_walk(rng, frames.size, cfg.jitter_std_deg, cfg.max_drift_deg)
        track = wrap_degrees(base + walk)
        full = np.full(n_frames, np.nan)
        full[frames] = track
        az[spk] = full
        if frames.size:
            tracks[spk] = list(zip(frames.tolist(), track.tolist()))

    o = np.zeros((n_frames, grid.n_bins))
    if speakers:
        act = np.stack([active[s] for s in speakers])
        rem = np.stack([remaining[s] for s in speakers])
        azm = np.stack([az[s] for s in speakers])
        for t in np.flatnonzero(act.any(axis=0)):
            idx = np.flatnonzero(act[:, t])
            if idx.size > MAX_ACTIVE:
                # longest remaining first; stable sort keeps speaker order on ties
                idx = idx[np.argsort(-rem[idx, t], kind="stable")[:MAX_ACTIVE]]
            o[t, grid.quantize_deg(azm[idx, t])] = 1.0
    matrix = DoaMatrix(o, frame_period, grid)
    return matrix, tracks, dict(zip(speakers, bases.tolist()))


def write_tracks_csv(tracks: dict[str, list[tuple[int, float]]], fh=None) -> str:
    """``frame,speaker,azimuth_deg`` rows sorted by frame then speaker."""
    rows = sorted((f, spk, a) for spk, pts in tracks.items() for f, a in pts)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["frame", "speaker", "azimuth_deg"])
    for f, spk, a in rows:
        wr.writerow([f, spk, f"{a:.4f}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
