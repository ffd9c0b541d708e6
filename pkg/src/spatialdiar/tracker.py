"""DOA-only diarization: gated azimuth tracks turned into speaker segments.

This is a deliberately simple stand-in for a neural diarizer. It exists so
that localization quality can be scored end to end in DER terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .evaluation import Segment, SpeakerSegments
from .localizer import SourceDetection
from .pseudo_doa import circular_distance_deg

__all__ = ["Track", "TrackerConfig", "associate_detections", "circular_mean_deg", "tracks_to_segments"]


def circular_mean_deg(angles_deg, weights=None) -> float:
    a = np.radians(np.asarray(angles_deg, dtype=float))
    w = np.ones_like(a) if weights is None else np.asarray(weights, dtype=float)
    return float(np.degrees(np.arctan2((w * np.sin(a)).sum(), (w * np.cos(a)).sum())))


@dataclass(frozen=True)
class TrackerConfig:
    gate_deg: float = 15.0
    max_gap_frames: int = 25
    min_track_frames: int = 12
    merge_threshold_deg: float = 10.0

    def __post_init__(self):
        if self.gate_deg <= 0:
            raise ValueError("gate_deg must be positive")
        if self.merge_threshold_deg > self.gate_deg:
            raise ValueError("merge_threshold_deg must not exceed gate_deg")


@dataclass
class Track:
    track_id: int
    points: list[tuple[int, float, float]] = field(default_factory=list)  # (frame, az, weight)
    _cos: float = 0.0
    _sin: float = 0.0

    def add(self, frame: int, azimuth_deg: float, weight: float):
        if self.points and frame <= self.points[-1][0]:
            raise ValueError("track frames must be strictly increasing")
        self.points.append((frame, azimuth_deg, weight))
        r = math.radians(azimuth_deg)
        self._cos += math.cos(r)
        self._sin += math.sin(r)

    @property
    def mean_azimuth(self) -> float:
        return math.degrees(math.atan2(self._sin, self._cos))

    @property
    def frames(self) -> list[int]:
        return [p[0] for p in self.points]

    @property
    def first_frame(self) -> int:
        return self.points[0][0]

    @property
    def last_frame(self) -> int:
        return self.points[-1][0]

    def __len__(self):
        return len(self.points)


def associate_detections(detections: Iterable[Sequence[SourceDetection]], cfg: TrackerConfig = TrackerConfig()) -> list[Track]:
    """Greedy gated nearest-neighbour association over frames.

    ``detections`` yields one list per frame. Within a frame, stronger
    detections pick first; each live track takes at most one detection.
    """
    live: list[Track] = []
    closed: list[Track] = []
    next_id = 0
    for frame_dets in detections:
        if not frame_dets:
            continue
        frame = frame_dets[0].frame
        still = []
        for tr in live:
            (closed if frame - tr.last_frame > cfg.max_gap_frames else still).append(tr)
        live = still
        taken: set[int] = set()
        for det in sorted(frame_dets, key=lambda d: (-d.weight, d.bin)):
            best, best_d = None, math.inf
            for k, tr in enumerate(live):
                if k in taken:
                    continue
                d = float(circular_distance_deg(det.azimuth_deg, tr.mean_azimuth))
                if d <= cfg.gate_deg and d < best_d:
                    best, best_d = k, d
            if best is None:
                tr = Track(next_id)
                next_id += 1
                tr.add(frame, det.azimuth_deg, det.weight)
                live.append(tr)
                taken.add(len(live) - 1)
            else:
                live[best].add(frame, det.azimuth_deg, det.weight)
                taken.add(best)
    closed.extend(live)
    kept = [t for t in closed if len(t) >= cfg.min_track_frames]
    return sorted(kept, key=lambda t: (t.first_frame, t.track_id))


def _merge_groups(tracks: list[Track], threshold: float) -> list[list[Track]]:
    parent = list(range(len(tracks)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(tracks)):
        for j in range(i + 1, len(tracks)):
            if circular_distance_deg(tracks[i].mean_azimuth, tracks[j].mean_azimuth) < threshold:
                parent[find(j)] = find(i)
    groups: dict[int, list[Track]] = {}
    for i, t in enumerate(tracks):
        groups.setdefault(find(i), []).append(t)
    return sorted(groups.values(), key=lambda g: min(t.first_frame for t in g))


def tracks_to_segments(tracks: list[Track], cfg: TrackerConfig = TrackerConfig(), frame_period: float = 0.016, recording: str = "rec", offset: float = 0.0) -> SpeakerSegments:
    """Merge nearby tracks into speakers and emit their frame spans as segments.

    Frame ``n`` spans ``[offset + n * frame_period, offset + (n+1) * frame_period)``.
    Gaps of at most ``max_gap_frames`` inside a speaker are bridged.
    """
    segs = []
    for k, group in enumerate(_merge_groups(tracks, cfg.merge_threshold_deg)):
        label = f"spk{k:02d}"
        frames = np.unique(np.concatenate([np.asarray(t.frames) for t in group]))
        breaks = np.flatnonzero(np.diff(frames) > cfg.max_gap_frames + 1)
        starts = np.concatenate([[frames[0]], frames[breaks + 1]])
        ends = np.concatenate([frames[breaks], [frames[-1]]])
        for a, b in zip(starts, ends):
            on = max(offset + a * frame_period, 0.0)
            segs.append(Segment(label, on, offset + (b + 1) * frame_period - on))
    return SpeakerSegments(recording, segs)
