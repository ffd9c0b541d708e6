"""RTTM reading/writing and frame-based diarization error rate.

Scoring follows the strict protocol: no forgiveness collar and no oracle
speech activity unless explicitly requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "DerResult",
    "RttmError",
    "Segment",
    "SpeakerSegments",
    "compute_der",
    "format_der_csv",
    "format_der_table",
    "parse_rttm",
    "read_rttm",
    "speaker_frames",
    "write_rttm",
]


class RttmError(ValueError):
    """Malformed RTTM input."""


@dataclass(frozen=True, order=True)
class Segment:
    speaker: str
    onset: float
    duration: float

    @property
    def offset(self) -> float:
        return self.onset + self.duration


@dataclass
class SpeakerSegments:
    recording: str
    segments: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        for s in self.segments:
            if s.duration <= 0 or s.onset < 0:
                raise ValueError(f"invalid segment {s}")

    @property
    def speakers(self) -> list[str]:
        return sorted({s.speaker for s in self.segments})

    def total_duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def end(self) -> float:
        return max((s.offset for s in self.segments), default=0.0)

    def __eq__(self, other):
        if not isinstance(other, SpeakerSegments):
            return NotImplemented
        return self.recording == other.recording and sorted(self.segments) == sorted(other.segments)


def parse_rttm(text: str) -> dict[str, SpeakerSegments]:
    """Parse RTTM text into per-recording segment lists.

    Only ``SPEAKER`` records are kept; blank lines and ``#``/``;;`` comments
    are skipped. Zero-length segments are dropped.
    """
    out: dict[str, SpeakerSegments] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";;"):
            continue
        parts = line.split()
        if len(parts) not in (9, 10):
            raise RttmError(f"line {lineno}: expected 10 fields, got {len(parts)}")
        if parts[0] != "SPEAKER":
            continue
        try:
            onset = float(parts[3])
            dur = float(parts[4])
        except ValueError:
            raise RttmError(f"line {lineno}: non-numeric onset or duration") from None
        if not (math.isfinite(onset) and math.isfinite(dur)) or onset < 0 or dur < 0:
            raise RttmError(f"line {lineno}: invalid onset/duration {onset} {dur}")
        rec = out.setdefault(parts[1], SpeakerSegments(parts[1]))
        if dur > 0:
            rec.segments.append(Segment(parts[7], onset, dur))
    return out


def read_rttm(path) -> dict[str, SpeakerSegments]:
    with open(path) as fh:
        return parse_rttm(fh.read())


def _floor_cs(x: float) -> int:
    # centiseconds, tolerant of binary representation just below a tick
    return int(math.floor(x * 100.0 + 1e-6))


def write_rttm(segments, channel: int = 1) -> str:
    """Serialize SpeakerSegments (or an iterable of them) at 10 ms precision.

    Onset and duration are each floored to 10 ms; segments that floor to zero
    length are omitted.
    """
    if isinstance(segments, SpeakerSegments):
        segments = [segments]
    elif isinstance(segments, dict):
        segments = list(segments.values())
    lines = []
    for rec in segments:
        for s in sorted(rec.segments, key=lambda s: (s.onset, s.speaker, s.duration)):
            on, du = _floor_cs(s.onset), _floor_cs(s.duration)
            if du <= 0:
                continue
            lines.append(
                f"SPEAKER {rec.recording} {channel} {on / 100:.2f} {du / 100:.2f} <NA> <NA> {s.speaker} <NA> <NA>"
            )
    return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class DerResult:
    missed_speech: float
    false_alarm: float
    speaker_confusion: float
    der: float
    total_reference_seconds: float
    mapping: dict = field(default_factory=dict, compare=False)


def speaker_frames(segs: SpeakerSegments, n_frames: int, frame_period: float) -> tuple[list[str], np.ndarray]:
    """Boolean activity matrix (speakers x frames) on a uniform grid."""
    labels = segs.speakers
    act = np.zeros((len(labels), n_frames), dtype=bool)
    row = {lab: i for i, lab in enumerate(labels)}
    for s in segs.segments:
        a = int(round(s.onset / frame_period))
        b = int(round(s.offset / frame_period))
        act[row[s.speaker], max(a, 0) : min(b, n_frames)] = True
    return labels, act


def _scored_mask(ref_act, ref: SpeakerSegments, n_frames, frame_period, collar, oracle_vad):
    mask = np.ones(n_frames, dtype=bool)
    if oracle_vad:
        mask &= ref_act.any(axis=0)
    if collar > 0:
        c = int(round(collar / frame_period))
        for s in ref.segments:
            for edge in (s.onset, s.offset):
                e = int(round(edge / frame_period))
                mask[max(e - c, 0) : min(e + c, n_frames)] = False
    return mask


def compute_der(reference: SpeakerSegments, hypothesis: SpeakerSegments, frame_period: float = 0.01, collar: float = 0.0, oracle_vad: bool = False) -> DerResult:
    """Frame-based DER under the optimal one-to-one speaker mapping.

    Per frame, ``error = max(N_ref, N_hyp) - N_correct``; missed speech and
    false alarm are the count shortfalls and excesses, confusion the rest.
    """
    if reference.recording != hypothesis.recording:
        raise ValueError(
            f"recording mismatch: {reference.recording!r} vs {hypothesis.recording!r}"
        )
    n = int(math.ceil(max(reference.end(), hypothesis.end()) / frame_period)) + 1
    ref_labels, ref_act = speaker_frames(reference, n, frame_period)
    hyp_labels, hyp_act = speaker_frames(hypothesis, n, frame_period)
    keep = _scored_mask(ref_act, reference, n, frame_period, collar, oracle_vad)
    ref_act = ref_act[:, keep]
    hyp_act = hyp_act[:, keep]
    n_ref = ref_act.sum(axis=0)
    total = int(n_ref.sum())
    if total == 0:
        raise ValueError("empty reference")
    n_hyp = hyp_act.sum(axis=0)

    mapping = {}
    correct = 0
    if ref_labels and hyp_labels:
        overlap = ref_act.astype(np.int64) @ hyp_act.T.astype(np.int64)
        rows, cols = linear_sum_assignment(overlap, maximize=True)
        for r, c in zip(rows, cols):
            if overlap[r, c] > 0:
                mapping[hyp_labels[c]] = ref_labels[r]
                correct += int(overlap[r, c])

    err = int(np.maximum(n_ref, n_hyp).sum()) - correct
    miss = int(np.maximum(n_ref - n_hyp, 0).sum())
    fa = int(np.maximum(n_hyp - n_ref, 0).sum())
    conf = err - miss - fa
    return DerResult(
        missed_speech=miss / total,
        false_alarm=fa / total,
        speaker_confusion=conf / total,
        der=err / total,
        total_reference_seconds=total * frame_period,
        mapping=mapping,
    )


def format_der_table(results: dict[str, DerResult]) -> str:
    head = f"{'file':<24}{'miss':>9}{'fa':>9}{'conf':>9}{'der':>9}"
    lines = [head, "-" * len(head)]
    for name, r in results.items():
        lines.append(
            f"{name:<24}{r.missed_speech:>9.4f}{r.false_alarm:>9.4f}"
            f"{r.speaker_confusion:>9.4f}{r.der:>9.4f}"
        )
    return "\n".join(lines) + "\n"


def format_der_csv(results: dict[str, DerResult]) -> str:
    lines = ["file,miss,fa,conf,der"]
    for name, r in results.items():
        lines.append(
            f"{name},{r.missed_speech:.6f},{r.false_alarm:.6f},{r.speaker_confusion:.6f},{r.der:.6f}"
        )
    return "\n".join(lines) + "\n"
