"""WAV, CSV and key=value config helpers shared by the command line."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .geometry import DoaAngle
from .localizer import SourceDetection
from .providers import SourceActivity

__all__ = [
    "read_config",
    "read_detections_csv",
    "read_tracks_csv",
    "read_wav",
    "tracks_to_activity",
    "write_detections_csv",
    "write_spectra_csv",
    "write_wav",
]


def read_wav(path, expected_rate: int | None = None) -> tuple[int, np.ndarray]:
    """Read PCM16/PCM32/float WAV as float64 with shape (channels, samples)."""
    rate, data = wavfile.read(path)
    if expected_rate is not None and rate != expected_rate:
        raise ValueError(f"{path}: sample rate {rate} Hz does not match configured {expected_rate} Hz")
    if data.dtype == np.int16:
        x = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(float) / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(float) - 128.0) / 128.0
    else:
        x = data.astype(float)
    x = x[:, None] if x.ndim == 1 else x
    return rate, np.ascontiguousarray(x.T)


def write_wav(path, audio: np.ndarray, rate: int):
    wavfile.write(path, rate, np.asarray(audio, dtype=np.float32).T)


def read_config(path) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` comments."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def write_detections_csv(detections, frame_period: float, fh=None) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["frame", "time_s", "bin", "azimuth_deg", "weight"])
    for frame_dets in detections:
        for d in frame_dets:
            wr.writerow([d.frame, f"{d.frame * frame_period:.3f}", d.bin, f"{d.azimuth_deg:g}", f"{d.weight:.4f}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_detections_csv(text: str, n_frames: int | None = None) -> list[list[SourceDetection]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    last = max((int(r["frame"]) for r in rows), default=-1)
    n = last + 1 if n_frames is None else n_frames
    out: list[list[SourceDetection]] = [[] for _ in range(n)]
    for r in rows:
        f = int(r["frame"])
        out[f].append(SourceDetection(f, int(r["bin"]), float(r["azimuth_deg"]), float(r["weight"])))
    return out


def write_spectra_csv(spectra: np.ndarray, centers_deg, fh) -> None:
    fh.write("frame,bin_center_deg,value\n")
    centers = [f"{c:g}" for c in centers_deg]
    for t, row in enumerate(spectra):
        fh.write("".join(f"{t},{c},{v:.6f}\n" for c, v in zip(centers, row)))


def read_tracks_csv(path) -> dict[str, list[tuple[int, float]]]:
    tracks: dict[str, list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            tracks.setdefault(r["speaker"], []).append((int(r["frame"]), float(r["azimuth_deg"])))
    return tracks


def tracks_to_activity(tracks: dict[str, list[tuple[int, float]]], n_frames: int) -> SourceActivity:
    """Ground-truth activity (beta = 1) from ``frame,speaker,azimuth_deg`` tracks."""
    frames: list[list[tuple[DoaAngle, float]]] = [[] for _ in range(n_frames)]
    for spk in sorted(tracks):
        for f, az in tracks[spk]:
            if 0 <= f < n_frames:
                frames[f].append((DoaAngle.from_degrees(az), 1.0))
    return SourceActivity(frames)
