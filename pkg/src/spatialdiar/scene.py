"""Far-field multichannel scene synthesis with known ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import butter, fftconvolve, sosfiltfilt

from .evaluation import Segment, SpeakerSegments
from .geometry import ArrayGeometry, DoaAngle, circular_array, parse_array_arg, wrap_degrees
from .providers import SourceActivity
from .stft import StftConfig, n_frames

__all__ = [
    "FRACTIONAL_TAPS",
    "RenderedScene",
    "SceneSpec",
    "SourceSpec",
    "fractional_delay",
    "fractional_delay_kernel",
    "load_scene_spec",
    "render_scene",
]

FRACTIONAL_TAPS = 64
NOISE_CUTOFF_HZ = 7000.0


def fractional_delay_kernel(delay: float, taps: int = FRACTIONAL_TAPS) -> tuple[np.ndarray, int]:
    """Hann-windowed sinc for a delay of ``delay`` samples.

    Returns ``(h, lead)`` where ``h[j]`` applies to lag ``j - lead``.
    Delays should stay well inside ``+-taps/2``.
    """
    half = taps // 2
    lead = half - 1
    bulk = int(math.floor(delay))
    lags = np.arange(taps) - lead + bulk
    x = lags - delay
    w = 0.5 * (1.0 + np.cos(np.pi * x / half))
    w[np.abs(x) >= half] = 0.0
    return np.sinc(x) * w, lead - bulk


def fractional_delay(signal: np.ndarray, delay: float, taps: int = FRACTIONAL_TAPS) -> np.ndarray:
    """``y[n] ~ signal[n - delay]``, same length as the input."""
    h, lead = fractional_delay_kernel(delay, taps)
    full = fftconvolve(signal, h) if signal.size > 4096 else np.convolve(signal, h)
    out = np.zeros_like(signal, dtype=float)
    # full[i] = sum_j h[j] s[i - j]; lag j - lead maps to y[n] = full[n + lead]
    start = lead
    seg = full[max(start, 0) : start + signal.size]
    if start < 0:
        out[-start : -start + seg.size] = seg
    else:
        out[: seg.size] = seg
    return out


@dataclass
class SourceSpec:
    azimuth_deg: float
    signal: str = "noise"
    intervals: list[tuple[float, float]] = field(default_factory=list)
    label: str | None = None

    def __post_init__(self):
        if not -180.0 <= self.azimuth_deg < 180.0:
            self.azimuth_deg = float(wrap_degrees(self.azimuth_deg))
        for on, off in self.intervals:
            if off <= on or on < 0:
                raise ValueError(f"invalid interval ({on}, {off})")


@dataclass
class SceneSpec:
    sources: list[SourceSpec]
    geometry: ArrayGeometry = field(default_factory=circular_array)
    duration: float = 10.0
    sample_rate: int = 16000
    snr_db: float | None = 20.0
    seed: int = 0
    echo: tuple[float, float] | None = None  # (extra delay s, gain)
    recording: str = "scene"

    def __post_init__(self):
        for s in self.sources:
            for on, off in s.intervals:
                if off > self.duration + 1e-9:
                    raise ValueError(f"interval ({on}, {off}) exceeds duration {self.duration}")

    def labels(self) -> list[str]:
        return [s.label or f"src{k}" for k, s in enumerate(self.sources)]


@dataclass
class RenderedScene:
    audio: np.ndarray  # (M, N)
    activity: SourceActivity
    reference: SpeakerSegments
    tracks: dict[str, list[tuple[int, float]]]
    spec: SceneSpec
    stft: StftConfig
    clean: np.ndarray | None = None
    dry: list[np.ndarray] = field(default_factory=list)


def _source_signal(desc: str, n: int, fs: int, rng: np.random.Generator) -> np.ndarray:
    kind, _, arg = desc.partition(":")
    if kind == "white":
        return rng.standard_normal(n)
    if kind == "noise":
        # speech-band noise; keeps the fractional-delay filter energy-preserving
        sos = butter(10, min(NOISE_CUTOFF_HZ, 0.4375 * fs), fs=fs, output="sos")
        x = sosfiltfilt(sos, rng.standard_normal(n))
        return x / np.sqrt(np.mean(x**2))
    if kind == "tone":
        f0 = float(arg)
        phase = rng.uniform(0, 2 * np.pi)
        return np.sqrt(2.0) * np.sin(2 * np.pi * f0 * np.arange(n) / fs + phase)
    if kind == "file":
        try:
            rate, data = wavfile.read(arg)
        except (OSError, ValueError) as exc:
            raise OSError(f"cannot read source signal {arg!r}: {exc}") from exc
        if rate != fs:
            raise ValueError(f"{arg}: sample rate {rate} != {fs}")
        data = np.asarray(data, dtype=float)
        if data.ndim > 1:
            data = data[:, 0]
        if data.size < n:
            data = np.resize(data, n)
        data = data[:n]
        rms = np.sqrt(np.mean(data**2))
        return data / rms if rms > 0 else data
    raise ValueError(f"unknown signal descriptor {desc!r}")


def _gate(intervals, n, fs) -> np.ndarray:
    g = np.zeros(n)
    for on, off in intervals:
        g[int(round(on * fs)) : int(round(off * fs))] = 1.0
    return g


def _spatialize(sig: np.ndarray, geom: ArrayGeometry, theta: DoaAngle, fs: int, extra: float = 0.0) -> np.ndarray:
    # mics further along u hear the wavefront earlier
    arrival = -(geom.mic_positions @ theta.unit_vector()) / geom.speed_of_sound + extra
    return np.stack([fractional_delay(sig, d * fs) for d in arrival])


def render_scene(spec: SceneSpec, stft: StftConfig | None = None) -> RenderedScene:
    """Render audio plus frame-rate ground truth (beta = 1 on active frames).

    A frame counts as active for a source when its centre sample lies inside
    one of the source's intervals.
    """
    fs = spec.sample_rate
    stft = stft or StftConfig(sample_rate=fs)
    if stft.sample_rate != fs:
        raise ValueError("STFT sample rate does not match the scene")
    geom = spec.geometry
    n = int(round(spec.duration * fs))
    rng = np.random.default_rng(spec.seed)
    clean = np.zeros((geom.n_mics, n))
    labels = spec.labels()
    thetas = [DoaAngle.from_degrees(s.azimuth_deg) for s in spec.sources]
    dry = []
    for src, theta in zip(spec.sources, thetas):
        sig = _source_signal(src.signal, n, fs, rng) * _gate(src.intervals, n, fs)
        dry.append(sig)
        clean += _spatialize(sig, geom, theta, fs)
        if spec.echo is not None:
            delay, gain = spec.echo
            mirror = DoaAngle.from_degrees(wrap_degrees(180.0 - src.azimuth_deg))
            clean += gain * _spatialize(sig, geom, mirror, fs, extra=delay)

    audio = clean.copy()
    if spec.snr_db is not None:
        p_sig = np.mean(clean**2)
        p_noise = p_sig / 10 ** (spec.snr_db / 10)
        audio += rng.standard_normal(clean.shape) * np.sqrt(p_noise)

    t_frames = n_frames(n, stft)
    centers = (np.arange(t_frames) * stft.hop + stft.fft_size / 2) / fs
    frames: list[list[tuple[DoaAngle, float]]] = [[] for _ in range(t_frames)]
    tracks: dict[str, list[tuple[int, float]]] = {}
    segs = []
    for src, theta, lab in zip(spec.sources, thetas, labels):
        act = np.zeros(t_frames, dtype=bool)
        for on, off in src.intervals:
            act |= (centers >= on) & (centers < off)
            segs.append(Segment(lab, on, off - on))
        for t in np.flatnonzero(act):
            frames[t].append((theta, 1.0))
        tracks[lab] = [(int(t), src.azimuth_deg) for t in np.flatnonzero(act)]
    reference = SpeakerSegments(spec.recording, segs)
    return RenderedScene(audio, SourceActivity(frames), reference, tracks, spec, stft, clean, dry)


def _parse_intervals(text: str) -> list[tuple[float, float]]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        a, _, b = part.partition("-")
        out.append((float(a), float(b)))
    return out


def load_scene_spec(path) -> SceneSpec:
    """Read a scene description.

    Format: ``key = value`` lines with keys ``duration``, ``sample_rate``,
    ``snr_db`` (``none`` disables noise), ``seed``, ``array``
    (``circular:M:R`` or a geometry file), ``recording``,
    ``echo = <delay_s>,<gain>`` and repeated
    ``source = <azimuth_deg> <signal> <on-off,on-off,...> [label]``
    where ``signal`` is ``noise`` (band-limited to 7 kHz), ``white``,
    ``tone:<Hz>`` or ``file:<wav>``.
    """
    path = Path(path)
    opts: dict[str, str] = {}
    sources = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        if key == "source":
            parts = value.split()
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: source needs azimuth, signal and intervals")
            sig = parts[1]
            if sig.startswith("file:") and not Path(sig[5:]).is_absolute():
                sig = "file:" + str(path.parent / sig[5:])
            label = parts[3] if len(parts) > 3 else None
            sources.append(SourceSpec(float(parts[0]), sig, _parse_intervals(parts[2]), label))
        else:
            opts[key] = value
    geom = parse_array_arg(opts.get("array", "circular:8:0.05"))
    snr = opts.get("snr_db", "20")
    echo = None
    if "echo" in opts:
        d, g = (float(v) for v in opts["echo"].split(","))
        echo = (d, g)
    return SceneSpec(
        sources=sources,
        geometry=geom,
        duration=float(opts.get("duration", 10.0)),
        sample_rate=int(opts.get("sample_rate", 16000)),
        snr_db=None if snr.lower() == "none" else float(snr),
        seed=int(opts.get("seed", 0)),
        echo=echo,
        recording=opts.get("recording", path.stem),
    )
