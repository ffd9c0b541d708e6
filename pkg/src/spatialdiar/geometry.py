"""Array geometry, DOA angles, the azimuth grid and far-field DP-IPD steering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

__all__ = [
    "ArrayGeometry",
    "AzimuthGrid",
    "DoaAngle",
    "DpIpdField",
    "circular_array",
    "dp_ipd",
    "load_geometry",
    "parse_array_arg",
    "quantize_azimuth",
    "steering_delay",
    "wrap_azimuth",
    "wrap_degrees",
]


def wrap_azimuth(azimuth):
    """Map radians onto [-pi, pi)."""
    return (np.asarray(azimuth, dtype=float) + np.pi) % (2 * np.pi) - np.pi


def wrap_degrees(azimuth_deg):
    """Map degrees onto [-180, 180)."""
    return (np.asarray(azimuth_deg, dtype=float) + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class DoaAngle:
    """Direction of arrival in radians.

    Elevation is measured from the +z axis (pi/2 is the array plane) and
    azimuth counter-clockwise from +x. Azimuth is normalized to [-pi, pi)
    on construction.
    """

    elevation: float = math.pi / 2
    azimuth: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.elevation <= math.pi:
            raise ValueError(f"elevation {self.elevation} outside [0, pi]")
        object.__setattr__(self, "azimuth", float(wrap_azimuth(self.azimuth)))

    @classmethod
    def from_degrees(cls, azimuth_deg: float, elevation_deg: float = 90.0) -> "DoaAngle":
        return cls(math.radians(elevation_deg), math.radians(azimuth_deg))

    @property
    def azimuth_deg(self) -> float:
        return math.degrees(self.azimuth)

    def unit_vector(self) -> np.ndarray:
        se = math.sin(self.elevation)
        return np.array(
            [se * math.cos(self.azimuth), se * math.sin(self.azimuth), math.cos(self.elevation)]
        )


@dataclass(frozen=True)
class ArrayGeometry:
    """Microphone positions (meters, shape (M, 3)) and speed of sound."""

    mic_positions: np.ndarray
    speed_of_sound: float = 343.0

    def __post_init__(self):
        pos = np.asarray(self.mic_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise ValueError("mic_positions must have shape (M, 3)")
        if pos.shape[1] == 2:
            pos = np.hstack([pos, np.zeros((pos.shape[0], 1))])
        if pos.shape[0] < 2:
            raise ValueError("at least two microphones are required")
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        if np.any(dist[np.triu_indices(pos.shape[0], 1)] <= 0.0):
            raise ValueError("microphone positions must be pairwise distinct")
        if self.speed_of_sound <= 0:
            raise ValueError("speed_of_sound must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "mic_positions", pos)

    @property
    def n_mics(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """Unordered pairs (m, m') with m < m', in lexicographic order."""
        return list(combinations(range(self.n_mics), 2))

    @property
    def n_pairs(self) -> int:
        return self.n_mics * (self.n_mics - 1) // 2

    def pair_vectors(self) -> np.ndarray:
        """``p_m - p_m'`` for every pair, shape (P, 3)."""
        i, j = np.triu_indices(self.n_mics, 1)
        return self.mic_positions[i] - self.mic_positions[j]

    def pair_delays(self, theta: DoaAngle) -> np.ndarray:
        """Steering delay in seconds for every pair, shape (P,)."""
        return self.pair_vectors() @ theta.unit_vector() / self.speed_of_sound


def circular_array(n_mics: int = 8, radius: float = 0.05, speed_of_sound: float = 343.0) -> ArrayGeometry:
    """Uniform circular array in the xy-plane, mic 0 on the +x axis."""
    phi = 2 * np.pi * np.arange(n_mics) / n_mics
    pos = np.stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros(n_mics)], axis=1)
    return ArrayGeometry(pos, speed_of_sound)


def load_geometry(path, speed_of_sound: float = 343.0) -> ArrayGeometry:
    """Read a plain-text geometry file: one ``x y z`` triple (meters) per line.

    Commas are accepted as separators; ``#`` starts a comment.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 coordinates, got {len(parts)}")
        rows.append([float(p) for p in parts])
    return ArrayGeometry(np.array(rows), speed_of_sound)


def parse_array_arg(spec: str, speed_of_sound: float = 343.0) -> ArrayGeometry:
    """Resolve ``circular:<M>:<radius>`` presets or a geometry file path."""
    if spec.startswith("circular"):
        parts = spec.split(":")
        n = int(parts[1]) if len(parts) > 1 and parts[1] else 8
        radius = float(parts[2]) if len(parts) > 2 and parts[2] else 0.05
        return circular_array(n, radius, speed_of_sound)
    return load_geometry(spec, speed_of_sound)


def steering_delay(geom: ArrayGeometry, pair, theta: DoaAngle) -> float:
    """Far-field delay ``(p_m - p_m') . u(theta) / c`` in seconds.

    ``pair`` is either an index into ``geom.pairs`` or an explicit (m, m')
    tuple; an explicit tuple may have m > m', which negates the delay.
    """
    if isinstance(pair, (tuple, list)):
        m, mp = pair
    else:
        m, mp = geom.pairs[pair]
    d = geom.mic_positions[m] - geom.mic_positions[mp]
    return float(d @ theta.unit_vector() / geom.speed_of_sound)


@dataclass
class DpIpdField:
    """Complex phase-difference values per (pair, frequency bin).

    ``values`` has shape (P, F), pairs ordered as ``ArrayGeometry.pairs``.
    """

    values: np.ndarray
    freqs: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        self.freqs = np.asarray(self.freqs, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != self.freqs.size:
            raise ValueError(
                f"values shape {self.values.shape} does not match {self.freqs.size} frequencies"
            )

    @property
    def n_pairs(self) -> int:
        return self.values.shape[0]

    @property
    def n_freqs(self) -> int:
        return self.values.shape[1]

    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))

    def __add__(self, other: "DpIpdField") -> "DpIpdField":
        return DpIpdField(self.values + other.values, self.freqs)

    def __sub__(self, other: "DpIpdField") -> "DpIpdField":
        return DpIpdField(self.values - other.values, self.freqs)

    def __mul__(self, scale: float) -> "DpIpdField":
        return DpIpdField(self.values * scale, self.freqs)

    __rmul__ = __mul__


def dp_ipd(geom: ArrayGeometry, freqs, theta: DoaAngle) -> DpIpdField:
    """Candidate DP-IPD field ``exp(-i 2 pi f tau)`` for one direction."""
    freqs = np.asarray(freqs, dtype=float)
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be positive")
    tau = geom.pair_delays(theta)
    return DpIpdField(np.exp(-2j * np.pi * tau[:, None] * freqs[None, :]), freqs)


@dataclass(frozen=True)
class AzimuthGrid:
    """Uniform azimuth grid over [-180, 180) degrees.

    Bin ``a`` covers ``[-180 + a*res, -180 + (a+1)*res)``.
    """

    resolution: float = 5.0
    fixed_elevation: float = math.pi / 2

    def __post_init__(self):
        n = 360.0 / self.resolution
        if self.resolution <= 0 or abs(n - round(n)) > 1e-9:
            raise ValueError("resolution must divide 360 degrees")

    @property
    def n_bins(self) -> int:
        return int(round(360.0 / self.resolution))

    @property
    def centers_deg(self) -> np.ndarray:
        return -180.0 + (np.arange(self.n_bins) + 0.5) * self.resolution

    def center_deg(self, a: int) -> float:
        return -180.0 + (a + 0.5) * self.resolution

    def center(self, a: int) -> DoaAngle:
        return DoaAngle(self.fixed_elevation, math.radians(self.center_deg(a)))

    def angles(self) -> list[DoaAngle]:
        return [self.center(a) for a in range(self.n_bins)]

    def quantize(self, azimuth):
        """Bin index of an azimuth in radians (scalar or array)."""
        deg = np.degrees(wrap_azimuth(azimuth))
        return self.quantize_deg(deg)

    def quantize_deg(self, azimuth_deg):
        deg = wrap_degrees(azimuth_deg)
        idx = np.floor((deg + 180.0) / self.resolution).astype(int)
        idx = np.clip(idx, 0, self.n_bins - 1)
        return int(idx) if np.ndim(idx) == 0 else idx

    def bin_distance(self, a, b):
        """Circular distance between bins, in bins."""
        d = np.abs(np.asarray(a) - np.asarray(b)) % self.n_bins
        return np.minimum(d, self.n_bins - d)


def quantize_azimuth(grid: AzimuthGrid, azimuth):
    """Grid bin containing ``azimuth`` (radians, normalized first)."""
    return grid.quantize(azimuth)
