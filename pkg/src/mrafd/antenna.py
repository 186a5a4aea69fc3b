"""Pixel-surface reconfigurable antenna: switch configurations and azimuthal patterns.

The parasitic surface is a 3x3 grid of metallic pixels joined by 12 switches.
Pixels are indexed row-major from the top-left corner::

    0 - 1 - 2        horizontal edges 0..5:  edge 2*r + c joins (r, c)-(r, c+1)
    |   |   |        vertical edges 6..11:   edge 6 + 3*r + c joins (r, c)-(r+1, c)
    3 - 4 - 5
    |   |   |        pixel (r, c) sits at x = (c - 1) * pitch, y = (1 - r) * pitch
    6 - 7 - 8        (wavelengths); azimuth is measured counter-clockwise from +x.

Bit ``e`` of a configuration index is the ON/OFF state of edge ``e``.

A pattern is synthesized with a connected-component reactive-loading model:
pixels joined by ON switches form one parasitic element whose total excitation
is spread evenly over its pixels, and the driven patch contributes a unit
isotropic term.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_PIXELS = 9
N_SWITCHES = 12
N_CONFIGS = 1 << N_SWITCHES
OMNI = -1

# 15 mm pixel at 2.45 GHz
DEFAULT_PITCH = 0.1225
DEFAULT_BINS = 360

EDGES: tuple[tuple[int, int], ...] = tuple(
    [(3 * r + c, 3 * r + c + 1) for r in range(3) for c in range(2)]
    + [(3 * r + c, 3 * (r + 1) + c) for r in range(2) for c in range(3)]
)

BANK_FORMAT_VERSION = 1


def _ring(pixel: int) -> int:
    """0 for the center pixel, 1 for edge pixels, 2 for corners."""
    r, c = divmod(pixel, 3)
    return abs(r - 1) + abs(c - 1)


def rear_null_edge_coupling(pitch: float = DEFAULT_PITCH, center: complex = 1.0,
                            corner: complex = 0.35 * np.exp(-0.5j * np.pi)) -> complex:
    """Edge-pixel coupling that puts an exact null at azimuth 180 deg.

    The gain toward 0 or 180 deg depends only on the column sums of the pixel
    excitations. Config 1 (the single switch joining the top-left corner to the
    top-center pixel) has left/center/right column sums
    ``(1.5 e + 1.5 k, c + 1.5 e + 0.5 k, e + 2 k)`` for center ``c``, edge ``e``
    and corner ``k``, and 59 other configurations share them. Solving
    ``g(180 deg) = 0`` for ``e`` gives all 60 a rear null; because the sums are
    left/right asymmetric their front gain survives.
    """
    ph = np.exp(2j * np.pi * pitch)
    num = 1.0 + center + corner * (1.5 * ph + 0.5 + 2.0 / ph)
    den = 1.5 * ph + 1.5 + 1.0 / ph
    return complex(-num / den)


def symmetric_coupling(center: complex, edge: complex, corner: complex) -> np.ndarray:
    values = (center, edge, corner)
    return np.array([values[_ring(p)] for p in range(N_PIXELS)], dtype=complex)


@dataclass(frozen=True)
class SwitchConfig:
    states: tuple[bool, ...]

    def __post_init__(self):
        if len(self.states) != N_SWITCHES:
            raise ValueError(f"expected {N_SWITCHES} switch states, got {len(self.states)}")

    @property
    def index(self) -> int:
        return sum(1 << e for e, on in enumerate(self.states) if on)

    def on_edges(self) -> list[int]:
        return [e for e, on in enumerate(self.states) if on]


def config_from_index(index: int) -> SwitchConfig:
    if not 0 <= index < N_CONFIGS:
        raise IndexError(f"config index {index} outside 0..{N_CONFIGS - 1}")
    return SwitchConfig(tuple(bool((index >> e) & 1) for e in range(N_SWITCHES)))


def _rotate_pixel(p: int) -> int:
    # (x, y) -> (-y, x): 90 deg counter-clockwise
    r, c = divmod(p, 3)
    return 3 * (2 - c) + r


_EDGE_LOOKUP = {frozenset(e): i for i, e in enumerate(EDGES)}
_ROT_EDGE = tuple(_EDGE_LOOKUP[frozenset((_rotate_pixel(a), _rotate_pixel(b)))] for a, b in EDGES)


def rotate_config(config: SwitchConfig) -> SwitchConfig:
    """Switch configuration of the surface rotated 90 deg counter-clockwise."""
    states = [False] * N_SWITCHES
    for e, on in enumerate(config.states):
        states[_ROT_EDGE[e]] = on
    return SwitchConfig(tuple(states))


def connected_components(config: SwitchConfig) -> list[list[int]]:
    """Partition of the 9 pixels into groups joined by ON switches.

    Blocks are sorted by their smallest pixel and each block is sorted.
    """
    parent = list(range(N_PIXELS))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in config.on_edges():
        a, b = EDGES[e]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    blocks: dict[int, list[int]] = {}
    for p in range(N_PIXELS):
        blocks.setdefault(find(p), []).append(p)
    return sorted(blocks.values(), key=lambda b: b[0])


@dataclass(frozen=True)
class ArrayGeometry:
    pitch: float = DEFAULT_PITCH
    coupling: tuple[complex, ...] = field(default=None)
    azimuth_bins: int = DEFAULT_BINS

    def __post_init__(self):
        if self.coupling is None:
            coupling = symmetric_coupling(1.0, rear_null_edge_coupling(self.pitch), 0.35 * np.exp(-0.5j * np.pi))
            object.__setattr__(self, "coupling", tuple(complex(c) for c in coupling))
        else:
            object.__setattr__(self, "coupling", tuple(complex(c) for c in self.coupling))
        if len(self.coupling) != N_PIXELS:
            raise ValueError("coupling needs one coefficient per pixel")
        if self.pitch <= 0:
            raise ValueError("pitch must be positive")
        if self.azimuth_bins < 4:
            raise ValueError("azimuth_bins must be at least 4")
        c = np.asarray(self.coupling)
        for ring in (1, 2):
            vals = c[[p for p in range(N_PIXELS) if _ring(p) == ring]]
            if not np.allclose(vals, vals[0], rtol=0, atol=1e-12):
                raise ValueError("coupling must be invariant under 90 deg rotation of the grid")

    @classmethod
    def from_rings(cls, center: complex, edge: complex, corner: complex, *,
                   pitch: float = DEFAULT_PITCH, azimuth_bins: int = DEFAULT_BINS) -> "ArrayGeometry":
        return cls(pitch=pitch, coupling=tuple(symmetric_coupling(center, edge, corner)),
                   azimuth_bins=azimuth_bins)

    @property
    def pixel_positions(self) -> np.ndarray:
        """(9, 2) pixel centres in wavelengths."""
        rc = np.array([divmod(p, 3) for p in range(N_PIXELS)], dtype=float)
        return np.column_stack([(rc[:, 1] - 1.0) * self.pitch, (1.0 - rc[:, 0]) * self.pitch])

    @property
    def azimuths(self) -> np.ndarray:
        return np.arange(self.azimuth_bins) * (2 * np.pi / self.azimuth_bins)

    def steering(self) -> np.ndarray:
        """(bins, 9) phase factors exp(+j 2 pi r_p . u(theta))."""
        pos = self.pixel_positions
        th = self.azimuths
        phase = np.outer(np.cos(th), pos[:, 0]) + np.outer(np.sin(th), pos[:, 1])
        return np.exp(2j * np.pi * phase)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.pitch).tobytes())
        h.update(np.asarray(self.coupling, dtype=np.complex128).tobytes())
        h.update(np.int64(self.azimuth_bins).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class RadiationPattern:
    gains: np.ndarray
    config_index: int

    @property
    def is_omni(self) -> bool:
        return self.config_index == OMNI


def omni_pattern(azimuth_bins: int = DEFAULT_BINS) -> RadiationPattern:
    return RadiationPattern(np.ones(azimuth_bins, dtype=complex), OMNI)


def component_weights(config: SwitchConfig, coupling) -> np.ndarray:
    """Per-pixel excitation after spreading each component's sum evenly."""
    coupling = np.asarray(coupling, dtype=complex)
    w = np.empty(N_PIXELS, dtype=complex)
    for block in connected_components(config):
        w[block] = coupling[block].sum() / len(block)
    return w


def _gains_from_weights(weights: np.ndarray, geometry: ArrayGeometry) -> np.ndarray:
    g = 1.0 + weights @ geometry.steering().T
    norm = np.sqrt(np.mean(np.abs(g) ** 2, axis=-1, keepdims=True))
    return g / norm


def synthesize_pattern(config: SwitchConfig, geometry: ArrayGeometry) -> RadiationPattern:
    w = component_weights(config, geometry.coupling)
    return RadiationPattern(_gains_from_weights(w[None, :], geometry)[0], config.index)


def bin_index(azimuth, azimuth_bins: int):
    """Nearest azimuth bin for angles in radians (wrapped to [0, 2 pi))."""
    az = np.mod(np.asarray(azimuth, dtype=float), 2 * np.pi)
    idx = np.rint(az * (azimuth_bins / (2 * np.pi))).astype(int) % azimuth_bins
    return idx if idx.ndim else int(idx)


def gain_at(pattern: RadiationPattern, azimuth):
    if pattern.is_omni:
        if np.ndim(azimuth):
            return np.ones(np.shape(azimuth), dtype=complex)
        return 1 + 0j
    return pattern.gains[bin_index(azimuth, len(pattern.gains))]


class PatternBank:
    """All 4096 patterns of one geometry, stored as a (4096, bins) gain matrix.

    Read-only after construction.
    """

    def __init__(self, gains: np.ndarray, geometry: ArrayGeometry):
        gains = np.asarray(gains, dtype=np.complex128)
        if gains.shape != (N_CONFIGS, geometry.azimuth_bins):
            raise ValueError(f"bank gains must have shape ({N_CONFIGS}, {geometry.azimuth_bins})")
        gains.flags.writeable = False
        self.gains = gains
        self.geometry = geometry

    def __len__(self):
        return N_CONFIGS

    def __getitem__(self, index: int) -> RadiationPattern:
        if index == OMNI:
            return omni_pattern(self.geometry.azimuth_bins)
        if not 0 <= index < N_CONFIGS:
            raise IndexError(f"pattern index {index} outside 0..{N_CONFIGS - 1}")
        return RadiationPattern(self.gains[index], index)

    @property
    def patterns(self) -> list[RadiationPattern]:
        return [self[i] for i in range(N_CONFIGS)]

    def gains_toward(self, azimuths, indices=None) -> np.ndarray:
        """(n_patterns, n_angles) complex gains toward the given azimuths."""
        cols = np.atleast_1d(bin_index(azimuths, self.geometry.azimuth_bins))
        rows = self.gains if indices is None else self.gains[np.asarray(indices, dtype=int)]
        return rows[:, cols]

    def save(self, path) -> None:
        """Write the bank as an uncompressed ``.npz`` archive.

        Keys: ``format_version``, ``pitch``, ``coupling`` (9 complex),
        ``azimuth_bins``, ``gains`` (4096 x bins complex128). The archive carries
        no timestamps, so identical banks give identical bytes.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez(fh, format_version=np.int64(BANK_FORMAT_VERSION),
                     pitch=np.float64(self.geometry.pitch),
                     coupling=np.asarray(self.geometry.coupling, dtype=np.complex128),
                     azimuth_bins=np.int64(self.geometry.azimuth_bins),
                     gains=np.ascontiguousarray(self.gains))

    @classmethod
    def load(cls, path) -> "PatternBank":
        with np.load(path, allow_pickle=False) as data:
            version = int(data["format_version"])
            if version != BANK_FORMAT_VERSION:
                raise ValueError(f"unsupported bank format version {version}")
            geometry = ArrayGeometry(pitch=float(data["pitch"]),
                                     coupling=tuple(data["coupling"]),
                                     azimuth_bins=int(data["azimuth_bins"]))
            return cls(np.array(data["gains"]), geometry)


def build_pattern_bank(geometry: ArrayGeometry | None = None) -> PatternBank:
    geometry = geometry or ArrayGeometry()
    weights = np.stack([component_weights(config_from_index(i), geometry.coupling)
                        for i in range(N_CONFIGS)])
    return PatternBank(_gains_from_weights(weights, geometry), geometry)
