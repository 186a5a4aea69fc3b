"""Multipath self-interference and signal-of-interest channels.

Each link is a set of discrete paths (azimuth of arrival at the reconfigurable
receive antenna, integer sample delay, complex amplitude). The receive pattern
weights every path by its gain toward the arrival azimuth, and paths with the
same delay add coherently into one FIR tap. Amplitudes are referenced to a unit
transmit power, so the SI tap energy is the inverse of the passive suppression.

NLOS amplitudes fade as a per-step AR(1) process; LOS paths are static.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .antenna import PatternBank, RadiationPattern, gain_at

# One evolve step of wall-clock time.
EVOLVE_STEP_S = 1e-3

SEMI_STATIC_RHO = 0.99999
DYNAMIC_RHO = 0.999


class Orientation(enum.Enum):
    OPPOSITE = "opposite"
    FACE_TO_FACE = "face_to_face"
    SIDE_TO_SIDE_LEFT = "side_to_side_left"
    SIDE_TO_SIDE_RIGHT = "side_to_side_right"

    @property
    def azimuth(self) -> float:
        return _ORIENTATION_AZIMUTH[self]


_ORIENTATION_AZIMUTH = {
    Orientation.FACE_TO_FACE: 0.0,
    Orientation.SIDE_TO_SIDE_LEFT: 0.5 * math.pi,
    Orientation.OPPOSITE: math.pi,
    Orientation.SIDE_TO_SIDE_RIGHT: 1.5 * math.pi,
}


class Link(enum.Enum):
    SI = "SI"
    SOI = "SOI"


class PathKind(enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


@dataclass(frozen=True)
class Environment:
    """Propagation scenario seen by one full-duplex node.

    Powers are in dB relative to the transmit power. ``peer_azimuth``, when
    set, overrides the orientation mapping (used for held-out scenarios that
    sweep the full circle).
    """

    orientation: Orientation = Orientation.FACE_TO_FACE
    los_blocked: bool = False
    n_reflectors: int = 8
    si_los_power_db: float = -20.0
    si_nlos_rel_db: float = -30.0
    soi_pathloss_db: float = 52.0
    dynamics_rho: float = SEMI_STATIC_RHO
    seed: int = 0
    si_los_azimuth: float = math.pi
    si_max_delay: int = 2
    soi_max_delay: int = 8
    soi_nlos_rel_db: float = -10.0
    peer_azimuth: float | None = None
    name: str = ""

    def __post_init__(self):
        if isinstance(self.orientation, str):
            object.__setattr__(self, "orientation", Orientation(self.orientation))
        if not 0.0 <= self.dynamics_rho <= 1.0:
            raise ValueError(f"dynamics_rho must lie in [0, 1], got {self.dynamics_rho}")
        if not self.si_los_power_db < 0:
            raise ValueError(f"si_los_power_db must be negative, got {self.si_los_power_db}")
        if self.n_reflectors < 0:
            raise ValueError("n_reflectors must be >= 0")
        if self.si_max_delay < 1 or self.soi_max_delay < 1:
            raise ValueError("NLOS max delays must be >= 1 sample")

    @property
    def peer_direction(self) -> float:
        if self.peer_azimuth is not None:
            return float(self.peer_azimuth)
        return self.orientation.azimuth

    def with_orientation(self, orientation: Orientation) -> "Environment":
        return replace(self, orientation=orientation, peer_azimuth=None)


@dataclass(frozen=True)
class PathComponent:
    aoa: float
    delay_bins: int
    amplitude: complex
    kind: PathKind


@dataclass(frozen=True, eq=False)
class PathSet:
    """Paths of one link stored column-wise; ``paths`` gives the record view."""

    aoa: np.ndarray
    delay_bins: np.ndarray
    amplitude: np.ndarray
    is_los: np.ndarray
    link: Link

    def __post_init__(self):
        n = len(self.aoa)
        if not (len(self.delay_bins) == len(self.amplitude) == len(self.is_los) == n):
            raise ValueError("path columns must have equal length")
        if n and np.min(self.delay_bins) < 0:
            raise ValueError("delay_bins must be >= 0")

    @classmethod
    def from_paths(cls, paths, link: Link) -> "PathSet":
        paths = list(paths)
        return cls(np.array([p.aoa for p in paths], dtype=float),
                   np.array([p.delay_bins for p in paths], dtype=int),
                   np.array([p.amplitude for p in paths], dtype=complex),
                   np.array([p.kind is PathKind.LOS for p in paths], dtype=bool),
                   link)

    @property
    def paths(self) -> list[PathComponent]:
        return [PathComponent(float(a), int(d), complex(x), PathKind.LOS if los else PathKind.NLOS)
                for a, d, x, los in zip(self.aoa, self.delay_bins, self.amplitude, self.is_los)]

    def __len__(self):
        return len(self.aoa)

    @property
    def n_taps(self) -> int:
        return int(self.delay_bins.max()) + 1 if len(self) else 1

    def with_amplitudes(self, amplitude) -> "PathSet":
        return replace(self, amplitude=np.asarray(amplitude, dtype=complex))

    def power(self) -> float:
        return float(np.sum(np.abs(self.amplitude) ** 2))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["aoa", "delay", "re", "im", "kind"])
            for p in self.paths:
                w.writerow([repr(p.aoa), p.delay_bins, repr(p.amplitude.real), repr(p.amplitude.imag),
                            p.kind.value])


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    taps: np.ndarray
    link: Link
    pattern_index: int

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.taps) ** 2))


def _db_to_power(db: float) -> float:
    return 10.0 ** (db / 10.0)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-power circular complex Gaussian samples."""
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def nlos_path_power(env: Environment, link: Link) -> float:
    """Stationary mean power of each NLOS path on ``link``."""
    if env.n_reflectors == 0:
        return 0.0
    if link is Link.SI:
        total = _db_to_power(env.si_los_power_db) * _db_to_power(env.si_nlos_rel_db)
    elif env.los_blocked:
        total = _db_to_power(-env.soi_pathloss_db)
    else:
        total = _db_to_power(-env.soi_pathloss_db) * _db_to_power(env.soi_nlos_rel_db)
    return total / env.n_reflectors


def _nlos_paths(env: Environment, link: Link, max_delay: int, rng: np.random.Generator):
    n = env.n_reflectors
    aoa = rng.uniform(0.0, 2 * math.pi, n)
    delay = rng.integers(1, max_delay + 1, n)
    amp = math.sqrt(nlos_path_power(env, link)) * complex_normal(rng, n)
    return aoa, delay, amp


def generate_si_paths(env: Environment, rng: np.random.Generator) -> PathSet:
    """Direct transmit-antenna leakage plus reflections.

    The LOS path always exists (the antennas are co-located) and arrives at
    ``env.si_los_azimuth`` with zero delay.
    """
    los_amp = math.sqrt(_db_to_power(env.si_los_power_db)) * np.exp(1j * rng.uniform(0.0, 2 * math.pi))
    aoa, delay, amp = _nlos_paths(env, Link.SI, env.si_max_delay, rng)
    return PathSet(np.r_[env.si_los_azimuth, aoa], np.r_[0, delay].astype(int), np.r_[los_amp, amp],
                   np.r_[True, np.zeros(len(aoa), dtype=bool)], Link.SI)


def generate_soi_paths(env: Environment, rng: np.random.Generator) -> PathSet:
    los_phase = np.exp(1j * rng.uniform(0.0, 2 * math.pi))
    aoa, delay, amp = _nlos_paths(env, Link.SOI, env.soi_max_delay, rng)
    if env.los_blocked:
        return PathSet(aoa, delay.astype(int), amp, np.zeros(len(aoa), dtype=bool), Link.SOI)
    los_amp = math.sqrt(_db_to_power(-env.soi_pathloss_db)) * los_phase
    return PathSet(np.r_[env.peer_direction, aoa], np.r_[0, delay].astype(int), np.r_[los_amp, amp],
                   np.r_[True, np.zeros(len(aoa), dtype=bool)], Link.SOI)


def realize_channel(paths: PathSet, pattern: RadiationPattern) -> ChannelRealization:
    taps = np.zeros(paths.n_taps, dtype=complex)
    np.add.at(taps, paths.delay_bins, paths.amplitude * gain_at(pattern, paths.aoa))
    return ChannelRealization(taps, paths.link, pattern.config_index)


def ar1_trajectory(paths: PathSet, steps: int, env: Environment, rng: np.random.Generator,
                   rho: float | None = None) -> np.ndarray:
    """Amplitudes after 0..steps AR(1) updates, shape (steps + 1, n_paths).

    Each step draws one complex Gaussian per NLOS path; ``rho`` overrides the
    environment coefficient (e.g. for sub-step intervals).
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rho = env.dynamics_rho if rho is None else rho
    traj = np.empty((steps + 1, len(paths)), dtype=complex)
    traj[:] = paths.amplitude
    nlos = ~paths.is_los
    n_nlos = int(nlos.sum())
    if steps == 0 or n_nlos == 0 or rho == 1.0:
        return traj
    innov = math.sqrt(1.0 - rho * rho) * math.sqrt(nlos_path_power(env, paths.link))
    a = paths.amplitude[nlos].copy()
    for t in range(1, steps + 1):
        a = rho * a + innov * complex_normal(rng, n_nlos)
        traj[t, nlos] = a
    return traj


def evolve(paths: PathSet, steps: int, env: Environment, rng: np.random.Generator,
           rho: float | None = None) -> PathSet:
    return paths.with_amplitudes(ar1_trajectory(paths, steps, env, rng, rho)[-1])


def passive_suppression_db(realization: ChannelRealization) -> float:
    """Transmit power over received SI power, in dB; ``inf`` for zero taps."""
    if realization.link is not Link.SI:
        raise ValueError("passive suppression is defined for the SI link only")
    energy = realization.energy
    if energy == 0.0:
        return math.inf
    return -10.0 * math.log10(energy)


def tap_energies(paths: PathSet, gains: np.ndarray, amplitudes=None) -> np.ndarray:
    """Tap energy of ``paths`` under many patterns at once.

    ``gains`` is (n_patterns, n_paths), the pattern gains toward each path.
    ``amplitudes`` defaults to the path amplitudes and may carry leading time
    axes, e.g. (T, n_paths); the result is then (T, n_patterns).
    """
    amplitudes = paths.amplitude if amplitudes is None else np.asarray(amplitudes)
    out = None
    for d in np.unique(paths.delay_bins):
        sel = paths.delay_bins == d
        tap = amplitudes[..., sel] @ gains[:, sel].T
        e = tap.real ** 2 + tap.imag ** 2
        out = e if out is None else out + e
    if out is None:
        return np.zeros(amplitudes.shape[:-1] + (gains.shape[0],))
    return out


def bank_energies(paths: PathSet, bank: PatternBank, indices=None, amplitudes=None) -> np.ndarray:
    return tap_energies(paths, bank.gains_toward(paths.aoa, indices), amplitudes)


def energy_to_db(energy):
    """-10 log10(energy) with +inf for zero energy."""
    energy = np.asarray(energy, dtype=float)
    with np.errstate(divide="ignore"):
        return -10.0 * np.log10(energy)
