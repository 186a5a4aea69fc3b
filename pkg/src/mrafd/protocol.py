"""Antenna training frames, SIR-based pattern selection and re-training overhead.

Training frame: one segment per candidate pattern, each ``gap | data | null``.
The receive pattern switches at the segment edge and the gap covers the
switching time. In the data interval this node transmits a training sequence
while the peer is silent, so the receiver sees self-interference only; in the
null interval the roles swap and it sees the signal of interest only.

Each 30-sample interval carries a cyclic prefix of ``guard_samples`` followed
by one period of a Zadoff-Chu sequence, and RSS is taken over that period.
Because the window then sees a circular convolution of a flat-spectrum
sequence, the noise-free RSS equals the channel tap energy exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .antenna import N_CONFIGS, PatternBank
from .channel import (EVOLVE_STEP_S, Environment, PathSet, ar1_trajectory, complex_normal,
                      energy_to_db, generate_si_paths, generate_soi_paths, tap_energies)
from .impairments import ImpairmentConfig

RSS_FLOOR = 1e-15


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingFrameSpec:
    sample_rate_hz: float = 40e6
    gap_samples: int = 20
    data_samples: int = 30
    null_samples: int = 30
    pattern_set: tuple[int, ...] = tuple(range(N_CONFIGS))
    guard_samples: int = 8

    def __post_init__(self):
        object.__setattr__(self, "pattern_set", tuple(int(p) for p in self.pattern_set))
        if self.data_samples != self.null_samples:
            raise ConfigurationError("data and null intervals must have the same length")
        if not 0 <= self.guard_samples < self.data_samples:
            raise ConfigurationError("guard_samples must be shorter than the data interval")
        if self.gap_samples < 0 or self.sample_rate_hz <= 0:
            raise ConfigurationError("invalid segment timing")

    @property
    def segment_samples(self) -> int:
        return self.gap_samples + self.data_samples + self.null_samples

    @property
    def n_patterns(self) -> int:
        return len(self.pattern_set)

    def with_patterns(self, pattern_set) -> "TrainingFrameSpec":
        return TrainingFrameSpec(self.sample_rate_hz, self.gap_samples, self.data_samples,
                                 self.null_samples, tuple(pattern_set), self.guard_samples)


@dataclass(frozen=True)
class SegmentMeasurement:
    pattern_index: int
    si_power: float
    soi_power: float

    @property
    def sir_db(self) -> float:
        return 10.0 * math.log10(self.soi_power / self.si_power)


@dataclass(frozen=True)
class LinkState:
    """Both channels seen by the training node."""

    si: PathSet
    soi: PathSet

    @classmethod
    def generate(cls, env: Environment, rng: np.random.Generator) -> "LinkState":
        return cls(generate_si_paths(env, rng), generate_soi_paths(env, rng))


@dataclass(frozen=True)
class SelectionResult:
    chosen_pattern: int
    measurements: list[SegmentMeasurement]
    training_duration_s: float
    final_state: LinkState | None = field(default=None, compare=False)

    def as_rows(self):
        for m in self.measurements:
            yield (m.pattern_index, 10 * math.log10(m.si_power), 10 * math.log10(m.soi_power), m.sir_db)


@dataclass(frozen=True)
class RetrainingPolicy:
    retrain_period_s: float
    spec: TrainingFrameSpec = TrainingFrameSpec()

    def __post_init__(self):
        if not self.retrain_period_s > training_duration(self.spec):
            raise ConfigurationError(
                f"re-training period {self.retrain_period_s} s does not exceed the training "
                f"duration {training_duration(self.spec)} s")


def training_duration(spec: TrainingFrameSpec) -> float:
    return spec.n_patterns * spec.segment_samples / spec.sample_rate_hz


def compute_overhead(policy: RetrainingPolicy) -> float:
    """Training time over the useful data time within one re-training period."""
    t = training_duration(policy.spec)
    return t / (policy.retrain_period_s - t)


def estimate_rss(samples) -> float:
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("RSS needs at least one sample")
    return float(np.mean(samples.real ** 2 + samples.imag ** 2))


def zadoff_chu(length: int, root: int = 1) -> np.ndarray:
    n = np.arange(length)
    if length % 2:
        return np.exp(-1j * np.pi * root * n * (n + 1) / length)
    return np.exp(-1j * np.pi * root * n * n / length)


def training_waveforms(spec: TrainingFrameSpec) -> tuple[np.ndarray, np.ndarray]:
    """Unit-amplitude training waveforms of this node and of the peer.

    Both have length ``n_patterns * segment_samples``.
    """
    body = zadoff_chu(spec.data_samples - spec.guard_samples)
    burst = np.r_[body[len(body) - spec.guard_samples:], body] if spec.guard_samples else body
    seg_node = np.zeros(spec.segment_samples, dtype=complex)
    seg_peer = np.zeros(spec.segment_samples, dtype=complex)
    start = spec.gap_samples
    seg_node[start:start + spec.data_samples] = burst
    seg_peer[start + spec.data_samples:] = burst
    return np.tile(seg_node, spec.n_patterns), np.tile(seg_peer, spec.n_patterns)


def _segment_taps(paths: PathSet, gains: np.ndarray, amplitudes: np.ndarray, n_taps: int) -> np.ndarray:
    onehot = np.zeros((len(paths), n_taps))
    onehot[np.arange(len(paths)), paths.delay_bins] = 1.0
    return (amplitudes * gains) @ onehot


def _through_channel(x: np.ndarray, taps: np.ndarray, seg: np.ndarray) -> np.ndarray:
    y = np.zeros_like(x)
    for d in range(taps.shape[1]):
        y[d:] += taps[seg[d:], d] * x[:len(x) - d]
    return y


def _windows(spec: TrainingFrameSpec, offset: int) -> np.ndarray:
    body = spec.data_samples - spec.guard_samples
    base = np.arange(spec.n_patterns)[:, None] * spec.segment_samples
    return base + offset + spec.guard_samples + np.arange(body)[None, :]


def run_training(state: LinkState, bank: PatternBank, spec: TrainingFrameSpec, env: Environment,
                 impairments: ImpairmentConfig | None = None,
                 rng: np.random.Generator | None = None) -> SelectionResult:
    """Simulate one training frame and pick the SIR-maximizing pattern.

    ``impairments=None`` runs noise-free at unit transmit power. Reported
    powers are normalized to the transmit power. The channel advances between
    segments by the AR(1) coefficient scaled to the segment duration.
    """
    idx = np.asarray(spec.pattern_set, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= N_CONFIGS):
        raise IndexError("pattern index outside 0..4095")
    n_taps = max(state.si.n_taps, state.soi.n_taps)
    if n_taps - 1 > spec.guard_samples:
        raise ConfigurationError(
            f"channel delay {n_taps - 1} exceeds the {spec.guard_samples}-sample training guard")
    if rng is None:
        rng = np.random.default_rng(0)
    L = spec.n_patterns
    seg_s = spec.segment_samples / spec.sample_rate_hz
    rho = env.dynamics_rho ** (seg_s / EVOLVE_STEP_S)
    amp_si = ar1_trajectory(state.si, max(L - 1, 0), env, rng, rho)
    amp_soi = ar1_trajectory(state.soi, max(L - 1, 0), env, rng, rho)
    taps_si = _segment_taps(state.si, bank.gains_toward(state.si.aoa, idx), amp_si[:L], n_taps)
    taps_soi = _segment_taps(state.soi, bank.gains_toward(state.soi.aoa, idx), amp_soi[:L], n_taps)

    x_node, x_peer = training_waveforms(spec)
    seg = np.repeat(np.arange(L), spec.segment_samples)
    if impairments is None:
        p_tx, noise = 1.0, 0.0
    else:
        p_tx, noise = impairments.tx_power_mw, impairments.rx_noise_mw
        amp = math.sqrt(p_tx)
        tx_sd = math.sqrt(impairments.tx_noise_mw)
        x_node = amp * x_node + tx_sd * complex_normal(rng, len(x_node)) * (x_node != 0)
        x_peer = amp * x_peer + tx_sd * complex_normal(rng, len(x_peer)) * (x_peer != 0)
    y = _through_channel(x_node, taps_si, seg) + _through_channel(x_peer, taps_soi, seg)
    if noise > 0:
        y = y + math.sqrt(noise) * complex_normal(rng, len(y))

    def rss(offset):
        w = y[_windows(spec, offset)]
        p = np.mean(w.real ** 2 + w.imag ** 2, axis=1)
        return np.maximum((p - noise) / p_tx, RSS_FLOOR)

    si_p = rss(spec.gap_samples)
    soi_p = rss(spec.gap_samples + spec.data_samples)
    meas = [SegmentMeasurement(int(p), float(a), float(b)) for p, a, b in zip(idx, si_p, soi_p)]
    final = LinkState(state.si.with_amplitudes(amp_si[-1]), state.soi.with_amplitudes(amp_soi[-1]))
    chosen = select_pattern(meas) if meas else None
    return SelectionResult(chosen, meas, training_duration(spec), final)


def select_pattern(measurements) -> int:
    """Highest SIR; equal SIRs resolve to the lowest pattern index."""
    measurements = list(measurements)
    if not measurements:
        raise ValueError("no measurements to select from")
    best = max(m.sir_db for m in measurements)
    return min(m.pattern_index for m in measurements if m.sir_db == best)


def best_by_ratio(soi_energy, si_energy, indices) -> int:
    """Analytic counterpart of :func:`select_pattern` on noise-free energies."""
    ratio = np.maximum(soi_energy, RSS_FLOOR) / np.maximum(si_energy, RSS_FLOOR)
    indices = np.asarray(indices)
    return int(indices[ratio == ratio.max()].min())


@dataclass(frozen=True)
class SweepPoint:
    period_s: float
    mean_suppression_db: float
    n_trainings: int


def retraining_sweep(env: Environment, bank: PatternBank, pattern_set, periods, sim_duration: float,
                     rng: np.random.Generator, step_s: float = EVOLVE_STEP_S) -> list[SweepPoint]:
    """Time-averaged passive suppression of the selected pattern per re-training period.

    All periods replay the same channel trajectory. Training is taken as
    instantaneous and noise-free on the channel state at the first grid step
    at or after each period boundary.
    """
    periods = [float(p) for p in periods]
    if any(p <= 0 for p in periods):
        raise ValueError("re-training periods must be positive")
    idx = np.asarray(pattern_set, dtype=int)
    n_steps = max(int(round(sim_duration / step_s)), 1)
    state = LinkState.generate(env, rng)
    amp_si = ar1_trajectory(state.si, n_steps - 1, env, rng)
    amp_soi = ar1_trajectory(state.soi, n_steps - 1, env, rng)
    g_si = bank.gains_toward(state.si.aoa, idx)
    g_soi = bank.gains_toward(state.soi.aoa, idx)

    out = []
    for period in periods:
        supp, n_train = suppression_trace(state, amp_si, amp_soi, g_si, g_soi, period, step_s)
        out.append(SweepPoint(period, float(np.mean(supp)), n_train))
    return out


def suppression_trace(state: LinkState, amp_si, amp_soi, g_si, g_soi, period: float,
                      step_s: float = EVOLVE_STEP_S) -> tuple[np.ndarray, int]:
    """Per-step passive suppression (dB) of the pattern chosen at the latest training.

    ``amp_*`` are (steps, n_paths) amplitude trajectories on the ``step_s``
    grid and ``g_*`` the (n_patterns, n_paths) gains of the candidate set.
    Returns the trace and the number of trainings.
    """
    n_steps = len(amp_si)
    starts = sorted({math.ceil(k * period / step_s - 1e-9)
                     for k in range(int(n_steps * step_s / period) + 2)})
    starts = [s for s in starts if s < n_steps]
    supp = np.empty(n_steps)
    cand = np.arange(g_si.shape[0])
    for i, t0 in enumerate(starts):
        t1 = starts[i + 1] if i + 1 < len(starts) else n_steps
        chosen = best_by_ratio(tap_energies(state.soi, g_soi, amp_soi[t0]),
                               tap_energies(state.si, g_si, amp_si[t0]), cand)
        e = tap_energies(state.si, g_si[chosen:chosen + 1], amp_si[t0:t1])[:, 0]
        supp[t0:t1] = energy_to_db(e)
    return supp, len(starts)
