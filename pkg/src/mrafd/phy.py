"""OFDM link with additive transmit/receive noise, LS estimation and digital cancellation.

Frequency grids are (K subcarriers, symbols). The DFT is unitary, so a grid of
unit-energy symbols gives unit average time-domain power, and per-subcarrier
noise power equals per-sample noise power. Channel responses are the plain
(unnormalized) DFT of the taps, which makes circular convolution a per-
subcarrier product. Received signals are in sqrt(mW); estimates therefore
include the transmit amplitude.

A full-duplex frame carries two time-orthogonal preamble slots (this node,
then the peer) followed by data, so both channels can be estimated from one
received frame.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .antenna import OMNI, PatternBank
from .channel import (EVOLVE_STEP_S, ChannelRealization, Environment, ar1_trajectory, complex_normal,
                      energy_to_db, realize_channel)
from .impairments import ImpairmentConfig, mw_to_dbm
from .protocol import ConfigurationError, LinkState, RetrainingPolicy, run_training


class Constellation(enum.Enum):
    QPSK = 4
    QAM16 = 16
    QAM64 = 64

    @property
    def points(self) -> np.ndarray:
        side = int(math.isqrt(self.value))
        levels = np.arange(-(side - 1), side, 2, dtype=float)
        pts = (levels[:, None] + 1j * levels[None, :]).ravel()
        return pts / math.sqrt(np.mean(np.abs(pts) ** 2))

    def random_symbols(self, shape, rng: np.random.Generator) -> np.ndarray:
        return self.points[rng.integers(0, self.value, shape)]


@dataclass(frozen=True)
class OfdmConfig:
    n_subcarriers: int = 64
    cp_len: int = 16
    constellation: Constellation = Constellation.QPSK
    n_symbols_per_frame: int = 20
    n_frames: int = 50
    n_training_symbols: int = 2

    def __post_init__(self):
        if isinstance(self.constellation, str):
            object.__setattr__(self, "constellation", Constellation[self.constellation])
        if self.n_subcarriers != 64:
            raise ConfigurationError("n_subcarriers must be 64")
        if self.cp_len < 0 or self.n_training_symbols < 1 or self.n_symbols_per_frame < 1 or self.n_frames < 1:
            raise ConfigurationError("cp_len, symbol and frame counts must be positive")

    @property
    def symbol_samples(self) -> int:
        return self.n_subcarriers + self.cp_len


def preamble_sequence(n_subcarriers: int = 64) -> np.ndarray:
    k = np.arange(n_subcarriers)
    return np.exp(-1j * np.pi * k * k / n_subcarriers)


@dataclass(frozen=True, eq=False)
class OfdmFrame:
    freq_symbols: np.ndarray
    time_samples: np.ndarray
    config: OfdmConfig
    preamble_slot: int = 0
    n_preamble_slots: int = 1

    @property
    def n_preamble_symbols(self) -> int:
        return self.n_preamble_slots * self.config.n_training_symbols

    def slot_columns(self, slot: int) -> slice:
        nt = self.config.n_training_symbols
        return slice(slot * nt, (slot + 1) * nt)

    @property
    def data(self) -> np.ndarray:
        return self.freq_symbols[:, self.n_preamble_symbols:]


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    h_hat: np.ndarray
    source_frames: int = 1


@dataclass(frozen=True, eq=False)
class CancellationResult:
    residual_freq: np.ndarray
    pre_cancel_si_power: float
    post_cancel_si_power: float

    @property
    def dc_gain_db(self) -> float:
        return 10.0 * math.log10(self.pre_cancel_si_power / self.post_cancel_si_power)


@dataclass(frozen=True, eq=False)
class RateReport:
    r_fd: float
    r_hd: float
    per_subcarrier_sinr: np.ndarray

    @property
    def gain_percent(self) -> float:
        return 100.0 * (self.r_fd / self.r_hd - 1.0)


def ofdm_modulate(grid: np.ndarray, cp_len: int) -> np.ndarray:
    body = np.fft.ifft(grid, axis=0, norm="ortho")
    with_cp = np.concatenate([body[body.shape[0] - cp_len:], body], axis=0)
    return with_cp.T.ravel()


def modulate_frame(payload, config: OfdmConfig, preamble_slot: int = 0,
                   n_preamble_slots: int = 1) -> OfdmFrame:
    """Preamble slot(s) then ``n_symbols_per_frame`` data symbols.

    Only ``preamble_slot`` carries the known sequence; the other slots are
    silent so that several transmitters can share one frame. ``payload`` is a
    (K, M) grid or a flat sequence filled subcarrier-first and zero-padded.
    """
    K, M = config.n_subcarriers, config.n_symbols_per_frame
    payload = np.asarray(payload, dtype=complex)
    if payload.ndim == 2:
        if payload.shape != (K, M):
            raise ValueError(f"payload grid must be {K}x{M}, got {payload.shape}")
        data = payload
    else:
        if payload.size > K * M:
            raise ValueError(f"payload of {payload.size} symbols exceeds the {K}x{M} grid")
        data = np.zeros(K * M, dtype=complex)
        data[:payload.size] = payload
        data = data.reshape(M, K).T
    if not 0 <= preamble_slot < n_preamble_slots:
        raise ValueError("preamble_slot outside the slot range")
    nt = config.n_training_symbols
    pre = np.zeros((K, nt * n_preamble_slots), dtype=complex)
    pre[:, preamble_slot * nt:(preamble_slot + 1) * nt] = preamble_sequence(K)[:, None]
    grid = np.concatenate([pre, data], axis=1)
    return OfdmFrame(grid, ofdm_modulate(grid, config.cp_len), config, preamble_slot, n_preamble_slots)


def demodulate(time_samples, config: OfdmConfig) -> np.ndarray:
    x = np.asarray(time_samples)
    n = config.symbol_samples
    if x.size % n:
        raise ValueError(f"sample count {x.size} is not a multiple of {n}")
    sym = x.reshape(-1, n)[:, config.cp_len:]
    return np.fft.fft(sym, axis=1, norm="ortho").T


def _taps(h) -> np.ndarray:
    return np.asarray(h.taps if isinstance(h, ChannelRealization) else h, dtype=complex)


def frequency_response(taps, n_subcarriers: int = 64) -> np.ndarray:
    return np.fft.fft(_taps(taps), n_subcarriers)


def apply_link(tx_si: OfdmFrame | None, tx_soi: OfdmFrame | None, h_si, h_soi,
               imp: ImpairmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Received samples: h_si * (x_si + z_T) + h_soi * (x_soi + z_T') + z_R.

    Both nodes transmit at ``imp.tx_power_dbm``. A ``None`` frame is a silent
    node (no signal, no transmitter noise).
    """
    frames = [f for f in (tx_si, tx_soi) if f is not None]
    if not frames:
        raise ValueError("at least one transmitting node is required")
    cfg = frames[0].config
    n = len(frames[0].time_samples)
    y = np.zeros(n, dtype=complex)
    amp, tx_sd = math.sqrt(imp.tx_power_mw), math.sqrt(imp.tx_noise_mw)
    for frame, h in ((tx_si, h_si), (tx_soi, h_soi)):
        if frame is None:
            continue
        taps = _taps(h)
        if len(taps) > cfg.cp_len + 1:
            raise ConfigurationError(f"{len(taps)} channel taps exceed cp_len + 1 = {cfg.cp_len + 1}")
        if len(frame.time_samples) != n:
            raise ValueError("frames must have equal length")
        x = amp * frame.time_samples
        if tx_sd > 0:
            x = x + tx_sd * complex_normal(rng, n)
        y += np.convolve(x, taps)[:n]
    if imp.rx_noise_mw > 0:
        y += math.sqrt(imp.rx_noise_mw) * complex_normal(rng, n)
    return y


def estimate_channel(rx_preamble, known_preamble, config: OfdmConfig | None = None) -> ChannelEstimate:
    """Per-subcarrier least squares, averaged over the training symbols."""
    Y = np.asarray(rx_preamble)
    X = np.asarray(known_preamble)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim == 1:
        X = np.broadcast_to(X[:, None], Y.shape)
    if np.any(np.abs(X) == 0):
        raise ValueError("training symbols need nonzero amplitude on every subcarrier")
    return ChannelEstimate(np.mean(Y / X, axis=1), Y.shape[1])


def digital_cancel(Y, est: ChannelEstimate, X_si) -> CancellationResult:
    Y = np.asarray(Y)
    residual = Y - est.h_hat[:, None] * np.asarray(X_si)
    return CancellationResult(residual, _power(Y), _power(residual))


def _power(a) -> float:
    a = np.asarray(a)
    return float(np.mean(a.real ** 2 + a.imag ** 2))


def compute_evm_snr(received, reference, axis: int = -1):
    """SNR = 1 / EVM^2 along ``axis``; perfect reception gives ``inf``."""
    r = np.asarray(received)
    ref = np.asarray(reference)
    if r.size == 0 or ref.size == 0:
        raise ValueError("EVM needs non-empty symbol sequences")
    if r.shape != ref.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {ref.shape}")
    err = np.mean(np.abs(r - ref) ** 2, axis=axis)
    sig = np.mean(np.abs(ref) ** 2, axis=axis)
    with np.errstate(divide="ignore"):
        snr = sig / err
    return float(snr) if np.ndim(snr) == 0 else snr


def compute_rates(sinr, snr) -> RateReport:
    sinr = np.asarray(sinr, dtype=float)
    snr = np.asarray(snr, dtype=float)
    if (sinr < 0).any() or (snr < 0).any():
        raise ValueError("SINR/SNR grids must be nonnegative")
    return RateReport(float(np.mean(np.log2(1.0 + sinr))), float(np.mean(0.5 * np.log2(1.0 + snr))), sinr)


@dataclass(frozen=True)
class FrameTrace:
    frame: int
    time_s: float
    pattern: int
    hd_pattern: int
    passive_db: float
    pre_cancel_dbm: float
    post_cancel_dbm: float
    dc_gain_db: float
    sinr_db: float
    snr_db: float


@dataclass(frozen=True, eq=False)
class SessionResult:
    rates: RateReport
    cancellation: CancellationResult
    trace: list[FrameTrace]
    tx_power_dbm: float
    passive_db: float

    @property
    def total_db(self) -> float:
        return self.tx_power_dbm - mw_to_dbm(self.cancellation.post_cancel_si_power)

    def report(self) -> dict:
        return {
            "tx_power_dbm": self.tx_power_dbm,
            "passive_db": self.passive_db,
            "dc_gain_db": self.cancellation.dc_gain_db,
            "total_db": self.total_db,
            "r_fd": self.rates.r_fd,
            "r_hd": self.rates.r_hd,
            "gain_percent": self.rates.gain_percent,
        }


def _db(x):
    with np.errstate(divide="ignore"):
        return float(10 * np.log10(x))


def run_full_duplex_session(env: Environment, bank: PatternBank, pattern_set, policy: RetrainingPolicy,
                            config: OfdmConfig, imp: ImpairmentConfig, rng: np.random.Generator,
                            hd_receive: str = "reselect",
                            frame_interval_s: float = EVOLVE_STEP_S) -> SessionResult:
    """Full-duplex data frames with periodic antenna training, plus a half-duplex baseline.

    Frames start every ``frame_interval_s``; the antenna is re-trained at
    every re-training period boundary. Both modes see the same channel
    trajectory and peer payload. The half-duplex receiver uses the pattern
    that maximized SOI power in the last training (``hd_receive="reselect"``)
    or the omni pattern (``"omni"``). An extra pass with the peer silent
    measures self-interference before and after digital cancellation.
    """
    if hd_receive not in ("reselect", "omni"):
        raise ValueError(f"hd_receive must be 'reselect' or 'omni', got {hd_receive!r}")
    spec = policy.spec.with_patterns(pattern_set)
    policy = replace(policy, spec=spec)
    chan_rng, train_rng, data_rng, fd_rng, hd_rng, si_rng = (
        np.random.default_rng(s) for s in rng.integers(0, 2 ** 63, size=6))
    state0 = LinkState.generate(env, chan_rng)
    N, M, K = config.n_frames, config.n_symbols_per_frame, config.n_subcarriers
    rho = env.dynamics_rho ** (frame_interval_s / EVOLVE_STEP_S)
    amp_si = ar1_trajectory(state0.si, N - 1, env, chan_rng, rho)
    amp_soi = ar1_trajectory(state0.soi, N - 1, env, chan_rng, rho)
    nt = config.n_training_symbols
    pre = preamble_sequence(K)

    sinr = np.empty((N, M, K))
    snr = np.empty((N, M, K))
    trace, residuals, pre_p, post_p, passive = [], [], [], [], []
    chosen = hd_pattern = None
    next_train = 0.0
    for n in range(N):
        t = n * frame_interval_s
        state = LinkState(state0.si.with_amplitudes(amp_si[n]), state0.soi.with_amplitudes(amp_soi[n]))
        if t >= next_train - 1e-12:
            res = run_training(state, bank, spec, env, imp, train_rng)
            chosen = res.chosen_pattern
            best_soi = max(m.soi_power for m in res.measurements)
            hd_pattern = min(m.pattern_index for m in res.measurements if m.soi_power == best_soi)
            next_train = t + policy.retrain_period_s
        if hd_receive == "omni":
            hd_pattern = OMNI

        def taps(paths, pattern):
            return realize_channel(paths, bank[pattern]).taps

        h_si, h_soi = taps(state.si, chosen), taps(state.soi, chosen)
        passive_db = float(energy_to_db(np.sum(np.abs(h_si) ** 2)))
        x_node = modulate_frame(config.constellation.random_symbols((K, M), data_rng), config, 0, 2)
        x_peer = modulate_frame(config.constellation.random_symbols((K, M), data_rng), config, 1, 2)

        Y = demodulate(apply_link(x_node, x_peer, h_si, h_soi, imp, fd_rng), config)
        est_si = estimate_channel(Y[:, :nt], pre)
        est_soi = estimate_channel(Y[:, nt:2 * nt], pre)
        canc = digital_cancel(Y[:, 2 * nt:], est_si, x_node.data)
        eq = canc.residual_freq / est_soi.h_hat[:, None]
        sinr[n] = compute_evm_snr(eq, x_peer.data, axis=1)[None, :]

        Ysi = demodulate(apply_link(x_node, None, h_si, None, imp, si_rng), config)
        si_canc = digital_cancel(Ysi[:, 2 * nt:], estimate_channel(Ysi[:, :nt], pre), x_node.data)
        residuals.append(si_canc.residual_freq)
        pre_p.append(si_canc.pre_cancel_si_power)
        post_p.append(si_canc.post_cancel_si_power)
        passive.append(passive_db)

        h_si_hd, h_soi_hd = taps(state.si, hd_pattern), taps(state.soi, hd_pattern)
        Yhd = demodulate(apply_link(None, x_peer, h_si_hd, h_soi_hd, imp, hd_rng), config)
        est_hd = estimate_channel(Yhd[:, nt:2 * nt], pre)
        snr[n] = compute_evm_snr(Yhd[:, 2 * nt:] / est_hd.h_hat[:, None], x_peer.data, axis=1)[None, :]

        trace.append(FrameTrace(n, t, int(chosen), int(hd_pattern), passive_db,
                                mw_to_dbm(si_canc.pre_cancel_si_power), mw_to_dbm(si_canc.post_cancel_si_power),
                                si_canc.dc_gain_db, _db(np.mean(sinr[n])), _db(np.mean(snr[n]))))

    cancellation = CancellationResult(np.concatenate(residuals, axis=1), float(np.mean(pre_p)),
                                      float(np.mean(post_p)))
    return SessionResult(compute_rates(sinr, snr), cancellation, trace, imp.tx_power_dbm,
                         float(np.mean(passive)))


def residual_floor_mw(si_energy: float, imp: ImpairmentConfig, n_training: int | None = None) -> float:
    """Expected post-cancellation residual: transmitter noise through the SI channel plus receiver noise.

    With ``n_training`` the LS estimation error (a 1/n_training share of the
    same noise) is included.
    """
    floor = si_energy * imp.tx_noise_mw + imp.rx_noise_mw
    return floor * (1.0 + 1.0 / n_training) if n_training else floor
