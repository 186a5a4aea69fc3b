"""Reduced pattern sets from per-pattern suppression profiles.

Every pattern's passive suppression is tracked over a time-sampled run in each
profiling environment and the best value seen is kept. A threshold X then
keeps the patterns that beat X at least once, which shrinks the training frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .antenna import N_CONFIGS, PatternBank
from .channel import (EVOLVE_STEP_S, Environment, Orientation, ar1_trajectory, energy_to_db,
                      generate_si_paths, tap_energies)
from .protocol import LinkState, best_by_ratio
from .seeding import rng_for

PROFILE_DURATION_S = 2.0
_CHUNK = 256


@dataclass(frozen=True, eq=False)
class SuppressionProfile:
    max_suppression_db: np.ndarray
    runs_meta: list = field(default_factory=list)

    def __post_init__(self):
        v = np.asarray(self.max_suppression_db, dtype=float)
        if v.shape != (N_CONFIGS,):
            raise ValueError(f"profile needs {N_CONFIGS} entries, got {v.shape}")
        if np.isnan(v).any() or (v == -np.inf).any():
            raise ValueError("profile entries must be finite or +inf")
        object.__setattr__(self, "max_suppression_db", v)

    def merge(self, other: "SuppressionProfile") -> "SuppressionProfile":
        return SuppressionProfile(np.maximum(self.max_suppression_db, other.max_suppression_db),
                                  list(self.runs_meta) + list(other.runs_meta))

    def to_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(["pattern_index", "max_suppression_db"])
            for i, v in enumerate(self.max_suppression_db):
                w.writerow([i, "inf" if v == math.inf else repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "SuppressionProfile":
        with open(path, newline="") as fh:
            rows = list(csv.reader(line for line in fh if not line.startswith("#")))
        if rows[0] != ["pattern_index", "max_suppression_db"]:
            raise ValueError(f"{path}: unexpected profile header {rows[0]}")
        vals = np.full(N_CONFIGS, np.nan)
        for idx, v in rows[1:]:
            vals[int(idx)] = float(v)
        return cls(vals)


@dataclass(frozen=True)
class ThresholdSet:
    threshold_db: float
    members: tuple[int, ...]

    def __len__(self):
        return len(self.members)


def profile_run(env: Environment, bank: PatternBank, rng: np.random.Generator,
                duration_s: float = PROFILE_DURATION_S, step_s: float = EVOLVE_STEP_S) -> np.ndarray:
    """Best suppression of every pattern over one time-sampled run."""
    si = generate_si_paths(env, rng)
    steps = max(int(round(duration_s / step_s)), 0)
    amps = ar1_trajectory(si, steps, env, rng)
    if env.dynamics_rho == 1.0:
        amps = amps[:1]
    gains = bank.gains_toward(si.aoa)
    low = np.full(N_CONFIGS, np.inf)
    for start in range(0, len(amps), _CHUNK):
        e = tap_energies(si, gains, amps[start:start + _CHUNK])
        low = np.minimum(low, e.min(axis=0))
    return energy_to_db(low)


def collect_profiles(environments, orientations, bank: PatternBank, seed: int = 0,
                     duration_s: float = PROFILE_DURATION_S) -> SuppressionProfile:
    """Elementwise max of :func:`profile_run` over every (environment, orientation).

    Each run gets its own generator derived from ``seed``, the environment
    index and seed, and the orientation, so runs are order-independent.
    """
    environments = list(environments)
    if not environments:
        raise ValueError("at least one profiling environment is required")
    orientations = [Orientation(o) for o in orientations]
    best = np.full(N_CONFIGS, -np.inf)
    meta = []
    for i, env in enumerate(environments):
        for o in orientations:
            run_env = env.with_orientation(o)
            rng = rng_for(seed, "profile", i, env.seed, o.value)
            best = np.maximum(best, profile_run(run_env, bank, rng, duration_s))
            meta.append((env.name or f"env{i}", env.seed, o.value))
    return SuppressionProfile(best, meta)


def select_set(profile: SuppressionProfile, threshold_db: float) -> ThresholdSet:
    members = np.flatnonzero(profile.max_suppression_db > threshold_db)
    return ThresholdSet(float(threshold_db), tuple(int(m) for m in members))


def set_size_curve(profile: SuppressionProfile, thresholds) -> list[tuple[float, int]]:
    thresholds = [float(x) for x in thresholds]
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    v = profile.max_suppression_db
    return [(x, int(np.count_nonzero(v > x))) for x in thresholds]


def threshold_for_size(profile: SuppressionProfile, target: int) -> ThresholdSet:
    """Threshold set whose size is closest to ``target`` (larger set on ties)."""
    v = np.sort(profile.max_suppression_db)
    candidates = np.r_[-np.inf, np.unique(v)]
    counts = np.array([np.count_nonzero(v > x) for x in candidates])
    best = np.flatnonzero(np.abs(counts - target) == np.abs(counts - target).min())[0]
    return select_set(profile, candidates[best])


def write_pattern_set(path, members, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for m in members:
            fh.write(f"{int(m)}\n")


def read_pattern_set(path) -> tuple[int, ...]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            out.append(int(line))
    if any(not 0 <= m < N_CONFIGS for m in out):
        raise IndexError(f"{path}: pattern index outside 0..{N_CONFIGS - 1}")
    return tuple(out)


@dataclass(frozen=True)
class SetEvaluation:
    name: str
    size: int
    mean_suppression_db: float
    mean_sir_db: float
    per_env_suppression_db: tuple[float, ...]


def evaluate_sets(sets: dict, environments, bank: PatternBank, seed: int = 0) -> list[SetEvaluation]:
    """Suppression of the SIR-selected pattern of each set on shared channel snapshots."""
    sets = {k: np.asarray(v, dtype=int) for k, v in sets.items()}
    supp = {k: [] for k in sets}
    sir = {k: [] for k in sets}
    for i, env in enumerate(environments):
        state = LinkState.generate(env, rng_for(seed, "evaluate", i, env.seed))
        g_si = bank.gains_toward(state.si.aoa)
        g_soi = bank.gains_toward(state.soi.aoa)
        e_si = tap_energies(state.si, g_si)
        e_soi = tap_energies(state.soi, g_soi)
        for name, idx in sets.items():
            p = best_by_ratio(e_soi[idx], e_si[idx], idx)
            supp[name].append(float(energy_to_db(e_si[p])))
            sir[name].append(10 * math.log10(e_soi[p] / max(e_si[p], 1e-300)))
    return [SetEvaluation(name, len(sets[name]), float(np.mean(supp[name])), float(np.mean(sir[name])),
                          tuple(supp[name])) for name in sets]
