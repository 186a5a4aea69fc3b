"""Empirical CDFs, SOI power loss and deterministic CSV/JSON artifact writers.

Every CSV artifact starts with a ``# config_hash: <hex>`` line so that
aggregation can refuse to mix runs from different configurations. Floats are
written with ``repr`` so files round-trip exactly and are byte-stable.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .antenna import PatternBank
from .channel import Environment, ar1_trajectory, energy_to_db, tap_energies
from .protocol import LinkState, best_by_ratio, suppression_trace

HASH_PREFIX = "# config_hash: "


class HashMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    sorted_values: np.ndarray
    probabilities: np.ndarray

    def __call__(self, x):
        return np.searchsorted(self.sorted_values, x, side="right") / len(self.sorted_values)

    def __len__(self):
        return len(self.sorted_values)


def empirical_cdf(values) -> EmpiricalCdf:
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    return EmpiricalCdf(v, np.arange(1, v.size + 1) / v.size)


def ks_statistic(cdf: EmpiricalCdf, reference) -> float:
    """Sup distance between ``cdf`` and a reference CDF callable."""
    f = np.asarray(reference(cdf.sorted_values), dtype=float)
    n = len(cdf)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def ks_critical_95(n: int) -> float:
    return 1.358 / math.sqrt(n)


@dataclass(frozen=True)
class SoiRun:
    env: str
    seed: int
    soi_power: float


@dataclass(frozen=True)
class SoiLossRecord:
    env: str
    seed: int
    loss_db: float


def soi_power_loss(mra_run: SoiRun, omni_run: SoiRun) -> SoiLossRecord:
    """Omni over MRA received SOI power in dB; negative means the MRA gains."""
    if (mra_run.env, mra_run.seed) != (omni_run.env, omni_run.seed):
        raise ValueError("SOI loss needs runs from the same environment and seed")
    return SoiLossRecord(mra_run.env, mra_run.seed, 10.0 * (math.log10(omni_run.soi_power) - math.log10(mra_run.soi_power)))


def soi_loss_for_state(state: LinkState, bank: PatternBank, pattern_set, env_name: str = "",
                       seed: int = 0) -> SoiLossRecord:
    """SOI loss of the SIR-selected pattern against omni reception on one channel snapshot."""
    idx = np.asarray(pattern_set, dtype=int)
    e_si = tap_energies(state.si, bank.gains_toward(state.si.aoa, idx))
    e_soi = tap_energies(state.soi, bank.gains_toward(state.soi.aoa, idx))
    p = best_by_ratio(e_soi, e_si, np.arange(len(idx)))
    omni = tap_energies(state.soi, np.ones((1, len(state.soi))))[0]
    return soi_power_loss(SoiRun(env_name, seed, float(e_soi[p])), SoiRun(env_name, seed, float(omni)))


def suppression_samples(env: Environment, bank: PatternBank, pattern_set, rng: np.random.Generator,
                        duration_s: float = 1.0, period_s: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Per-ms passive suppression of omni reception and of the re-trained MRA."""
    idx = np.asarray(pattern_set, dtype=int)
    steps = max(int(round(duration_s * 1e3)), 1)
    state = LinkState.generate(env, rng)
    amp_si = ar1_trajectory(state.si, steps - 1, env, rng)
    amp_soi = ar1_trajectory(state.soi, steps - 1, env, rng)
    mra, _ = suppression_trace(state, amp_si, amp_soi, bank.gains_toward(state.si.aoa, idx),
                               bank.gains_toward(state.soi.aoa, idx), period_s)
    omni = energy_to_db(tap_energies(state.si, np.ones((1, len(state.si))), amp_si)[:, 0])
    return omni, mra


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows, config_hash_: str) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"{HASH_PREFIX}{config_hash_}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[str | None, list[str], list[list[str]]]:
    h = None
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith(HASH_PREFIX):
            h = line[len(HASH_PREFIX):].strip()
        elif not line.startswith("#"):
            body.append(line)
    rows = list(csv.reader(body))
    return h, rows[0], rows[1:]


def artifact_hash(path) -> str | None:
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text()).get("config_hash")
    with open(path) as fh:
        for line in fh:
            if line.startswith(HASH_PREFIX):
                return line[len(HASH_PREFIX):].strip()
            if not line.startswith("#"):
                break
    return None


def write_json(path, payload: dict, config_hash_: str) -> Path:
    path = Path(path)
    data = dict(payload, config_hash=config_hash_)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def check_hashes(paths, expected: str | None = None) -> str:
    """Common config hash of ``paths``; raises if any differs or is missing."""
    found = {}
    for p in paths:
        found[str(p)] = artifact_hash(p)
    hashes = set(found.values())
    if expected is not None:
        hashes.add(expected)
    if None in hashes or len(hashes) != 1:
        detail = ", ".join(f"{p}={h}" for p, h in sorted(found.items()))
        raise HashMismatchError(f"artifacts carry different config hashes: {detail}")
    return hashes.pop()


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, artifacts, config_hash_: str, seed: int, timestamp: str | None = None) -> Path:
    """JSON manifest of artifacts with their digests. The only file carrying a timestamp."""
    path = Path(path)
    entries = [{"file": Path(a).name, "sha256": sha256_file(a)} for a in sorted(artifacts, key=str)]
    stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    data = {"config_hash": config_hash_, "master_seed": seed, "generated_utc": stamp, "artifacts": entries}
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
