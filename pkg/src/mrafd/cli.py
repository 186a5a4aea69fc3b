"""Command-line orchestration: ``mrafd <subcommand> [--config FILE] [--out DIR] ...``.

Artifacts go to the output directory and every CSV/JSON carries the config
hash. Typical order: build-bank, profile, select-set/size-curve, train,
retrain-sweep, session, report.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .antenna import N_CONFIGS, PatternBank, build_pattern_bank
from .channel import DYNAMIC_RHO, Orientation
from .heuristic import (SuppressionProfile, collect_profiles, evaluate_sets, read_pattern_set, select_set,
                        set_size_curve, threshold_for_size, write_pattern_set)
from .impairments import mw_to_dbm
from .metrics import (HashMismatchError, check_hashes, empirical_cdf, read_csv, soi_loss_for_state,
                      suppression_samples, write_csv, write_json, write_manifest)
from .phy import run_full_duplex_session
from .protocol import LinkState, RetrainingPolicy, compute_overhead, retraining_sweep, run_training, training_duration
from .scenario import ConfigError, ScenarioConfig, load_config
from .seeding import rng_for

EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_HASH = 4


class MissingInput(RuntimeError):
    pass


def _out(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_bank(cfg: ScenarioConfig) -> PatternBank:
    path = cfg.bank_file
    if not path.exists():
        raise MissingInput(f"pattern bank {path} not found; run `mrafd build-bank` first")
    return PatternBank.load(path)


def _load_profile(cfg: ScenarioConfig) -> SuppressionProfile:
    path = Path(cfg.output_dir) / "profile.csv"
    if not path.exists():
        raise MissingInput(f"profile {path} not found; run `mrafd profile` first")
    check_hashes([path], cfg.hash())
    return SuppressionProfile.from_csv(path)


def _pattern_set(cfg: ScenarioConfig, override: str | None) -> tuple[int, ...]:
    name = override or cfg.session.pattern_set
    if name == "full":
        return tuple(range(N_CONFIGS))
    if name == "target":
        return threshold_for_size(_load_profile(cfg), cfg.set_target_size).members
    path = Path(name)
    if not path.exists():
        raise MissingInput(f"pattern-set file {path} not found; run `mrafd select-set` first")
    return read_pattern_set(path)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def cmd_build_bank(cfg: ScenarioConfig, args) -> None:
    bank = build_pattern_bank(cfg.geometry.build())
    bank.save(cfg.bank_file)
    write_json(Path(cfg.output_dir) / "bank.json",
               {"file": cfg.bank_file.name, "patterns": len(bank), "geometry_digest": bank.geometry.digest()},
               cfg.hash())
    print(f"wrote {cfg.bank_file} ({len(bank)} patterns)")


def cmd_profile(cfg: ScenarioConfig, args) -> None:
    bank = _load_bank(cfg)
    envs = cfg.profiling_environments()
    profile = collect_profiles(envs, cfg.profiling.orientations, bank, cfg.master_seed, cfg.profiling.duration_s)
    out = _out(cfg)
    h = cfg.hash()
    write_csv(out / "profile.csv", ["pattern_index", "max_suppression_db"],
              enumerate(profile.max_suppression_db), h)
    write_csv(out / "fig8_curve.csv", ["threshold_db", "count"], set_size_curve(profile, cfg.thresholds_db), h)
    print(f"profiled {len(profile.runs_meta)} runs; best suppression {profile.max_suppression_db.max():.1f} dB")


def cmd_select_set(cfg: ScenarioConfig, args) -> None:
    ts = select_set(_load_profile(cfg), args.threshold)
    path = Path(args.output) if args.output else _out(cfg) / f"pattern_set_{args.threshold:g}.txt"
    write_pattern_set(path, ts.members, f"config_hash: {cfg.hash()}")
    print(f"{len(ts)} patterns above {args.threshold:g} dB -> {path}")


def cmd_size_curve(cfg: ScenarioConfig, args) -> None:
    thresholds = args.thresholds if args.thresholds is not None else list(cfg.thresholds_db)
    curve = set_size_curve(_load_profile(cfg), thresholds)
    write_csv(_out(cfg) / "fig8_curve.csv", ["threshold_db", "count"], curve, cfg.hash())
    for x, n in curve:
        print(f"{x:g}\t{n}")


def cmd_train(cfg: ScenarioConfig, args) -> None:
    bank = _load_bank(cfg)
    pset = _pattern_set(cfg, args.pattern_set)
    spec = cfg.training.spec(pset)
    env = cfg.environment
    state = LinkState.generate(env, rng_for(cfg.master_seed, "train", "channel"))
    res = run_training(state, bank, spec, env, cfg.impairments, rng_for(cfg.master_seed, "train", "noise"))
    out = _out(cfg)
    h = cfg.hash()
    write_csv(out / "training.csv", ["pattern_index", "si_db", "soi_db", "sir_db"], res.as_rows(), h)
    policy = RetrainingPolicy(cfg.session.retrain_period_s, spec)
    write_json(out / "training.json", {"chosen_pattern": res.chosen_pattern, "n_patterns": spec.n_patterns,
                                       "training_duration_s": res.training_duration_s,
                                       "retrain_period_s": policy.retrain_period_s,
                                       "overhead": compute_overhead(policy)}, h)
    print(f"chosen pattern {res.chosen_pattern} of {spec.n_patterns} in {res.training_duration_s * 1e3:.3f} ms")


def cmd_retrain_sweep(cfg: ScenarioConfig, args) -> None:
    bank = _load_bank(cfg)
    pset = _pattern_set(cfg, args.pattern_set)
    periods = args.periods if args.periods is not None else list(cfg.retrain.periods_s)
    orients = list(Orientation)
    per_env = []
    for i in range(cfg.retrain.n_environments):
        env = replace(cfg.environment, dynamics_rho=DYNAMIC_RHO, seed=i, orientation=orients[i % len(orients)])
        pts = retraining_sweep(env, bank, pset, periods, cfg.retrain.sim_duration_s,
                               rng_for(cfg.master_seed, "retrain", i))
        per_env.append([p.mean_suppression_db for p in pts])
    mean = np.mean(per_env, axis=0)
    t_train = training_duration(cfg.training.spec(pset))
    rows = []
    for period, m in zip(periods, mean):
        overhead = t_train / (period - t_train) if period > t_train else float("inf")
        rows.append((period, float(m), overhead))
    write_csv(_out(cfg) / "fig10_sweep.csv", ["period_s", "mean_suppression_db", "overhead"], rows, cfg.hash())
    for period, m, o in rows:
        print(f"{period:g} s\t{m:.2f} dB\toverhead {100 * o:.3f}%")


def _session(cfg, bank, pset, tx_power):
    imp = replace(cfg.impairments, tx_power_dbm=tx_power)
    return run_full_duplex_session(cfg.environment, bank, pset, cfg.policy(pset), cfg.ofdm, imp,
                                   rng_for(cfg.master_seed, "session", "rates"), cfg.session.hd_receive)


def cmd_session(cfg: ScenarioConfig, args) -> None:
    bank = _load_bank(cfg)
    pset = _pattern_set(cfg, args.pattern_set)
    out = _out(cfg)
    h = cfg.hash()
    if args.sweep:
        res11, res12 = [], []
        for p in cfg.session.tx_power_sweep_dbm:
            r = _session(cfg, bank, pset, p)
            c = r.cancellation
            si_mw = 10 ** ((p - r.passive_db) / 10)
            res11.append((p, mw_to_dbm(c.pre_cancel_si_power), mw_to_dbm(c.post_cancel_si_power), r.passive_db,
                          c.dc_gain_db, r.total_db, cfg.impairments.rx_noise_floor_dbm,
                          mw_to_dbm(si_mw * 10 ** (cfg.impairments.tx_noise_dbc / 10))))
            res12.append((p, r.rates.r_fd, r.rates.r_hd, r.rates.gain_percent))
        write_csv(out / "fig11_residual.csv",
                  ["tx_power_dbm", "pre_cancel_dbm", "post_cancel_dbm", "passive_db", "dc_gain_db", "total_db",
                   "rx_floor_dbm", "tx_noise_floor_dbm"], res11, h)
        write_csv(out / "fig12_rates.csv", ["tx_power_dbm", "r_fd", "r_hd", "gain_percent"], res12, h)
        for row in res12:
            print(f"{row[0]:g} dBm\tgain {row[3]:.1f}%")
        return
    tx = args.tx_power if args.tx_power is not None else cfg.impairments.tx_power_dbm
    r = _session(cfg, bank, pset, tx)
    write_json(out / "session.json", r.report(), h)
    fields_ = ["frame", "time_s", "pattern", "hd_pattern", "passive_db", "pre_cancel_dbm", "post_cancel_dbm",
               "dc_gain_db", "sinr_db", "snr_db"]
    write_csv(out / "session_trace.csv", fields_, ([getattr(t, f) for f in fields_] for t in r.trace), h)
    rep = r.report()
    print(json.dumps({k: round(v, 3) for k, v in rep.items()}))


def cmd_report(cfg: ScenarioConfig, args) -> None:
    bank = _load_bank(cfg)
    profile = _load_profile(cfg)
    out = _out(cfg)
    h = cfg.hash()
    target = threshold_for_size(profile, cfg.set_target_size)
    full = tuple(range(N_CONFIGS))
    held_out = cfg.held_out_environments()

    omni_s, mra_s = [], []
    for i, env in enumerate(held_out):
        o, m = suppression_samples(env, bank, full, rng_for(cfg.master_seed, "fig5", i), 0.5,
                                   cfg.session.retrain_period_s)
        omni_s.append(o)
        mra_s.append(m)
    rows = []
    for name, samples in (("omni", np.concatenate(omni_s)), ("mra", np.concatenate(mra_s))):
        cdf = empirical_cdf(samples)
        rows.extend((name, v, p) for v, p in zip(cdf.sorted_values, cdf.probabilities))
    write_csv(out / "fig5_cdf.csv", ["series", "suppression_db", "probability"], rows, h)

    loss_rows = []
    for o in Orientation:
        env = cfg.environment.with_orientation(o)
        for s in range(10):
            state = LinkState.generate(replace(env, seed=s), rng_for(cfg.master_seed, "soi_loss", o.value, s))
            rec = soi_loss_for_state(state, bank, full, o.value, s)
            loss_rows.append((o.value, s, rec.loss_db))
    write_csv(out / "soi_loss.csv", ["orientation", "seed", "loss_db"], loss_rows, h)

    ev = evaluate_sets({"full": full, f"set_{len(target)}": target.members}, held_out, bank, cfg.master_seed)
    write_csv(out / "generalization.csv", ["set", "size", "mean_suppression_db", "mean_sir_db"],
              ((e.name, e.size, e.mean_suppression_db, e.mean_sir_db) for e in ev), h)

    summary = {
        "omni_mean_suppression_db": float(np.mean(np.concatenate(omni_s))),
        "mra_mean_suppression_db": float(np.mean(np.concatenate(mra_s))),
        "target_set_size": len(target),
        "target_set_threshold_db": target.threshold_db,
        "target_set_gap_db": ev[0].mean_suppression_db - ev[1].mean_suppression_db,
        "soi_loss_mean_db": {o.value: float(np.mean([r[2] for r in loss_rows if r[0] == o.value]))
                             for o in Orientation},
    }
    write_json(out / "summary.json", summary, h)

    artifacts = sorted(p for p in out.iterdir() if p.suffix in (".csv", ".json") and p.name != "manifest.json")
    check_hashes(artifacts, h)
    write_manifest(out / "manifest.json", artifacts + sorted(out.glob("*.txt")) + [cfg.bank_file], h,
                   cfg.master_seed)
    print(json.dumps(summary, indent=2))


COMMANDS = {
    "build-bank": cmd_build_bank,
    "profile": cmd_profile,
    "select-set": cmd_select_set,
    "size-curve": cmd_size_curve,
    "train": cmd_train,
    "retrain-sweep": cmd_retrain_sweep,
    "session": cmd_session,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file (defaults apply to missing keys)")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--bank", help="pattern bank path (overrides bank_path)")
    common.add_argument("--seed", type=int, help="master seed (overrides master_seed)")

    parser = argparse.ArgumentParser(prog="mrafd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-bank", parents=[common], help="synthesize and save the 4096-pattern bank")
    sub.add_parser("profile", parents=[common], help="per-pattern suppression profile over the profiling suite")
    p = sub.add_parser("select-set", parents=[common], help="patterns whose profile exceeds a threshold")
    p.add_argument("--threshold", type=float, required=True, help="threshold in dB")
    p.add_argument("--output", help="pattern-set file (default: OUT/pattern_set_<X>.txt)")
    p = sub.add_parser("size-curve", parents=[common], help="pattern-set size per threshold")
    p.add_argument("--thresholds", type=_floats, help="ascending dB list, e.g. '40,45,50'")
    for name, text in (("train", "one training frame on the configured environment"),
                       ("retrain-sweep", "suppression vs re-training period in dynamic environments"),
                       ("session", "full-duplex OFDM session with half-duplex baseline")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--pattern-set", help="'full', 'target' (set closest to set_target_size) or a file")
        if name == "retrain-sweep":
            p.add_argument("--periods", type=_floats, help="re-training periods in seconds")
        if name == "session":
            p.add_argument("--tx-power", type=float, help="transmit power in dBm")
            p.add_argument("--sweep", action="store_true", help="run the configured tx power sweep")
    sub.add_parser("report", parents=[common], help="CDFs, SOI loss, generalization and manifest")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"output_dir": args.out, "bank_path": args.bank, "master_seed": args.seed})
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"mrafd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingInput as exc:
        print(f"mrafd: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except HashMismatchError as exc:
        print(f"mrafd: refusing to aggregate: {exc}", file=sys.stderr)
        return EXIT_HASH
    return 0


if __name__ == "__main__":
    sys.exit(main())
