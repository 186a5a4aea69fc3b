import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrafd.antenna import N_CONFIGS
from mrafd.channel import Environment, Orientation, bank_energies, generate_si_paths, passive_suppression_db, realize_channel
from mrafd.heuristic import (SuppressionProfile, ThresholdSet, collect_profiles, evaluate_sets, profile_run,
                             read_pattern_set, select_set, set_size_curve, threshold_for_size, write_pattern_set)
from mrafd.scenario import ALL_ORIENTATIONS, held_out_suite, profiling_suite
from mrafd.seeding import rng_for

profile_values = st.lists(st.one_of(st.floats(-50, 120, allow_nan=False), st.just(math.inf)),
                          min_size=N_CONFIGS, max_size=N_CONFIGS)


def random_profile(seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(10, 80, N_CONFIGS)
    v[rng.integers(0, N_CONFIGS, 5)] = math.inf
    return SuppressionProfile(v)


def test_profile_invariants():
    with pytest.raises(ValueError):
        SuppressionProfile(np.zeros(10))
    v = np.zeros(N_CONFIGS)
    v[3] = np.nan
    with pytest.raises(ValueError):
        SuppressionProfile(v)


def test_single_static_run_equals_realization(bank):
    env = Environment(dynamics_rho=1.0)
    got = profile_run(env, bank, np.random.default_rng(0), duration_s=0.05)
    si = generate_si_paths(env, np.random.default_rng(0))
    for p in (0, 1, 77, 4095):
        assert got[p] == pytest.approx(passive_suppression_db(realize_channel(si, bank[p])), abs=1e-9)


def test_profile_run_is_max_over_time(bank):
    env = Environment(dynamics_rho=0.99)
    got = profile_run(env, bank, np.random.default_rng(3), duration_s=0.02)
    rng = np.random.default_rng(3)
    from mrafd.channel import ar1_trajectory
    si = generate_si_paths(env, rng)
    traj = ar1_trajectory(si, 20, env, rng)
    e = np.stack([bank_energies(si, bank, amplitudes=a) for a in traj])
    np.testing.assert_allclose(got, -10 * np.log10(e.min(axis=0)), rtol=0, atol=1e-9)


def test_two_runs_elementwise_max(bank):
    envs = [Environment(seed=1, dynamics_rho=1.0), Environment(seed=2, dynamics_rho=1.0)]
    prof = collect_profiles(envs, [Orientation.FACE_TO_FACE], bank, seed=5, duration_s=0.01)
    runs = [profile_run(e.with_orientation(Orientation.FACE_TO_FACE), bank,
                        rng_for(5, "profile", i, e.seed, "face_to_face"), 0.01) for i, e in enumerate(envs)]
    np.testing.assert_array_equal(prof.max_suppression_db, np.maximum(*runs))
    assert len(prof.runs_meta) == 2


def test_collect_requires_environments(bank):
    with pytest.raises(ValueError):
        collect_profiles([], ALL_ORIENTATIONS, bank)


def test_collect_deterministic(bank):
    envs = profiling_suite(n=3)
    a = collect_profiles(envs, ALL_ORIENTATIONS, bank, seed=0, duration_s=0.02)
    b = collect_profiles(envs, ALL_ORIENTATIONS, bank, seed=0, duration_s=0.02)
    assert np.array_equal(a.max_suppression_db, b.max_suppression_db)
    assert a.runs_meta == b.runs_meta and len(a.runs_meta) == 12


def test_adding_runs_never_decreases(bank):
    envs = profiling_suite(n=3)
    small = collect_profiles(envs[:2], ALL_ORIENTATIONS, bank, duration_s=0.02)
    large = collect_profiles(envs, ALL_ORIENTATIONS, bank, duration_s=0.02)
    assert np.all(large.max_suppression_db >= small.max_suppression_db)


def test_merge_is_elementwise_max():
    a, b = random_profile(0), random_profile(1)
    m = a.merge(b)
    np.testing.assert_array_equal(m.max_suppression_db, np.maximum(a.max_suppression_db, b.max_suppression_db))
    np.testing.assert_array_equal(m.max_suppression_db, b.merge(a).max_suppression_db)


def test_select_set_extremes():
    prof = random_profile(2)
    assert select_set(prof, -math.inf).members == tuple(range(N_CONFIGS))
    assert select_set(prof, math.inf).members == ()


@given(st.integers(0, 1000), st.floats(0, 100), st.floats(0, 100))
def test_select_set_nesting(seed, x1, x2):
    prof = random_profile(seed)
    lo, hi = sorted((x1, x2))
    a, b = select_set(prof, lo), select_set(prof, hi)
    assert set(b.members) <= set(a.members)
    assert list(a.members) == sorted(a.members)
    assert all(prof.max_suppression_db[m] > lo for m in a.members)
    assert all(prof.max_suppression_db[m] <= lo for m in set(range(N_CONFIGS)) - set(a.members))


def test_size_curve_bruteforce():
    prof = random_profile(3)
    xs = [0.0, 20.0, 40.0, 40.0, 60.0, 100.0]
    curve = set_size_curve(prof, xs)
    for x, n in curve:
        assert n == sum(1 for v in prof.max_suppression_db if v > x)
    counts = [n for _, n in curve]
    assert counts == sorted(counts, reverse=True)
    assert set_size_curve(prof, [-10.0, 5.0]) == [(-10.0, 4096), (5.0, 4096)]


def test_size_curve_requires_ascending():
    with pytest.raises(ValueError):
        set_size_curve(random_profile(0), [50, 40])


def test_threshold_for_size():
    prof = random_profile(4)
    ts = threshold_for_size(prof, 300)
    assert isinstance(ts, ThresholdSet)
    assert len(ts) == 300
    assert ts.members == select_set(prof, ts.threshold_db).members


def test_profile_csv_roundtrip(tmp_path):
    prof = random_profile(5)
    prof.to_csv(tmp_path / "p.csv", comment="config_hash: abc")
    text = (tmp_path / "p.csv").read_text().splitlines()
    assert text[1] == "pattern_index,max_suppression_db"
    assert "inf" in {line.split(",")[1] for line in text[2:]}
    back = SuppressionProfile.from_csv(tmp_path / "p.csv")
    assert np.array_equal(back.max_suppression_db, prof.max_suppression_db)


def test_pattern_set_file_roundtrip(tmp_path):
    write_pattern_set(tmp_path / "s.txt", [1, 5, 4095], "threshold 58")
    assert (tmp_path / "s.txt").read_text() == "# threshold 58\n1\n5\n4095\n"
    assert read_pattern_set(tmp_path / "s.txt") == (1, 5, 4095)
    (tmp_path / "bad.txt").write_text("4096\n")
    with pytest.raises(IndexError):
        read_pattern_set(tmp_path / "bad.txt")


def test_evaluation_superset_dominates(bank):
    envs = held_out_suite(n=20)
    rng = np.random.default_rng(0)
    sub = tuple(sorted(rng.choice(N_CONFIGS, 300, replace=False)))
    full, part = evaluate_sets({"full": range(N_CONFIGS), "sub": sub}, envs, bank)
    assert full.size == 4096 and part.size == 300
    assert full.mean_sir_db >= part.mean_sir_db


def test_held_out_spans_circle():
    envs = held_out_suite(n=50)
    az = np.array([e.peer_azimuth for e in envs])
    assert az.min() < 0.5 and az.max() > 2 * math.pi - 0.5
    assert len({e.seed for e in envs}) == 50
