import json
import math

import numpy as np
import pytest

from hybridwalk import experiment_harness as eh
from hybridwalk.basin_hopper import OptimizerConfig
from hybridwalk.entanglement_metrics import participation_ratio
from hybridwalk.errors import BatchError, InvalidArgumentError
from hybridwalk.experiment_harness import (
    ExperimentConfig,
    hadamard_schedule,
    is_selected,
    load_records,
    random_schedule,
    run_batch,
    run_comparison,
    run_spread,
    sample_initial_state,
    save_records,
    simulate_walk,
)
from hybridwalk.walk_core import BlochAngles

from oracles import dense_evolve, initial_vector, schmidt_from_svd

SQRT2 = math.sqrt(2)
UP = BlochAngles(0.0, 0.0)
QUICK = OptimizerConfig(n_hops=2, local_max_iters=50)


# --- schedules and sampling ----------------------------------------------------


def test_hadamard_schedule():
    w = hadamard_schedule(3).to_vector()
    np.testing.assert_array_equal(w, np.tile([0, 0, math.pi / 4], 3))
    with pytest.raises(InvalidArgumentError):
        hadamard_schedule(0)


def test_random_schedule_ranges_and_mean():
    w = random_schedule(100_000 // 3 + 1, 42).to_vector()
    theta = w[2::3]
    assert np.all((theta >= 0) & (theta <= math.pi / 2))
    assert np.all((w[0::3] >= 0) & (w[0::3] <= 2 * math.pi))
    sigma = (math.pi / 2) / math.sqrt(12 * len(theta))
    assert abs(theta.mean() - math.pi / 4) < 3 * sigma
    np.testing.assert_array_equal(random_schedule(4, 1).to_vector(), random_schedule(4, 1).to_vector())


def test_initial_state_sampling():
    rng = np.random.default_rng(8)
    draws = [sample_initial_state(rng) for _ in range(100_000)]
    theta = np.array([b.theta for b in draws])
    phi = np.array([b.phi for b in draws])
    assert np.all((theta >= 0) & (theta <= math.pi)) and np.all((phi >= 0) & (phi <= 2 * math.pi))
    sigma = math.pi / math.sqrt(12 * len(theta))
    assert abs(theta.mean() - math.pi / 2) < 3 * sigma
    a = sample_initial_state(np.random.default_rng(5))
    assert a == sample_initial_state(np.random.default_rng(5))


def test_haar_sampling_is_area_uniform():
    rng = np.random.default_rng(9)
    cos_t = np.array([math.cos(sample_initial_state(rng, haar_uniform=True).theta) for _ in range(20_000)])
    # cos(theta) ~ U[-1, 1]: mean 0, variance 1/3
    assert abs(cos_t.mean()) < 3 / math.sqrt(3 * len(cos_t))
    assert cos_t.var() == pytest.approx(1 / 3, abs=0.02)


# --- comparison ----------------------------------------------------------------


def test_one_step_optimum():
    runs = run_comparison(1, UP, OptimizerConfig(n_hops=3))
    assert runs["optimized"].final_schmidt == pytest.approx(SQRT2, abs=1e-6)


def test_hadamard_matches_dense_oracle_and_fluctuates():
    run = simulate_walk("hadamard", UP, hadamard_schedule(10))
    for step, state in enumerate(run.trajectory):
        psi = dense_evolve(initial_vector(0, 0, 10), hadamard_schedule(10).to_vector()[: 3 * step], 10)
        np.testing.assert_allclose(state.amplitudes.reshape(-1), psi, atol=1e-12)
        assert run.schmidt[step] == pytest.approx(schmidt_from_svd(psi), abs=1e-10)
    assert np.any(np.diff(run.schmidt) < 0)
    assert run.final_schmidt < 1.414


def test_ten_step_comparison():
    runs = run_comparison(10, UP, OptimizerConfig(n_hops=20, rng_seed=1))
    assert set(runs) == {"hadamard", "random", "optimized"}
    assert runs["optimized"].final_schmidt >= 1.414
    assert runs["optimized"].final_schmidt > runs["hadamard"].final_schmidt
    for run in runs.values():
        assert len(run.schmidt) == 11
        assert np.all((run.schmidt >= 1 - 1e-12) & (run.schmidt <= SQRT2 + 1e-12))


def test_walk_outputs(tmp_path):
    runs = list(run_comparison(2, UP, OptimizerConfig(n_hops=1)).values())
    eh.write_walk_outputs(tmp_path, runs)
    lines = (tmp_path / "step-density.csv").read_text().splitlines()
    assert lines[0] == "walk,step,lambda,site,spin,density"
    assert len(lines) == 1 + 3 * 3 * 5 * 2
    assert (tmp_path / "schmidt.csv").read_text().splitlines()[0] == "step,hadamard,random,optimized"


# --- batch ---------------------------------------------------------------------


def test_is_selected_or_rule():
    dens = np.zeros((5, 2))
    assert not is_selected(dens, 2, 1e-4)
    dens[0, 1] = 6e-5
    assert not is_selected(dens, 2, 1e-4)
    dens[0, 0] = 6e-5  # spin-summed population crosses the threshold
    assert is_selected(dens, 2, 1e-4)
    dens = np.zeros((5, 2))
    dens[4, 0] = 1e-3
    assert is_selected(dens, 2, 1e-4)


def test_batch_reproducible_and_worker_independent():
    cfg = ExperimentConfig(n_steps=4, n_samples=6, rng_seed=3)
    s1, r1 = run_batch(cfg, QUICK)
    s2, r2 = run_batch(cfg, QUICK)
    s3, r3 = run_batch(ExperimentConfig(n_steps=4, n_samples=6, rng_seed=3, n_workers=2), QUICK)
    assert json.dumps(s1.to_json_obj()) == json.dumps(s2.to_json_obj()) == json.dumps(s3.to_json_obj())
    assert [json.dumps(vars(r)) for r in r1] == [json.dumps(vars(r)) for r in r3]
    # a prefix of a larger batch reproduces the smaller batch
    _, r4 = run_batch(ExperimentConfig(n_steps=4, n_samples=8, rng_seed=3), QUICK)
    assert [vars(r) for r in r4[:6]] == [vars(r) for r in r1]


def test_batch_statistics(tmp_path):
    cfg = ExperimentConfig(n_steps=4, n_samples=8, rng_seed=1, selection_threshold=0.0, output_dir=str(tmp_path))
    stats, records = run_batch(cfg, QUICK)
    assert stats.n_total == 8 and stats.n_failed == 0
    assert stats.n_selected == sum(r.selected for r in records) > 0
    mean_s = np.array(stats.mean_schmidt_per_step)
    assert mean_s.shape == (5,)
    assert np.all((mean_s >= 1 - 1e-12) & (mean_s <= SQRT2 + 1e-12))
    dens = np.array(stats.mean_final_density)
    assert dens.sum() == pytest.approx(1, abs=1e-12)
    assert np.all(dens[1::2] == 0)  # odd sites of {-4..4}
    for name in ("manifest.json", "runs.jsonl", "batch_stats.json", "mean_schmidt.csv", "mean_density.csv"):
        assert (tmp_path / name).exists()
    back = load_records(tmp_path / "runs.jsonl")
    assert [vars(r) for r in back] == [vars(r) for r in records]


def test_records_round_trip_bit_exact(tmp_path):
    _, records = run_batch(ExperimentConfig(n_steps=3, n_samples=3, rng_seed=9), QUICK)
    save_records(records, tmp_path / "r.jsonl")
    back = load_records(tmp_path / "r.jsonl")
    for a, b in zip(records, back):
        assert a.best_w == b.best_w and a.final_density == b.final_density
        assert a.schmidt_per_step == b.schmidt_per_step and a.final_schmidt == b.final_schmidt


def test_infinite_threshold_leaves_averages_undefined():
    stats, _ = run_batch(ExperimentConfig(n_steps=3, n_samples=3, selection_threshold=math.inf), QUICK)
    assert stats.n_selected == 0 and not stats.averages_defined
    assert stats.mean_schmidt_per_step is None and stats.mean_final_density is None


def test_failures_are_recorded_then_escalated(monkeypatch):
    real = eh.optimize_walk

    def flaky(n_steps, initial, opt_cfg, beta=0.0, w0=None):
        if initial.theta > 1.0:
            raise FloatingPointError("boom")
        return real(n_steps, initial, opt_cfg, beta, w0)

    monkeypatch.setattr(eh, "optimize_walk", flaky)
    cfg = ExperimentConfig(n_steps=2, n_samples=6, rng_seed=0)
    with pytest.raises(BatchError):
        run_batch(cfg, QUICK)

    calls = {"n": 0}

    def fails_once(n_steps, initial, opt_cfg, beta=0.0, w0=None):
        calls["n"] += 1
        if calls["n"] == 1:
            raise FloatingPointError("boom")
        return real(n_steps, initial, opt_cfg, beta, w0)

    monkeypatch.setattr(eh, "optimize_walk", fails_once)
    stats, records = run_batch(ExperimentConfig(n_steps=2, n_samples=101, rng_seed=0), OptimizerConfig(n_hops=1, local_max_iters=5))
    assert stats.n_failed == 1 and records[0].failed and "boom" in records[0].error
    assert len(stats.per_run_final_S) == 100


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(n_steps=0)
    with pytest.raises(InvalidArgumentError):
        ExperimentConfig(selection_threshold=-1)


# --- spreading -----------------------------------------------------------------


def test_spread_requires_positive_beta():
    for beta in (0.0, -0.1):
        with pytest.raises(InvalidArgumentError):
            run_spread(4, beta)


def test_spread_small():
    res = run_spread(4, 0.1, opt_cfg=OptimizerConfig(n_hops=5))
    pop = res.final_density.sum(axis=1)
    assert np.all(pop[1::2] == 0)
    assert res.participation_ratio == pytest.approx(participation_ratio(res.run.final))
    assert res.run.label == "spread"


def test_pr_regularization_spreads_more():
    """Paired seeded runs: the PR term raises the final participation ratio."""
    diffs = []
    for seed in range(20):
        cfg = OptimizerConfig(n_hops=2, local_max_iters=60, rng_seed=seed)
        with_pr = run_spread(10, 0.1, opt_cfg=cfg)
        plain = eh.optimize_walk(10, UP, cfg, beta=0.0)
        diffs.append(with_pr.participation_ratio - participation_ratio(plain.final))
    assert np.median(diffs) > 0
    assert sum(d > 0 for d in diffs) >= 15  # sign test, p < 0.05
