import dataclasses

import numpy as np
import pytest
from conftest import lv_config

from seqdesign import (
    Ensemble,
    InvalidInput,
    Strategy,
    compute_metrics,
    export_csv,
    init_ensemble,
    run_trials,
    simulate_truth,
)
from seqdesign.harness import RunResults, _run_one_trial, _worker_count, metric_names
from seqdesign.models import rk4_span


class TestExperimentConfig:
    def test_rejects_bad_noise(self):
        with pytest.raises(InvalidInput):
            lv_config(noise_std=-1.0)

    def test_rejects_small_ensemble_for_k(self):
        with pytest.raises(InvalidInput):
            lv_config(ensemble_size=6, knn_k=6)

    def test_rejects_unknown_divergence_policy(self):
        with pytest.raises(InvalidInput):
            dataclasses.replace(lv_config(), divergence_policy="ignore")


class TestSimulateTruth:
    def test_zero_noise_limit_matches_trajectory(self):
        cfg = lv_config(noise_std=1e-12)
        ds = simulate_truth(cfg, np.random.default_rng(0))
        x = cfg.initial_state.copy()
        t = cfg.t0
        for s_idx, stage in enumerate(cfg.design_space.stages):
            for cand in stage:
                x_t = rk4_span(cfg.model.rhs, cfg.initial_state, cfg.true_params,
                               cfg.t0, cand.measurement_time, cfg.dt)
                np.testing.assert_allclose(ds.entries[(s_idx, cand.id)], x_t, atol=1e-8)

    def test_every_candidate_has_an_entry(self):
        cfg = lv_config()
        ds = simulate_truth(cfg, np.random.default_rng(1))
        assert set(ds.entries) == {(s, c.id) for s, stage in
                                   enumerate(cfg.design_space.stages) for c in stage}

    def test_initial_condition_observed_at_t0(self):
        cfg = lv_config(noise_std=1e-12, stage_times=((0.0, 1.0),))
        ds = simulate_truth(cfg, np.random.default_rng(2))
        np.testing.assert_allclose(ds.entries[(0, 0)], [2.0, 3.0], atol=1e-9)

    def test_stat5_total_observable_conservation(self):
        # y2 = x1 + x2 + 2*x3 = 1 - 2*x4 along the true trajectory
        from seqdesign import DesignCandidate, DesignSpace, ObservationModel, PriorSpec
        from seqdesign import ExperimentConfig, build_stat5

        model = build_stat5()
        space = DesignSpace(stages=tuple(
            (DesignCandidate(0, t, "y2"),) for t in (0.01, 2.0, 8.0, 32.0)
        ))
        cfg = ExperimentConfig(
            model=model,
            prior=PriorSpec([0.5] * 3, [0.1] * 3, [1.0, 0.0, 0.0, 0.0]),
            true_params=[0.1, 0.1, 0.1],
            design_space=space,
            obs_models={"y2": ObservationModel(H=model.observables["y2"], R=[[1e-24]])},
            noise_std=1e-12,
            ensemble_size=100,
        )
        ds = simulate_truth(cfg, np.random.default_rng(3))
        x4 = {}
        for (s, _), val in ds.entries.items():
            t = space.stages[s][0].measurement_time
            x_t = rk4_span(model.rhs, np.array([1.0, 0, 0, 0]), np.array([0.1] * 3),
                           0.0, t, 0.01)
            assert val[0] == pytest.approx(1.0 - 2.0 * x_t[3], abs=1e-8)
        t_small = ds.entries[(0, 0)][0]
        assert t_small == pytest.approx(1.0, abs=1e-4)

    def test_deterministic_given_rng(self):
        cfg = lv_config()
        a = simulate_truth(cfg, np.random.default_rng(4))
        b = simulate_truth(cfg, np.random.default_rng(4))
        assert a.digest() == b.digest()


class TestComputeMetrics:
    def test_collapsed_posterior(self):
        ens = Ensemble(states=np.zeros((200, 2)), params=np.tile([0.6, 0.3], (200, 1)))
        rec = compute_metrics(ens, [0.6, 0.3], k=6)
        np.testing.assert_allclose(rec.param_stds, 0.0, atol=1e-12)
        assert rec.rmse == pytest.approx(0.0, abs=1e-12)
        assert rec.joint_entropy < -5.0

    def test_prior_matches_analytic_values(self):
        cfg = lv_config(ensemble_size=2000)
        ens = init_ensemble(cfg.prior, 2000, np.random.default_rng(5))
        rec = compute_metrics(ens, cfg.true_params, k=6)
        np.testing.assert_allclose(rec.param_stds, [0.1, 0.1], atol=0.01)
        analytic = 2 * 0.5 * np.log(2 * np.pi * np.e * 0.01)
        assert rec.joint_entropy == pytest.approx(analytic, abs=0.1)

    def test_rmse_hand_value(self):
        # prior mean (0.7, 0.4) vs truth (0.6, 0.3): sqrt((0.01+0.01)/2) = 0.1
        ens = Ensemble(states=np.zeros((500, 2)),
                       params=np.tile([0.7, 0.4], (500, 1)) +
                       1e-9 * np.random.default_rng(6).standard_normal((500, 2)))
        rec = compute_metrics(ens, [0.6, 0.3], k=6)
        assert rec.rmse == pytest.approx(0.1, abs=1e-6)

    def test_as_dict_order(self):
        ens = Ensemble(states=np.zeros((50, 2)),
                       params=np.random.default_rng(7).standard_normal((50, 2)))
        rec = compute_metrics(ens, [0.0, 0.0], k=6)
        assert list(rec.as_dict()) == ["std_theta1", "std_theta2", "joint_entropy", "rmse"]


class TestRunTrials:
    def test_single_trial_equals_aggregate(self):
        cfg = lv_config(ensemble_size=100, n_trials=1, stage_times=((1.0, 3.5),))
        results = run_trials(cfg, [Strategy("fixed", 0)])
        _, per_strategy = _run_one_trial(cfg, [Strategy("fixed", 0)], 0)
        for name in metric_names(2):
            np.testing.assert_array_equal(results.entries[0].means[name], per_strategy[0][name])
            np.testing.assert_array_equal(results.entries[0].stderrs[name], 0.0)

    def test_identical_strategies_identical_curves(self):
        cfg = lv_config(ensemble_size=100, n_trials=2, stage_times=((1.0, 3.5), (6.0, 8.5)))
        results = run_trials(cfg, [Strategy("random"), Strategy("random")])
        for name in metric_names(2):
            np.testing.assert_array_equal(results.entries[0].means[name],
                                          results.entries[1].means[name])

    def test_strategies_share_trial_datasets(self):
        cfg = lv_config(ensemble_size=100, n_trials=3, stage_times=((1.0, 3.5),))
        results = run_trials(cfg, [Strategy("fixed", 0), Strategy("fixed", 1)])
        assert len(results.dataset_digests) == 3
        assert len(set(results.dataset_digests)) == 3  # fresh noise per trial

    def test_prior_stage_metrics_identical_across_strategies(self):
        cfg = lv_config(ensemble_size=150, n_trials=2, stage_times=((1.0, 3.5),))
        results = run_trials(cfg, [Strategy("fixed", 0), Strategy("max_mi")])
        for name in metric_names(2):
            assert results.entries[0].means[name][0] == results.entries[1].means[name][0]

    def test_entropy_decreases_with_assimilation(self):
        cfg = lv_config(ensemble_size=300, n_trials=4)
        results = run_trials(cfg, [Strategy("fixed", 0), Strategy("random")])
        for curve in results.entries:
            ent = curve.means["joint_entropy"]
            assert all(ent[s + 1] <= ent[s] + 0.05 for s in range(len(ent) - 1))

    def test_worker_env_validation(self, monkeypatch):
        from seqdesign import ConfigError
        from seqdesign.harness import THREADS_ENV

        monkeypatch.setenv(THREADS_ENV, "x")
        with pytest.raises(ConfigError):
            _worker_count(4)
        monkeypatch.setenv(THREADS_ENV, "3")
        assert _worker_count(10) == 3
        assert _worker_count(2) == 2
        monkeypatch.setenv(THREADS_ENV, "0")
        assert _worker_count(1) == 1

    def test_parallel_matches_serial(self, monkeypatch):
        from seqdesign.harness import THREADS_ENV

        cfg = lv_config(ensemble_size=80, n_trials=4, stage_times=((1.0, 3.5),))
        monkeypatch.setenv(THREADS_ENV, "1")
        serial = run_trials(cfg, [Strategy("max_mi")])
        monkeypatch.setenv(THREADS_ENV, "2")
        parallel = run_trials(cfg, [Strategy("max_mi")])
        for name in metric_names(2):
            np.testing.assert_array_equal(serial.entries[0].means[name],
                                          parallel.entries[0].means[name])


class TestExportCsv:
    def test_empty_results_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        export_csv(RunResults(entries=[], stages=[], n_trials=0, base_seed=0), path)
        assert path.read_text() == "strategy,stage,metric,value,stderr\n"

    def test_row_count_and_order(self, tmp_path):
        cfg = lv_config(ensemble_size=100, n_trials=1)
        results = run_trials(cfg, [Strategy("fixed", 0)])
        path = tmp_path / "out.csv"
        export_csv(results, path)
        lines = path.read_text().splitlines()
        # header + 5 stages (prior + 4) * 4 metrics
        assert len(lines) == 1 + 5 * 4
        stages = [int(line.split(",")[1]) for line in lines[1:]]
        assert stages == sorted(stages)

    def test_round_trip_preserves_values(self, tmp_path):
        cfg = lv_config(ensemble_size=100, n_trials=2, stage_times=((1.0, 3.5),))
        results = run_trials(cfg, [Strategy("fixed", 1), Strategy("random")])
        path = tmp_path / "out.csv"
        export_csv(results, path)
        seen = {}
        for line in path.read_text().splitlines()[1:]:
            label, stage, metric, value, stderr = line.split(",")
            seen[(label, int(stage), metric)] = (float(value), float(stderr))
        for curve in results.entries:
            for name in metric_names(2):
                for stage in results.stages:
                    got = seen[(curve.label, stage, name)]
                    assert abs(got[0] - curve.means[name][stage]) < 1e-12
                    assert abs(got[1] - curve.stderrs[name][stage]) < 1e-12

    def test_reproducible_bytes(self, tmp_path):
        cfg = lv_config(ensemble_size=100, n_trials=2, stage_times=((1.0, 3.5),))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        export_csv(run_trials(cfg, [Strategy("max_mi")]), a)
        export_csv(run_trials(cfg, [Strategy("max_mi")]), b)
        assert a.read_bytes() == b.read_bytes()


class TestDivergenceContainment:
    def test_resampled_members_keep_run_alive(self):
        from seqdesign import build_stat5, forecast

        # strongly negative first rate: unphosphorylated STAT5 grows without
        # bound and drives the quadratic term into finite-time blow-up
        params = np.tile([0.5, 0.5, 0.5], (64, 1))
        params[0] = [-0.9, 0.9, 0.5]
        ens = Ensemble(states=np.tile([1.0, 0, 0, 0], (64, 1)), params=params)
        model = build_stat5()
        with pytest.raises(Exception):
            forecast(ens, model, 32.0, on_divergence="raise")
        out = forecast(ens, model, 32.0, on_divergence="resample")
        assert out.n_resampled >= 1
        assert np.isfinite(out.states).all()
        # the diverged member was replaced by a surviving clone
        assert (out.params[0] == [0.5, 0.5, 0.5]).all()
