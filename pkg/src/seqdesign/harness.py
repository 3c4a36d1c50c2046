"""End-to-end experiment runner: truth simulation, repeated trials, metrics, CSV.

A trial draws one synthetic truth dataset (measurement noise pre-generated
for *every* candidate, chosen or not) and runs every strategy against that
same dataset, so strategy comparisons are free of noise-realization
confounds.  Per-stage uncertainty metrics are averaged across trials and
exported as plain CSV.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import DesignSpace, Strategy, init_prior_ensemble, run_sequential
from .ensemble import Ensemble, PriorSpec
from .errors import ConfigError, InvalidInput
from .infotheory import kl_entropy
from .models import ModelSpec, rk4_span

#: Environment variable capping trial-level worker processes (0 = one per CPU).
THREADS_ENV = "SEQDESIGN_THREADS"

#: Canonical metric order used in the CSV export.
_EXTRA_METRICS = ("joint_entropy", "rmse")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment end to end."""

    model: ModelSpec
    prior: PriorSpec
    true_params: np.ndarray
    design_space: DesignSpace
    obs_models: dict
    noise_std: float
    ensemble_size: int
    knn_k: int = 6
    dt: float = 0.01
    n_trials: int = 1
    base_seed: int = 0
    t0: float = 0.0
    strategies: tuple = ()
    divergence_policy: str = "resample"

    def __post_init__(self):
        object.__setattr__(self, "true_params", np.asarray(self.true_params, dtype=float))
        if self.divergence_policy not in ("raise", "resample"):
            raise InvalidInput(
                f"divergence_policy must be 'raise' or 'resample', got {self.divergence_policy!r}"
            )
        if self.noise_std <= 0.0:
            raise InvalidInput("noise_std must be positive")
        if self.n_trials < 1:
            raise InvalidInput("n_trials must be at least 1")
        if self.ensemble_size < self.knn_k + 2:
            raise InvalidInput(
                f"ensemble_size must be at least knn_k+2={self.knn_k + 2}"
            )
        if self.true_params.size != self.model.param_dim:
            raise InvalidInput(
                f"true_params has {self.true_params.size} entries, "
                f"model {self.model.name!r} has {self.model.param_dim} parameters"
            )
        for stage in self.design_space.stages:
            for cand in stage:
                if cand.observable_id not in self.obs_models:
                    raise InvalidInput(
                        f"candidate references unknown observable {cand.observable_id!r}"
                    )
                if cand.measurement_time < self.t0:
                    raise InvalidInput(
                        f"candidate time {cand.measurement_time} precedes t0={self.t0}"
                    )

    @property
    def initial_state(self) -> np.ndarray:
        return self.prior.initial_state

    @property
    def param_dim(self) -> int:
        return self.model.param_dim


@dataclass(frozen=True)
class Dataset:
    """Pre-simulated noisy measurements for every (stage, candidate) pair."""

    entries: dict
    seed: int

    def digest(self) -> str:
        """Stable content hash, used to assert dataset sharing across strategies."""
        h = hashlib.sha256()
        for key in sorted(self.entries):
            h.update(repr(key).encode())
            h.update(np.ascontiguousarray(self.entries[key]).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class MetricsRecord:
    """Posterior uncertainty summary: marginal stds, joint entropy, RMSE."""

    param_stds: np.ndarray
    joint_entropy: float
    rmse: float

    def as_dict(self) -> dict:
        out = {
            f"std_theta{i + 1}": float(v) for i, v in enumerate(self.param_stds)
        }
        out["joint_entropy"] = float(self.joint_entropy)
        out["rmse"] = float(self.rmse)
        return out


def metric_names(param_dim: int) -> list:
    return [f"std_theta{i + 1}" for i in range(param_dim)] + list(_EXTRA_METRICS)


def simulate_truth(cfg: ExperimentConfig, rng: np.random.Generator, seed=-1) -> Dataset:
    """Generate the noisy measurements all strategies will consume.

    A single trajectory is integrated with the true parameters; every
    candidate of every stage gets its observable evaluated on that
    trajectory plus an independent N(0, noise_std^2 I) draw, in (stage,
    candidate) order.  ``seed`` is provenance metadata recorded on the
    dataset (-1 when the caller seeded ``rng`` by other means).
    """
    entries = {}
    x = cfg.initial_state.copy()
    t = cfg.t0
    states_at = {}
    times = sorted({c.measurement_time for stage in cfg.design_space.stages for c in stage})
    for t_next in times:
        x = rk4_span(cfg.model.rhs, x, cfg.true_params, t, t_next, cfg.dt)
        states_at[t_next] = x.copy()
        t = t_next
    for s_idx, stage in enumerate(cfg.design_space.stages):
        for cand in stage:
            obs = cfg.obs_models[cand.observable_id]
            mean = obs.H @ states_at[cand.measurement_time]
            noise = rng.standard_normal(obs.obs_dim) @ obs._chol.T
            entries[(s_idx, cand.id)] = mean + noise
    return Dataset(entries=entries, seed=int(seed))


def compute_metrics(posterior: Ensemble, true_params, k: int = 6) -> MetricsRecord:
    """Marginal parameter stds, kNN joint parameter entropy, and parameter RMSE."""
    true_params = np.asarray(true_params, dtype=float)
    stds = posterior.params.std(axis=0, ddof=1)
    entropy = kl_entropy(posterior.params, k)
    mean = posterior.params.mean(axis=0)
    rmse = float(np.sqrt(np.mean((mean - true_params) ** 2)))
    return MetricsRecord(param_stds=stds, joint_entropy=entropy, rmse=rmse)


@dataclass
class StrategyCurves:
    """Trial-averaged metric curves for one strategy entry."""

    label: str
    means: dict
    stderrs: dict


@dataclass
class RunResults:
    """Aggregated output of :func:`run_trials`."""

    entries: list
    stages: list
    n_trials: int
    base_seed: int
    dataset_digests: list = field(default_factory=list)

    def to_rows(self):
        """CSV rows ordered by (strategy, stage ascending, canonical metric)."""
        rows = []
        for curve in sorted(self.entries, key=lambda c: c.label):
            names = list(curve.means)
            for stage in self.stages:
                for name in names:
                    rows.append(
                        (
                            curve.label,
                            stage,
                            name,
                            float(curve.means[name][stage]),
                            float(curve.stderrs[name][stage]),
                        )
                    )
        return rows


def _trial_seed_sequences(base_seed: int, trial: int):
    """Per-trial substreams: one for the dataset, one shared by every strategy."""
    data_ss, run_ss = np.random.SeedSequence(base_seed + trial).spawn(2)
    return data_ss, run_ss


def _run_one_trial(cfg: ExperimentConfig, strategies, trial: int):
    """One trial: simulate a dataset, run every strategy on it.

    Returns the dataset digest and, per strategy, the metric values at
    stages 0..S (stage 0 is the prior, before any assimilation).
    """
    data_ss, run_ss = _trial_seed_sequences(cfg.base_seed, trial)
    dataset = simulate_truth(cfg, np.random.default_rng(data_ss), seed=cfg.base_seed + trial)

    prior_ens = init_prior_ensemble(cfg, np.random.default_rng(run_ss))
    prior_metrics = compute_metrics(prior_ens, cfg.true_params, cfg.knn_k)

    names = metric_names(cfg.param_dim)
    per_strategy = []
    for strategy in strategies:
        rng = np.random.default_rng(run_ss)
        records, _ = run_sequential(
            cfg,
            strategy,
            dataset,
            rng,
            metrics_fn=lambda ens: compute_metrics(ens, cfg.true_params, cfg.knn_k),
        )
        stage_metrics = [prior_metrics.as_dict()] + [
            r.posterior_metrics.as_dict() for r in records
        ]
        per_strategy.append(
            {name: np.array([m[name] for m in stage_metrics]) for name in names}
        )
    return dataset.digest(), per_strategy


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ConfigError(f"{THREADS_ENV} must be non-negative")
    workers = cap if cap > 0 else (os.cpu_count() or 1)
    return max(1, min(workers, n_tasks))


def run_trials(cfg: ExperimentConfig, strategies) -> RunResults:
    """Run every strategy over ``cfg.n_trials`` independent trials and aggregate.

    Trial ``i`` uses seed ``base_seed + i``; within a trial all strategies
    share the same dataset and the same prior ensemble.  Means and standard
    errors (trial std / sqrt(n_trials)) are reported per strategy, stage,
    and metric; results are reduced in trial order, so they are identical
    whatever the worker count.
    """
    strategies = [s if isinstance(s, Strategy) else Strategy.parse(s) for s in strategies]
    if not strategies:
        raise InvalidInput("need at least one strategy")
    n_stages = cfg.design_space.n_stages
    names = metric_names(cfg.param_dim)

    workers = _worker_count(cfg.n_trials)
    if workers == 1:
        trial_outputs = [_run_one_trial(cfg, strategies, i) for i in range(cfg.n_trials)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trial_outputs = list(
                pool.map(_run_one_trial, *zip(*[(cfg, strategies, i) for i in range(cfg.n_trials)]))
            )

    digests = [digest for digest, _ in trial_outputs]
    entries = []
    for s_idx, strategy in enumerate(strategies):
        curves = {
            name: np.stack([out[s_idx][name] for _, out in trial_outputs])
            for name in names
        }
        means = {name: vals.mean(axis=0) for name, vals in curves.items()}
        if cfg.n_trials > 1:
            stderrs = {
                name: vals.std(axis=0, ddof=1) / np.sqrt(cfg.n_trials)
                for name, vals in curves.items()
            }
        else:
            stderrs = {name: np.zeros(n_stages + 1) for name in names}
        entries.append(StrategyCurves(label=strategy.label, means=means, stderrs=stderrs))
    return RunResults(
        entries=entries,
        stages=list(range(n_stages + 1)),
        n_trials=cfg.n_trials,
        base_seed=cfg.base_seed,
        dataset_digests=digests,
    )


def export_csv(results: RunResults, path) -> None:
    """Write ``strategy,stage,metric,value,stderr`` rows, deterministically ordered."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write("strategy,stage,metric,value,stderr\n")
            for label, stage, metric, value, stderr in results.to_rows():
                fh.write(f"{label},{stage},{metric},{value!r},{stderr!r}\n")
    except OSError as exc:
        raise ConfigError(f"cannot write results to {path}: {exc}") from exc
