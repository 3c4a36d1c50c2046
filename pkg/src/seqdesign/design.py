"""Sequential selection of measurements by information content.

Each stage offers a finite menu of candidate measurements (a time point, an
observable, or both).  A strategy picks one candidate per stage; the chosen
measurement is assimilated and the posterior becomes the prior of the next
stage.  The adaptive strategies score candidates on the current posterior by
forecasting it to the candidate time, sampling noisy predicted observables,
and estimating either the mutual information between parameters and
predictions or the entropy of the predictions alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .ensemble import Ensemble, enkf_update, forecast, init_ensemble, predict_observations
from .errors import ConfigError, InvalidInput
from .infotheory import MiEstimate, kl_entropy, ksg_mi
from .models import ModelSpec

if TYPE_CHECKING:
    from .harness import Dataset, ExperimentConfig, MetricsRecord


@dataclass(frozen=True)
class DesignCandidate:
    """One selectable measurement: an id within its stage, a time, an observable."""

    id: int
    measurement_time: float
    observable_id: str


@dataclass(frozen=True)
class DesignSpace:
    """The per-stage candidate menus, in stage order."""

    stages: tuple

    def __post_init__(self):
        stages = tuple(tuple(stage) for stage in self.stages)
        for s, stage in enumerate(stages):
            if not stage:
                raise InvalidInput(f"stage {s} has no candidates")
            times = [c.measurement_time for c in stage]
            if any(t1 > t2 for t1, t2 in zip(times, times[1:])):
                raise InvalidInput(f"stage {s} candidate times must be non-decreasing")
            if [c.id for c in stage] != list(range(len(stage))):
                raise InvalidInput(f"stage {s} candidate ids must be 0..{len(stage) - 1}")
        object.__setattr__(self, "stages", stages)

    @property
    def n_stages(self) -> int:
        return len(self.stages)


@dataclass(frozen=True)
class Strategy:
    """How to pick a candidate: adaptive (max_mi, max_entropy), fixed, or random."""

    kind: str
    index: int | None = None

    _KINDS = ("max_mi", "max_entropy", "fixed", "random")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidInput(f"unknown strategy kind {self.kind!r}")
        if self.kind == "fixed" and (self.index is None or self.index < 0):
            raise InvalidInput("fixed strategy needs a non-negative candidate index")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """Parse a CLI-style spec: max-mi | max-entropy | fixed:<i> | random."""
        text = text.strip().lower().replace("-", "_")
        if text.startswith("fixed:"):
            try:
                return cls("fixed", int(text.split(":", 1)[1]))
            except ValueError as exc:
                raise InvalidInput(f"bad fixed-strategy index in {text!r}") from exc
        return cls(text)

    @property
    def label(self) -> str:
        return f"fixed_{self.index}" if self.kind == "fixed" else self.kind

    def __str__(self) -> str:
        return self.label


@dataclass
class StageRecord:
    """Outcome of one stage: what was chosen, its scores, posterior metrics."""

    stage: int
    chosen: DesignCandidate
    scores: list | None
    posterior_metrics: "MetricsRecord | None" = None


def score_candidate(
    posterior: Ensemble,
    model: ModelSpec,
    cand: DesignCandidate,
    obs,
    k: int,
    dt: float,
    rng: np.random.Generator,
    on_divergence: str = "raise",
) -> MiEstimate:
    """Estimated mutual information between parameters and the candidate's datum.

    The posterior ensemble is forecast (a copy; the input is not mutated) to
    the candidate time, each member is pushed through the observation model
    with fresh noise, and the KSG estimator is run on the resulting
    (parameter, predicted-datum) pairs.
    """
    if cand.measurement_time < posterior.time:
        raise InvalidInput(
            f"candidate {cand.id} at t={cand.measurement_time} is in the past "
            f"of the ensemble (t={posterior.time})"
        )
    ens_f = forecast(posterior, model, cand.measurement_time, dt, on_divergence)
    d = predict_observations(ens_f, obs, rng)
    return ksg_mi(ens_f.params, d, k)


def select_design(
    stage,
    strategy: Strategy,
    posterior: Ensemble,
    model: ModelSpec,
    obs_models: dict,
    k: int,
    dt: float,
    rng: np.random.Generator,
    on_divergence: str = "raise",
):
    """Pick one candidate from a stage and return ``(candidate, scores)``.

    ``scores`` is the per-candidate selection score list for the adaptive
    strategies (mutual information for ``max_mi``, predictive entropy for
    ``max_entropy``) and ``None`` otherwise.  Ties go to the smallest
    candidate id.  Forecasts are cached by measurement time, so candidates
    sharing a time are scored from a single propagation.
    """
    stage = list(stage)
    if not stage:
        raise InvalidInput("cannot select from an empty stage")
    if strategy.kind == "fixed":
        if strategy.index >= len(stage):
            raise InvalidInput(
                f"fixed strategy index {strategy.index} out of range "
                f"for a stage with {len(stage)} candidates"
            )
        return stage[strategy.index], None
    if strategy.kind == "random":
        return stage[int(rng.integers(len(stage)))], None

    cand_rngs = rng.spawn(len(stage))
    forecasts: dict[float, Ensemble] = {}
    scores = []
    for cand, cand_rng in zip(stage, cand_rngs):
        t = cand.measurement_time
        if t not in forecasts:
            if t < posterior.time:
                raise InvalidInput(
                    f"candidate {cand.id} at t={t} is in the past of the ensemble"
                )
            forecasts[t] = forecast(posterior, model, t, dt, on_divergence)
        obs = obs_models[cand.observable_id]
        d = predict_observations(forecasts[t], obs, cand_rng)
        if strategy.kind == "max_mi":
            scores.append(ksg_mi(forecasts[t].params, d, k).value)
        else:  # max_entropy
            scores.append(kl_entropy(d, k))
    return stage[int(np.argmax(scores))], scores


def run_sequential(
    exp: "ExperimentConfig",
    strategy: Strategy,
    truth_data: "Dataset",
    rng: np.random.Generator,
    metrics_fn: Callable[[Ensemble], "MetricsRecord"] | None = None,
):
    """Run the full design/measure/assimilate loop over every stage.

    The ensemble starts from the experiment prior and, between stages,
    advances only to the chosen measurement times; candidates that were not
    selected are never assimilated.  Measurements come from ``truth_data``,
    which must hold one entry per (stage, candidate); this lets every
    strategy consume the identical noise realizations.

    Returns ``(records, posterior)``: one :class:`StageRecord` per stage and
    the final ensemble.
    """
    policy = getattr(exp, "divergence_policy", "raise")
    ens = init_prior_ensemble(exp, rng)
    records = []
    for s_idx, stage in enumerate(exp.design_space.stages):
        chosen, scores = select_design(
            stage, strategy, ens, exp.model, exp.obs_models, exp.knn_k, exp.dt, rng,
            on_divergence=policy,
        )
        key = (s_idx, chosen.id)
        if key not in truth_data.entries:
            raise ConfigError(
                f"truth dataset has no measurement for stage {s_idx}, "
                f"candidate {chosen.id} (t={chosen.measurement_time}, "
                f"observable {chosen.observable_id!r})"
            )
        ens = forecast(ens, exp.model, chosen.measurement_time, exp.dt, on_divergence=policy)
        ens = enkf_update(ens, truth_data.entries[key], exp.obs_models[chosen.observable_id], rng)
        records.append(
            StageRecord(
                stage=s_idx,
                chosen=chosen,
                scores=scores,
                posterior_metrics=metrics_fn(ens) if metrics_fn is not None else None,
            )
        )
    return records, ens


def init_prior_ensemble(exp: "ExperimentConfig", rng: np.random.Generator) -> Ensemble:
    """The stage-zero ensemble: prior draws at the experiment start time."""
    return init_ensemble(exp.prior, exp.ensemble_size, rng, t0=exp.t0)
