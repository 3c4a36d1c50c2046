import numpy as np
import pytest

from seqdesign import (
    DesignCandidate,
    DesignSpace,
    ExperimentConfig,
    ModelSpec,
    ObservationModel,
    PriorSpec,
    Strategy,
    build_lotka_volterra,
)

LV_STAGE_TIMES = ((1.0, 3.5, 5.99), (6.0, 8.5, 10.99), (11.0, 13.5, 15.99), (16.0, 18.5, 20.99))


def lv_design_space(stage_times=LV_STAGE_TIMES, observable="both"):
    stages = tuple(
        tuple(
            DesignCandidate(id=i, measurement_time=t, observable_id=observable)
            for i, t in enumerate(times)
        )
        for times in stage_times
    )
    return DesignSpace(stages=stages)


def lv_config(
    ensemble_size=200,
    n_trials=2,
    base_seed=0,
    noise_std=0.1,
    stage_times=LV_STAGE_TIMES,
    initial_state_stds=None,
    knn_k=6,
):
    model = build_lotka_volterra()
    return ExperimentConfig(
        model=model,
        prior=PriorSpec(
            param_means=[0.7, 0.4],
            param_stds=[0.1, 0.1],
            initial_state=[2.0, 3.0],
            initial_state_stds=initial_state_stds,
        ),
        true_params=[0.6, 0.3],
        design_space=lv_design_space(stage_times),
        obs_models={"both": ObservationModel(H=np.eye(2), R=noise_std**2 * np.eye(2))},
        noise_std=noise_std,
        ensemble_size=ensemble_size,
        knn_k=knn_k,
        dt=0.01,
        n_trials=n_trials,
        base_seed=base_seed,
        strategies=(Strategy("max_mi"),),
    )


def ramp_rhs(x, theta):
    """dx/dt = theta: after unit time the state equals the parameter exactly."""
    return np.broadcast_to(theta[..., :1], x.shape).copy()


def ramp_model(observables=None):
    return ModelSpec(
        name="ramp",
        state_dim=1,
        param_dim=1,
        fixed_params={},
        rhs=ramp_rhs,
        observables=observables or {"x": np.array([[1.0]])},
    )


def ramp_config(ensemble_size=1000, noise_std=0.1, n_trials=1, base_seed=0, stages=1):
    """1-d channel: measure x(1) = theta + noise; analytic MI is available."""
    model = ramp_model()
    space = DesignSpace(
        stages=tuple(
            (DesignCandidate(id=0, measurement_time=float(s + 1), observable_id="x"),)
            for s in range(stages)
        )
    )
    return ExperimentConfig(
        model=model,
        prior=PriorSpec(param_means=[0.0], param_stds=[1.0], initial_state=[0.0]),
        true_params=[0.4],
        design_space=space,
        obs_models={"x": ObservationModel(H=[[1.0]], R=[[noise_std**2]])},
        noise_std=noise_std,
        ensemble_size=ensemble_size,
        knn_k=6,
        dt=0.01,
        n_trials=n_trials,
        base_seed=base_seed,
        strategies=(Strategy("fixed", 0),),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
