"""ODE systems, state/parameter augmentation, and fixed-step RK4 propagation.

Two systems are built in: a two-species predator-prey model (Lotka-Volterra)
and a four-compartment STAT5 phosphorylation/dimerization/nuclear-import
cascade.  Right-hand sides broadcast over leading axes so a whole ensemble
of states can be advanced in one vectorized pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .errors import DivergenceError, InvalidInput


@dataclass(frozen=True)
class AugmentedState:
    """System state concatenated with parameters treated as constant states."""

    state: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "state", np.asarray(self.state, dtype=float))
        object.__setattr__(self, "params", np.asarray(self.params, dtype=float))
        if not (np.isfinite(self.state).all() and np.isfinite(self.params).all()):
            raise InvalidInput("augmented state contains non-finite entries")


@dataclass(frozen=True)
class ModelSpec:
    """A deterministic ODE model plus its named linear observables.

    ``rhs(state, params)`` evaluates the time derivative of the state; both
    arguments carry the coordinate dimension last and broadcast over any
    leading axes.  ``observables`` maps an observable id to the matrix that
    projects the state onto that observable.
    """

    name: str
    state_dim: int
    param_dim: int
    fixed_params: dict
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray]
    observables: dict = field(default_factory=dict)


def _check_finite(name, arr):
    if not np.isfinite(arr).all():
        raise InvalidInput(f"{name} contains non-finite entries")


def _lv_core(state, params, theta3, theta4):
    x1, x2 = state[..., 0], state[..., 1]
    th1, th2 = params[..., 0], params[..., 1]
    inter = x1 * x2
    return np.stack([-th1 * inter + theta3 * x1, th2 * inter - theta4 * x2], axis=-1)


def _stat5_core(state, params):
    x1, x2, x3 = state[..., 0], state[..., 1], state[..., 2]
    th1, th2, th3 = params[..., 0], params[..., 1], params[..., 2]
    phos = th1 * x1
    dim = th2 * x2**2
    imp = th3 * x3
    return np.stack([-phos, -dim + phos, -imp + 0.5 * dim, imp], axis=-1)


def lv_rhs(state, params, theta3=1.0, theta4=0.4):
    """Predator-prey growth rates.

    Prey x1 grows at rate ``theta3`` and is consumed at rate ``theta1*x1*x2``;
    predator x2 grows from consumption at rate ``theta2*x1*x2`` and dies at
    rate ``theta4``.  ``theta3``/``theta4`` are treated as known constants,
    ``params = (theta1, theta2)`` are the uncertain interaction rates.
    """
    state = np.asarray(state, dtype=float)
    params = np.asarray(params, dtype=float)
    _check_finite("state", state)
    _check_finite("params", params)
    return _lv_core(state, params, theta3, theta4)


def stat5_rhs(state, params):
    """STAT5 cascade: unphosphorylated -> activated -> dimeric -> nuclear.

    ``state = (x1, x2, x3, x4)`` are the four concentrations and
    ``params = (theta1, theta2, theta3)`` the reaction rates.  Dimerization
    consumes two activated molecules per dimer, hence the factor 1/2; the
    weighted total ``x1 + x2 + 2*x3 + 2*x4`` is conserved.
    """
    state = np.asarray(state, dtype=float)
    params = np.asarray(params, dtype=float)
    _check_finite("state", state)
    _check_finite("params", params)
    return _stat5_core(state, params)


def build_lotka_volterra(theta3=1.0, theta4=0.4) -> ModelSpec:
    return ModelSpec(
        name="lotka_volterra",
        state_dim=2,
        param_dim=2,
        fixed_params={"theta3": float(theta3), "theta4": float(theta4)},
        rhs=partial(_lv_core, theta3=float(theta3), theta4=float(theta4)),
        observables={"both": np.eye(2)},
    )


def build_stat5() -> ModelSpec:
    return ModelSpec(
        name="stat5",
        state_dim=4,
        param_dim=3,
        fixed_params={},
        rhs=_stat5_core,
        observables={
            "y1": np.array([[0.0, 1.0, 2.0, 0.0]]),  # activated + 2*dimeric
            "y2": np.array([[1.0, 1.0, 2.0, 0.0]]),  # total cytoplasmic STAT5
        },
    )


_BUILDERS = {
    "lotka_volterra": build_lotka_volterra,
    "stat5": build_stat5,
}


def get_model(model_id: str, fixed_params: dict | None = None) -> ModelSpec:
    """Build a model by string id, optionally overriding its fixed constants."""
    if model_id not in _BUILDERS:
        raise InvalidInput(
            f"unknown model id {model_id!r}; available: {sorted(_BUILDERS)}"
        )
    return _BUILDERS[model_id](**(fixed_params or {}))


def rk4_step(rhs, x, params, h):
    """One classical Runge-Kutta step of size ``h`` (parameters held constant)."""
    k1 = rhs(x, params)
    k2 = rhs(x + (0.5 * h) * k1, params)
    k3 = rhs(x + (0.5 * h) * k2, params)
    k4 = rhs(x + h * k3, params)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _first_bad_member(x):
    if x.ndim < 2:
        return None
    bad = ~np.isfinite(x).all(axis=tuple(range(1, x.ndim)))
    return int(np.argmax(bad)) if bad.any() else None


def rk4_span(rhs, x, params, t0, t1, dt):
    """Advance ``x`` from ``t0`` to ``t1`` with fixed steps of ``dt``.

    The final step is shortened to land exactly on ``t1``.  Raises
    :class:`DivergenceError` as soon as any state entry becomes non-finite.
    """
    if dt <= 0:
        raise InvalidInput("dt must be positive")
    if t1 < t0:
        raise InvalidInput(f"cannot integrate backwards (t0={t0}, t1={t1})")
    x = np.asarray(x, dtype=float)
    _check_finite("state", x)
    _check_finite("params", np.asarray(params, dtype=float))
    span = t1 - t0
    if span == 0.0:
        return x.copy()
    n_full = int(np.floor(span / dt + 1e-12))

    def step(x, t_next, h):
        # an overflow inside a stage evaluation is divergence, not bad input
        try:
            x = rk4_step(rhs, x, params, h)
        except InvalidInput:
            raise DivergenceError(t_next) from None
        if not np.isfinite(x).all():
            raise DivergenceError(t_next, member=_first_bad_member(x))
        return x

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_full):
            x = step(x, t0 + (i + 1) * dt, dt)
        h_last = span - n_full * dt
        if h_last > 1e-9 * dt:
            x = step(x, t1, h_last)
    return x


def rk4_span_resilient(rhs, x, params, t0, t1, dt):
    """Like :func:`rk4_span` for a batch, but diverging rows do not abort.

    A row whose state becomes non-finite is marked dead and pinned to zero
    for the remaining steps (its value is meaningless and must be replaced
    by the caller).  Returns ``(states, dead_mask)``.
    """
    if dt <= 0:
        raise InvalidInput("dt must be positive")
    if t1 < t0:
        raise InvalidInput(f"cannot integrate backwards (t0={t0}, t1={t1})")
    x = np.array(x, dtype=float, copy=True)
    if x.ndim != 2:
        raise InvalidInput("resilient propagation expects a batch of states")
    _check_finite("state", x)
    _check_finite("params", np.asarray(params, dtype=float))
    n = x.shape[0]
    dead = np.zeros(n, dtype=bool)
    span = t1 - t0
    if span == 0.0:
        return x, dead
    n_full = int(np.floor(span / dt + 1e-12))
    h_last = span - n_full * dt
    steps = [dt] * n_full + ([h_last] if h_last > 1e-9 * dt else [])
    with np.errstate(over="ignore", invalid="ignore"):
        for h in steps:
            x = rk4_step(rhs, x, params, h)
            bad = ~np.isfinite(x).all(axis=1)
            if bad.any():
                dead |= bad
            if dead.any():
                x[dead] = 0.0
    return x, dead


def integrate(model: ModelSpec, aug: AugmentedState, t0, t1, dt=0.01) -> AugmentedState:
    """Propagate an augmented state through the model dynamics.

    The parameter block has zero time derivative, so it is returned
    unchanged (bit-identical).
    """
    state = rk4_span(model.rhs, aug.state, aug.params, t0, t1, dt)
    return AugmentedState(state=state, params=aug.params)


def observe_mean(aug: AugmentedState, obs) -> np.ndarray:
    """Noise-free observable: the observation matrix applied to the state."""
    H = np.asarray(obs.H, dtype=float)
    if H.shape[1] != aug.state.shape[-1]:
        raise InvalidInput(
            f"observation matrix expects state dimension {H.shape[1]}, "
            f"got {aug.state.shape[-1]}"
        )
    return aug.state @ H.T
