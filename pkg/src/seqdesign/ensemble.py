"""Ensemble representation of joint state/parameter uncertainty.

The ensemble is stored as two matrices (one row per member) rather than a
list of member objects so that forecasting and the Kalman analysis run as
single vectorized passes.  All operations return new ensembles; nothing is
updated in place.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInput, NumericalError
from .models import AugmentedState, ModelSpec, rk4_span, rk4_span_resilient

#: Condition-number threshold beyond which the innovation covariance is
#: regularized before inversion.
_COND_LIMIT = 1e12
_JITTER_REL = 1e-10


@dataclass(frozen=True)
class ObservationModel:
    """Linear observation operator ``d = H x + eps`` with ``eps ~ N(0, R)``."""

    H: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if not np.isfinite(H).all():
            raise InvalidInput("observation matrix must be finite")
        if R.shape[0] != R.shape[1] or R.shape[0] != H.shape[0]:
            raise InvalidInput("noise covariance shape does not match observation matrix")
        if not np.allclose(R, R.T):
            raise InvalidInput("noise covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(R)
        except np.linalg.LinAlgError as exc:
            raise InvalidInput("noise covariance must be positive definite") from exc
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "_chol", chol)

    @property
    def obs_dim(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class PriorSpec:
    """Independent Gaussian priors on parameters, fixed or Gaussian initial state."""

    param_means: np.ndarray
    param_stds: np.ndarray
    initial_state: np.ndarray
    initial_state_stds: np.ndarray | None = None

    def __post_init__(self):
        for name in ("param_means", "param_stds", "initial_state"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.initial_state_stds is not None:
            object.__setattr__(
                self, "initial_state_stds", np.asarray(self.initial_state_stds, dtype=float)
            )
        if self.param_means.shape != self.param_stds.shape:
            raise InvalidInput("param_means and param_stds must have equal length")
        if np.any(self.param_stds <= 0.0):
            raise InvalidInput("param_stds must be positive")
        if self.initial_state_stds is not None:
            if self.initial_state_stds.shape != self.initial_state.shape:
                raise InvalidInput("initial_state_stds must match initial_state length")
            if np.any(self.initial_state_stds <= 0.0):
                raise InvalidInput("initial_state_stds must be positive")


@dataclass
class Ensemble:
    """N joint samples of (state, parameters) tagged with their common time.

    ``n_resampled`` counts members that were replaced by clones of surviving
    members because their trajectory diverged during the forecast that
    produced this ensemble (zero everywhere the dynamics stay finite).
    """

    states: np.ndarray
    params: np.ndarray
    time: float = 0.0
    n_resampled: int = 0

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.params = np.atleast_2d(np.asarray(self.params, dtype=float))
        if self.states.shape[0] != self.params.shape[0]:
            raise InvalidInput("states and params must have one row per member")
        if not (np.isfinite(self.states).all() and np.isfinite(self.params).all()):
            raise InvalidInput("ensemble contains non-finite entries")

    @property
    def n_members(self) -> int:
        return self.states.shape[0]

    @property
    def augmented(self) -> np.ndarray:
        """Members as rows of the augmented vector [state params]."""
        return np.hstack([self.states, self.params])

    def member(self, j: int) -> AugmentedState:
        return AugmentedState(state=self.states[j].copy(), params=self.params[j].copy())

    def copy(self) -> "Ensemble":
        return Ensemble(self.states.copy(), self.params.copy(), self.time)

    def to_csv(self, path):
        """One row per member, state columns first, then parameter columns."""
        s, p = self.states.shape[1], self.params.shape[1]
        header = [f"x{i + 1}" for i in range(s)] + [f"theta{i + 1}" for i in range(p)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in self.augmented:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, time=0.0) -> "Ensemble":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            s = sum(1 for name in header if name.startswith("x"))
            rows = np.array([[float(v) for v in row] for row in reader])
        return cls(states=rows[:, :s], params=rows[:, s:], time=time)


def init_ensemble(prior: PriorSpec, n: int, rng: np.random.Generator, t0=0.0) -> Ensemble:
    """Draw an independent ensemble from the prior.

    Parameters are sampled from their independent Gaussians; the state block
    is either pinned at the initial state or, when ``initial_state_stds`` is
    given, sampled around it.
    """
    if n < 2:
        raise InvalidInput("an ensemble needs at least two members")
    params = prior.param_means + prior.param_stds * rng.standard_normal(
        (n, prior.param_means.size)
    )
    if prior.initial_state_stds is None:
        states = np.tile(prior.initial_state, (n, 1))
    else:
        states = prior.initial_state + prior.initial_state_stds * rng.standard_normal(
            (n, prior.initial_state.size)
        )
    return Ensemble(states=states, params=params, time=float(t0))


def forecast(ens: Ensemble, model: ModelSpec, t1, dt=0.01, on_divergence="raise") -> Ensemble:
    """Propagate every member to ``t1`` through the model dynamics.

    Parameter blocks are constant in time and are carried over bit-identical.

    ``on_divergence`` controls what happens when a member's trajectory
    becomes non-finite (possible when the analysis step pushes rate
    parameters into sign regimes with finite-time blow-up):

    * ``"raise"``: propagate a :class:`DivergenceError` carrying the member
      index (the default, and the contract of a single :func:`integrate`).
    * ``"resample"``: the diverged member is replaced by a clone (state and
      parameters) of a surviving member, cycling through survivors in index
      order; the count is reported via ``Ensemble.n_resampled``.  This keeps
      long multi-stage experiments alive without clipping any state values.
    """
    if t1 < ens.time:
        raise InvalidInput(f"cannot forecast backwards ({ens.time} -> {t1})")
    if on_divergence not in ("raise", "resample"):
        raise InvalidInput(f"unknown divergence policy {on_divergence!r}")
    if on_divergence == "raise":
        states = rk4_span(model.rhs, ens.states, ens.params, ens.time, t1, dt)
        return Ensemble(states=states, params=ens.params.copy(), time=float(t1))

    states, dead = rk4_span_resilient(model.rhs, ens.states, ens.params, ens.time, t1, dt)
    params = ens.params.copy()
    if dead.any():
        alive = np.flatnonzero(~dead)
        if alive.size == 0:
            raise DivergenceError(t1)
        lost = np.flatnonzero(dead)
        donors = alive[np.arange(lost.size) % alive.size]
        states[lost] = states[donors]
        params[lost] = params[donors]
    return Ensemble(states=states, params=params, time=float(t1), n_resampled=int(dead.sum()))


def predict_observations(ens: Ensemble, obs: ObservationModel, rng: np.random.Generator):
    """Per-member noisy observables ``H x_j + eps_j`` with ``eps_j ~ N(0, R)``."""
    noise = rng.standard_normal((ens.n_members, obs.obs_dim)) @ obs._chol.T
    return ens.states @ obs.H.T + noise


def enkf_update(
    ens: Ensemble,
    d,
    obs: ObservationModel,
    rng: np.random.Generator,
    use_exact_r: bool = False,
) -> Ensemble:
    """Perturbed-observation ensemble Kalman analysis step.

    Each member receives its own perturbed copy of the datum,
    ``d_j = d + eps_j``, and is shifted by the gain built from the ensemble
    sample covariance:

        x_a_j = x_f_j + Sigma_f H_aug' (H Sigma_f H' + R_e)^-1 (d_j - H x_f_j)

    where ``Sigma_f`` is the forecast sample covariance over the augmented
    members and ``R_e`` the sample covariance of the drawn perturbations
    (``use_exact_r=True`` substitutes the exact ``R``).  The update acts on
    the full augmented vector, so parameters move through their sampled
    correlation with the observed states.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    q = obs.obs_dim
    if d.shape != (q,):
        raise InvalidInput(f"datum has shape {d.shape}, observation model expects ({q},)")
    if obs.H.shape[1] != ens.states.shape[1]:
        raise InvalidInput("observation matrix does not match the state dimension")
    n = ens.n_members

    eps = rng.standard_normal((n, q)) @ obs._chol.T
    r_e = obs.R if use_exact_r else np.atleast_2d(np.cov(eps, rowvar=False, ddof=1))

    z = ens.augmented
    pred = ens.states @ obs.H.T
    z_dev = z - z.mean(axis=0)
    g_dev = pred - pred.mean(axis=0)
    cross = z_dev.T @ g_dev / (n - 1)  # Sigma_f H'
    innov_cov = g_dev.T @ g_dev / (n - 1) + r_e  # H Sigma_f H' + R_e

    cond = np.linalg.cond(innov_cov)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        innov_cov = innov_cov + np.eye(q) * (_JITTER_REL * np.trace(innov_cov) / q)
    try:
        gain = np.linalg.solve(innov_cov.T, cross.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is singular") from exc

    analysis = z + ((d + eps) - pred) @ gain.T
    s = ens.states.shape[1]
    return Ensemble(states=analysis[:, :s], params=analysis[:, s:], time=ens.time)


def ensemble_stats(ens: Ensemble):
    """Unbiased sample mean, covariance, and parameter standard deviations.

    Returns ``(mean, cov, param_stds)`` where ``mean`` is an
    :class:`AugmentedState`, ``cov`` the (state+param) sample covariance with
    the N-1 denominator, and ``param_stds`` the square roots of the
    parameter-block diagonal.
    """
    if ens.n_members < 2:
        raise InvalidInput("statistics need at least two members")
    z = ens.augmented
    mean = z.mean(axis=0)
    cov = np.atleast_2d(np.cov(z, rowvar=False, ddof=1))
    s = ens.states.shape[1]
    param_stds = np.sqrt(np.diag(cov)[s:])
    return (
        AugmentedState(state=mean[:s], params=mean[s:]),
        cov,
        param_stds,
    )
