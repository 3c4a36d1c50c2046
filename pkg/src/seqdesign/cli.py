"""Command-line frontend.

Subcommands:

* ``run``            full multi-trial strategy comparison -> results CSV
* ``simulate``       ground-truth dataset for a config -> dataset CSV
* ``mi-selftest``    information estimators vs analytic Gaussian values
* ``enkf-selftest``  ensemble analysis step vs the exact Kalman update

Configs are INI files with ``[model]``, ``[prior]``, ``[design]`` and
``[run]`` sections; see the bundled ``lotka_volterra.cfg`` / ``stat5.cfg``
for the full key set.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .design import DesignCandidate, DesignSpace, Strategy
from .ensemble import ObservationModel, PriorSpec, enkf_update, Ensemble
from .errors import ConfigError, SeqDesignError
from .harness import ExperimentConfig, export_csv, run_trials, simulate_truth
from .infotheory import kl_entropy, ksg_mi
from .models import get_model


def _key_line(path, key):
    """First line number on which ``key`` is assigned, for error messages."""
    try:
        for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
            stripped = line.split(";")[0].split("#")[0].strip()
            if stripped.startswith(key) and stripped[len(key):].lstrip()[:1] in "=:":
                return i
    except OSError:
        pass
    return None


class _ConfigReader:
    """configparser wrapper that reports the offending key and line."""

    def __init__(self, path):
        self.path = path
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        self.parser = parser

    def _fail(self, section, key, message):
        line = _key_line(self.path, key)
        loc = f" (line {line})" if line is not None else ""
        raise ConfigError(f"{self.path}: [{section}] {key}{loc}: {message}")

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None):
        if not self.parser.has_option(section, key):
            if default is not None:
                return default
            self._fail(section, key, "missing required key")
        return self.parser.get(section, key)

    def floats(self, section, key, default=None):
        raw = self.raw(section, key, default)
        try:
            vals = [float(v) for v in raw.replace(",", " ").split()]
        except ValueError:
            self._fail(section, key, f"expected numbers, got {raw!r}")
        if not vals:
            self._fail(section, key, "expected at least one number")
        return np.array(vals)

    def float(self, section, key, default=None, positive=False):
        raw = self.raw(section, key, default)
        try:
            val = float(raw)
        except ValueError:
            self._fail(section, key, f"expected a number, got {raw!r}")
        if positive and val <= 0:
            self._fail(section, key, f"must be positive, got {val}")
        return val

    def int(self, section, key, default=None, minimum=None):
        raw = self.raw(section, key, default)
        try:
            val = int(raw)
        except ValueError:
            self._fail(section, key, f"expected an integer, got {raw!r}")
        if minimum is not None and val < minimum:
            self._fail(section, key, f"must be at least {minimum}, got {val}")
        return val

    def words(self, section, key, default=None):
        return self.raw(section, key, default).replace(",", " ").split()


def bundled_config_path(name: str) -> Path:
    """Path of a config shipped with the package (``lotka_volterra``, ``stat5``)."""
    if not name.endswith(".cfg"):
        name = name + ".cfg"
    path = Path(str(resources.files("seqdesign.configs") / name))
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return path


def _resolve_config(path_or_name) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    try:
        return bundled_config_path(str(path_or_name))
    except ConfigError:
        raise ConfigError(f"config file not found: {path_or_name}") from None


def parse_config(path) -> ExperimentConfig:
    """Load and validate an experiment configuration file."""
    path = _resolve_config(path)
    cfg = _ConfigReader(path)

    model_id = cfg.raw("model", "id")
    fixed = {}
    if model_id == "lotka_volterra":
        fixed["theta3"] = cfg.float("model", "theta3", default="1.0")
        fixed["theta4"] = cfg.float("model", "theta4", default="0.4")
    try:
        model = get_model(model_id, fixed)
    except SeqDesignError as exc:
        raise ConfigError(f"{path}: [model] id: {exc}") from exc

    initial_state = cfg.floats("model", "initial_state")
    if initial_state.size != model.state_dim:
        cfg._fail("model", "initial_state",
                  f"model {model_id!r} has {model.state_dim} states, got {initial_state.size}")
    t0 = cfg.float("model", "t0", default="0.0")

    param_means = cfg.floats("prior", "param_means")
    param_stds = cfg.floats("prior", "param_stds")
    if param_means.size != model.param_dim:
        cfg._fail("prior", "param_means",
                  f"model {model_id!r} has {model.param_dim} parameters, got {param_means.size}")
    ic_stds = cfg.floats("prior", "initial_state_stds") if cfg.has("prior", "initial_state_stds") else None
    try:
        prior = PriorSpec(param_means, param_stds, initial_state, ic_stds)
    except SeqDesignError as exc:
        raise ConfigError(f"{path}: [prior]: {exc}") from exc

    noise_std = cfg.float("design", "noise_std", positive=True)
    observable_ids = cfg.words("design", "observables")
    for oid in observable_ids:
        if oid not in model.observables:
            cfg._fail("design", "observables",
                      f"model {model_id!r} defines {sorted(model.observables)}, got {oid!r}")
    obs_models = {
        oid: ObservationModel(
            H=model.observables[oid],
            R=noise_std**2 * np.eye(model.observables[oid].shape[0]),
        )
        for oid in observable_ids
    }

    stage_specs = [s for s in cfg.raw("design", "stage_times").split("|")]
    stages = []
    for s_idx, spec_text in enumerate(stage_specs):
        try:
            times = [float(v) for v in spec_text.replace(",", " ").split()]
        except ValueError:
            cfg._fail("design", "stage_times", f"stage {s_idx}: expected numbers, got {spec_text!r}")
        if not times:
            cfg._fail("design", "stage_times", f"stage {s_idx} is empty")
        cands = []
        for t in times:
            for oid in observable_ids:
                cands.append(DesignCandidate(id=len(cands), measurement_time=t, observable_id=oid))
        stages.append(tuple(cands))
    try:
        design_space = DesignSpace(stages=tuple(stages))
    except SeqDesignError as exc:
        raise ConfigError(f"{path}: [design] stage_times: {exc}") from exc

    true_params = cfg.floats("run", "true_params")
    strategies = tuple(Strategy.parse(s) for s in cfg.words("run", "strategies", default="max-mi"))
    min_stage = min(len(stage) for stage in design_space.stages) if design_space.stages else 0
    for s in strategies:
        if s.kind == "fixed" and design_space.stages and s.index >= min_stage:
            cfg._fail("run", "strategies",
                      f"fixed:{s.index} exceeds the smallest stage ({min_stage} candidates)")

    try:
        return ExperimentConfig(
            model=model,
            prior=prior,
            true_params=true_params,
            design_space=design_space,
            obs_models=obs_models,
            noise_std=noise_std,
            ensemble_size=cfg.int("run", "ensemble_size", minimum=2),
            knn_k=cfg.int("run", "knn_k", default="6", minimum=1),
            dt=cfg.float("run", "dt", default="0.01", positive=True),
            n_trials=cfg.int("run", "n_trials", default="1", minimum=1),
            base_seed=cfg.int("run", "base_seed", default="0"),
            t0=t0,
            strategies=strategies,
            divergence_policy=cfg.raw("run", "divergence_policy", default="resample"),
        )
    except SeqDesignError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    from dataclasses import replace

    updates = {}
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if getattr(args, "strategy", None):
        updates["strategies"] = tuple(Strategy.parse(s) for s in args.strategy)
    if getattr(args, "trials", None) is not None:
        updates["n_trials"] = args.trials
    if getattr(args, "ensemble_size", None) is not None:
        updates["ensemble_size"] = args.ensemble_size
    return replace(cfg, **updates) if updates else cfg


def _cmd_run(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    print(f"seed: {cfg.base_seed}", file=sys.stderr)
    results = run_trials(cfg, list(cfg.strategies))
    export_csv(results, args.out)
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    print(f"seed: {cfg.base_seed}", file=sys.stderr)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.base_seed))
    dataset = simulate_truth(cfg, rng, seed=cfg.base_seed)
    stages = cfg.design_space.stages
    with open(args.out, "w", newline="") as fh:
        fh.write("stage,candidate,time,observable,component,value\n")
        for (s_idx, c_idx), vec in sorted(dataset.entries.items()):
            cand = stages[s_idx][c_idx]
            for comp, val in enumerate(vec):
                fh.write(
                    f"{s_idx},{c_idx},{cand.measurement_time!r},"
                    f"{cand.observable_id},{comp},{float(val)!r}\n"
                )
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _report(lines) -> int:
    """Print one estimate-vs-truth line per case; exit 1 if any misses."""
    failures = 0
    for name, got, want, tol in lines:
        ok = abs(got - want) <= tol
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: got {got:+.4f}, "
              f"want {want:+.4f} +- {tol:g}")
    return 1 if failures else 0


def _cmd_mi_selftest(args) -> int:
    n, k = 10000, 6
    rng = np.random.default_rng(20240601)
    lines = []

    u = rng.random(n)
    lines.append(("entropy: uniform(0,1)", kl_entropy(u, k), 0.0, 0.05))
    g = rng.standard_normal(n)
    lines.append(("entropy: normal(0,1)", kl_entropy(g, k), 0.5 * np.log(2 * np.pi * np.e), 0.05))
    g2 = rng.standard_normal((n, 2))
    lines.append(("entropy: 2-d standard normal", kl_entropy(g2, k), np.log(2 * np.pi * np.e), 0.07))

    a, b = rng.standard_normal(n), rng.standard_normal(n)
    lines.append(("mi: independent normals", ksg_mi(a, b, k).value, 0.0, 0.02))
    rho = 0.9
    c = rho * a + np.sqrt(1 - rho**2) * rng.standard_normal(n)
    lines.append(("mi: bivariate normal rho=0.9", ksg_mi(a, c, k).value,
                  -0.5 * np.log(1 - rho**2), 0.05))
    theta = rng.standard_normal(n)
    dat = theta + 0.1 * rng.standard_normal(n)
    lines.append(("mi: unit-signal channel, noise std 0.1", ksg_mi(theta, dat, k).value,
                  0.5 * np.log(1 + 100.0), 0.1))
    return _report(lines)


def _cmd_enkf_selftest(args) -> int:
    n = 10000
    rng = np.random.default_rng(20240602)
    lines = []

    # 1-d: prior N(0,1), observe with unit noise, datum 2 -> posterior N(1, 0.5)
    ens = Ensemble(states=rng.standard_normal((n, 1)), params=np.zeros((n, 1)))
    obs = ObservationModel(H=np.array([[1.0]]), R=np.array([[1.0]]))
    out = enkf_update(ens, np.array([2.0]), obs, rng)
    lines.append(("1-d analysis mean", float(out.states.mean()), 1.0, 3 * np.sqrt(0.5 / n)))
    lines.append(("1-d analysis variance", float(out.states.var(ddof=1)), 0.5,
                  3 * 0.5 * np.sqrt(2 / n)))

    # 2-d cross-correlated prior, first component observed
    p0 = np.array([[1.0, 0.5], [0.5, 2.0]])
    h = np.array([[1.0, 0.0]])
    r = np.array([[0.25]])
    d = np.array([0.7])
    s_mat = h @ p0 @ h.T + r
    gain = p0 @ h.T @ np.linalg.inv(s_mat)
    mu1 = (gain @ d).ravel()
    p1 = p0 - gain @ h @ p0
    members = rng.standard_normal((n, 2)) @ np.linalg.cholesky(p0).T
    ens2 = Ensemble(states=members, params=np.zeros((n, 1)))
    obs2 = ObservationModel(H=h, R=r)
    out2 = enkf_update(ens2, d, obs2, rng)
    mean2 = out2.states.mean(axis=0)
    var2 = out2.states.var(axis=0, ddof=1)
    for i in range(2):
        lines.append((f"2-d analysis mean[{i}]", float(mean2[i]), float(mu1[i]),
                      3 * np.sqrt(p1[i, i] / n)))
        lines.append((f"2-d analysis variance[{i}]", float(var2[i]), float(p1[i, i]),
                      3 * p1[i, i] * np.sqrt(2 / n)))
    return _report(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqdesign",
        description="Information-driven sequential experimental design for ODE models.",
    )
    parser.add_argument("--version", action="version", version=f"seqdesign {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compare strategies over repeated trials")
    run.add_argument("--config", required=True, help="experiment config file or bundled name")
    run.add_argument("--out", default="results.csv", help="output CSV path")
    run.add_argument("--seed", type=int, default=None, help="override the config base seed")
    run.add_argument("--strategy", action="append", default=None,
                     metavar="max-mi|max-entropy|fixed:<i>|random",
                     help="override config strategies (repeatable)")
    run.add_argument("--trials", type=int, default=None, help="override n_trials")
    run.add_argument("--ensemble-size", type=int, default=None, dest="ensemble_size",
                     help="override ensemble_size")
    run.set_defaults(func=_cmd_run)

    sim = sub.add_parser("simulate", help="write the ground-truth dataset for a config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", default="dataset.csv")
    sim.add_argument("--seed", type=int, default=None)
    sim.set_defaults(func=_cmd_simulate)

    mi = sub.add_parser("mi-selftest", help="information estimators vs analytic values")
    mi.set_defaults(func=_cmd_mi_selftest)

    kf = sub.add_parser("enkf-selftest", help="ensemble update vs exact Kalman filter")
    kf.set_defaults(func=_cmd_enkf_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SeqDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
