"""Choosing measurement *times* by maximizing mutual information.

Four measurement periods over [1, 21], three optional sampling times each.
Before each measurement the current parameter ensemble is forecast to every
candidate time and the mutual information between parameters and the
predicted noisy observation is estimated; the most informative time wins.

Also shown: why ranking candidates by observable entropy alone is not
enough.  H(d) - H(d|theta) is the actual information; once the state itself
is uncertain, H(d|theta) varies across candidates, so the two rankings can
disagree.
"""

import dataclasses

import numpy as np

from seqdesign import (
    ObservationModel,
    PriorSpec,
    Strategy,
    build_lotka_volterra,
    export_csv,
    forecast,
    init_ensemble,
    mi_decomposition,
    predict_observations,
    run_trials,
)
from seqdesign.cli import bundled_config_path, parse_config

cfg = dataclasses.replace(
    parse_config(bundled_config_path("lotka_volterra")),
    ensemble_size=300,
    n_trials=10,
)

print("candidate times per period:",
      [[c.measurement_time for c in stage] for stage in cfg.design_space.stages])

strategies = [Strategy("max_mi"), Strategy("max_entropy"), Strategy("fixed", 0),
              Strategy("fixed", 1), Strategy("fixed", 2), Strategy("random")]
results = run_trials(cfg, strategies)

print(f"\ntrial-mean joint parameter entropy by stage ({cfg.n_trials} trials, "
      f"{cfg.ensemble_size} members):")
for curve in sorted(results.entries, key=lambda c: c.means["joint_entropy"][-1]):
    vals = np.array2string(curve.means["joint_entropy"], precision=3)
    print(f"  {curve.label:12s} {vals}")

export_csv(results, "predator_prey_comparison.csv")
print("\nwrote predator_prey_comparison.csv "
      "(plot with: plotkit predator_prey_comparison.csv --metric joint_entropy --out fig.svg)")

# --- entropy-only ranking vs information ranking ---------------------------
model = build_lotka_volterra()
prior = PriorSpec([0.7, 0.4], [0.1, 0.1], [2.0, 3.0], initial_state_stds=[0.2, 0.2])
obs = ObservationModel(H=np.eye(2), R=0.01 * np.eye(2))

print("\nwith an uncertain initial state, H(d|theta) is design-dependent:")
for t in (1.0, 3.5, 5.99):
    h_ds, h_conds = [], []
    for seed in range(10):
        ens = forecast(init_ensemble(prior, 2000, np.random.default_rng(seed)), model, t)
        d = predict_observations(ens, obs, np.random.default_rng(seed + 999))
        h_d, h_cond = mi_decomposition(ens.params, d, k=6)
        h_ds.append(h_d)
        h_conds.append(h_cond)
    print(f"  t={t:4.2f}  H(d)={np.mean(h_ds):+.3f}  H(d|theta)={np.mean(h_conds):+.3f}"
          f"  I={np.mean(h_ds) - np.mean(h_conds):+.3f}")
print("ranking by H(d) alone would credit spread that the parameters cannot explain")
