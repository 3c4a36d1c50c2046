"""Choosing which *observable* to measure in a signaling cascade.

At each of t = 2, 4, 8, 16, 32 either y1 = x2 + 2*x3 (activated STAT5) or
y2 = x1 + x2 + 2*x3 (total STAT5) can be measured, and the choice is made
by maximizing the estimated mutual information with the three reaction
rates.  The adaptive strategy mainly sharpens the first rate; the other two
stay close to their priors, matching what the measurements can actually
resolve.
"""

import dataclasses
from collections import Counter

import numpy as np

from seqdesign import Strategy, run_trials, simulate_truth, run_sequential
from seqdesign.cli import bundled_config_path, parse_config

cfg = dataclasses.replace(
    parse_config(bundled_config_path("stat5")),
    ensemble_size=500,
    n_trials=8,
)

strategies = [Strategy("max_mi"), Strategy("fixed", 0), Strategy("fixed", 1),
              Strategy("random")]
results = run_trials(cfg, strategies)

print(f"final-stage summaries ({cfg.n_trials} trials, {cfg.ensemble_size} members):")
print(f"  {'strategy':12s} {'joint entropy':>14s} {'std theta1':>11s} "
      f"{'std theta2':>11s} {'std theta3':>11s}")
for curve in sorted(results.entries, key=lambda c: c.means["joint_entropy"][-1]):
    print(f"  {curve.label:12s} {curve.means['joint_entropy'][-1]:14.3f}"
          f" {curve.means['std_theta1'][-1]:11.4f}"
          f" {curve.means['std_theta2'][-1]:11.4f}"
          f" {curve.means['std_theta3'][-1]:11.4f}")

# which observable does the adaptive strategy actually pick?
picks = Counter()
for trial in range(cfg.n_trials):
    from seqdesign.harness import _trial_seed_sequences

    data_ss, run_ss = _trial_seed_sequences(cfg.base_seed, trial)
    dataset = simulate_truth(cfg, np.random.default_rng(data_ss))
    records, _ = run_sequential(cfg, Strategy("max_mi"), dataset,
                                np.random.default_rng(run_ss))
    for rec in records:
        picks[(rec.stage, rec.chosen.observable_id)] += 1

print("\nmax-mi observable choices by stage (counts over trials):")
times = [stage[0].measurement_time for stage in cfg.design_space.stages]
for s, t in enumerate(times):
    y1, y2 = picks[(s, "y1")], picks[(s, "y2")]
    print(f"  stage {s} (t={t:4.0f}): y1 chosen {y1}x, y2 chosen {y2}x")
