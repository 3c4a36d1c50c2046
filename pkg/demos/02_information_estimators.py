"""Nearest-neighbor information estimators against closed-form Gaussian values.

Differential entropy uses kth-neighbor distances (Kozachenko-Leonenko);
mutual information uses the Kraskov estimator, which needs no density
estimate and no binning.  Everything is in nats.
"""

import numpy as np

from seqdesign import digamma, kl_entropy, ksg_mi, mi_decomposition

rng = np.random.default_rng(7)
n, k = 10_000, 6

print(f"digamma via the unit recurrence: psi(1)={digamma(1):+.7f}, psi(10)={digamma(10):.7f}")

print(f"\nentropy estimates at n={n}, k={k}:")
cases = [
    ("uniform(0,1)", rng.random(n), 0.0),
    ("normal(0,1)", rng.standard_normal(n), 0.5 * np.log(2 * np.pi * np.e)),
    ("2-d standard normal", rng.standard_normal((n, 2)), np.log(2 * np.pi * np.e)),
]
for name, samples, analytic in cases:
    print(f"  H[{name:20s}] = {kl_entropy(samples, k):+.4f}   (analytic {analytic:+.4f})")

print(f"\nmutual information at n={n}, k={k}:")
x = rng.standard_normal(n)
for rho in (0.0, 0.5, 0.9):
    y = rho * x + np.sqrt(1 - rho**2) * rng.standard_normal(n)
    analytic = -0.5 * np.log(1 - rho**2) if rho else 0.0
    print(f"  I(rho={rho:3.1f}) = {ksg_mi(x, y, k).value:+.4f}   (analytic {analytic:+.4f})")

# the estimate is invariant under rescaling either variable
y = 0.9 * x + np.sqrt(1 - 0.81) * rng.standard_normal(n)
base, scaled = ksg_mi(x, y, k).value, ksg_mi(x, 1000.0 * y, k).value
print(f"  rescaling invariance: I={base:+.4f} vs I(y*1000)={scaled:+.4f}")

# decomposition I = H(d) - H(d|theta): for d = g(theta) + noise the
# conditional part is exactly the noise entropy
theta = rng.standard_normal(n)
d = np.tanh(theta) + 0.1 * rng.standard_normal(n)
h_d, h_cond = mi_decomposition(theta, d, k)
print(f"\nd = tanh(theta) + noise(0.1):  H(d)={h_d:+.4f}  H(d|theta)={h_cond:+.4f}"
      f"  (noise entropy {0.5 * np.log(2 * np.pi * np.e * 0.01):+.4f})")
