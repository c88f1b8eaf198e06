"""Fit multiscale spatially varying coefficients on synthetic data.

Generates surfaces with two spatial scales (smooth alpha=2 and wiggly
alpha=0.5), runs the full pipeline, and reports recovered shrinkage
parameters, per-surface correlations with the truth, and stage timings.
"""

import numpy as np

from fastsvc import FitOptions, SimConfig, fit, gen_large

config = SimConfig(n=2000, k=4, seed=3, generator="large", knot_count=2000)
instance = gen_large(config)
print(f"data: N={config.n}, K={config.k}, true sigma^2 = {instance.true_sigma2:.3f}")
print(f"true scale exponents per coefficient: {instance.alpha_by_column}")

result = fit(instance.dataset, FitOptions(basis="nystrom", seed=0))
print(f"\nfit: {result.basis.n_pairs} eigenpairs, loglik {result.loglik:.2f}, "
      f"sigma^2_hat {result.sigma2_hat:.3f}")
print(f"stage seconds: { {k: round(v, 2) for k, v in result.timings.items()} }")

print("\ncoefficient  true_alpha  rho_hat  alpha_hat  corr(truth, estimate)")
for j in range(config.k):
    est = result.beta_surfaces[:, j]
    c = np.nan if est.std() == 0 else np.corrcoef(instance.true_beta[:, j], est)[0, 1]
    print(f"  beta_{j}        {instance.alpha_by_column[j]:3.1f}     "
          f"{result.params.rho[j]:7.4f}   {result.params.alpha[j]:6.2f}      {c:6.3f}")

print("\nSmooth (alpha=2) surfaces are recovered almost perfectly at this N;")
print("wiggly (alpha=0.5) surfaces sit near the information floor at N=2000 —")
print("their amplitude is well below the noise level, so heavy shrinkage is")
print("the honest posterior answer. Recovery improves steadily with N.")
