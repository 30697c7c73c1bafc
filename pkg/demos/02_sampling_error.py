"""Why an exhibition threshold exists: index error versus exposure.

The indexes are sample estimates; their error shrinks like 1/sqrt(eta).
This script prints the plug-in standard errors, a confidence interval,
the Monte Carlo error curve, and the percentile rule that turns a target
sampling share into a concrete exhibition threshold.
"""

import random

from contivote import (
    PopulationSpec,
    Tally,
    confidence_interval,
    resolve_eta_bar,
    rmse_curve,
    rmse_curve_csv,
    simulate_tally,
    stderr_indexes,
)

# -- standard errors from a single observed tally ---------------------------

tally = Tally("observed", v_plus=50, v_minus=50, eta=100)
se_alpha, se_gamma = stderr_indexes(tally)
print(f"split 50/50 over 100 exhibitions: stderr(alpha)={se_alpha:.3f} "
      f"stderr(gamma)={se_gamma:.3f}")

alpha_ci, gamma_ci = confidence_interval(tally, level=0.95)
print(f"95% interval for alpha: [{alpha_ci.lower:.3f}, {alpha_ci.upper:.3f}]")

# -- the Monte Carlo oracle: simulate a known population ---------------------

population = PopulationSpec(p_plus=0.5, p_minus=0.5)  # true alpha 0, gamma 1
sample = simulate_tally(population, eta=100, seed=11)
print(f"one simulated tally at eta=100: v+={sample.v_plus} v-={sample.v_minus}")

rows = rmse_curve(population, eta_list=[100, 400, 1600, 6400], trials=2000, seed=11)
print("\nerror curve (2000 trials per eta):")
print(rmse_curve_csv(rows), end="")
print("each 4x in eta halves the error, as 1/sqrt(eta) predicts\n")

# -- resolving the percentile-based exhibition threshold ----------------------

rng = random.Random(0)
etas = [rng.randint(0, 500) for _ in range(200)]
res = resolve_eta_bar(etas, fraction=0.15)
print(f"eta_bar={res.eta_bar} marks {res.achieved_fraction:.1%} of 200 proposals as sampled")
