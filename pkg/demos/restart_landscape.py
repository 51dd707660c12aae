"""Why the soft-plus rectifier makes the fit well posed.

Fits one 1-d map component with four Hermite-function features to 50
samples of a two-bump mixture, starting BFGS from 20 random points. With
the soft-plus g every start lands on the same objective value; with the
square g the runs end in different critical points.
"""
import numpy as np

from atm_density import OptimOptions, gen_fig1_mixture, minimize
from atm_density.data import fit_standardization
from atm_density.objective import ComponentObjective

# =============================================================================
# Step 1: training data, standardized the way the fitting routines do it
# =============================================================================
x = gen_fig1_mixture(50, seed=0).values
z = fit_standardization(x).apply(x)

# =============================================================================
# Step 2: the same objective under two rectifiers, 20 restarts each
# =============================================================================
rng = np.random.default_rng(5)
features = np.arange(4)[:, None]          # degrees 0..3 of x_1
opts = OptimOptions(grad_tol=1e-8, max_iters=2000)

for g in ("softplus", "square"):
    objective = ComponentObjective(features, z, g=g)
    finals = np.array([minimize(objective, rng.uniform(-2, 2, 4), opts).fun for _ in range(20)])
    print(f"{g:>8}: final objective min {finals.min():.6f}  max {finals.max():.6f}  "
          f"spread {np.ptp(finals):.2e}")
    print("          distinct optima:", np.unique(np.round(finals, 6)))
