"""Conditional density estimation with covariates that carry no signal.

The target x is the 3-d vertex mixture; the covariates y are independent
standard normals. The conditional map should ignore y, so its test NLL
stays close to the unconditional one as the number of covariates grows.
The share of selected features touching y is printed alongside.
"""
import numpy as np

from atm_density import AtmConfig, fit_conditional, fit_map, gen_mog3, negative_log_likelihood

seed = 0
x = gen_mog3(1000, seed=seed).values
xt = gen_mog3(10_000, seed=1000 + seed, weight_seed=seed).values
joint = fit_map(x, AtmConfig(seed=seed))
print(f"no covariates: test NLL {negative_log_likelihood(joint, xt).mean_nll:.3f}")

for m in (1, 4, 8):
    y = np.random.default_rng([seed, m]).standard_normal((len(x), m))
    yt = np.random.default_rng([seed, m, 1]).standard_normal((len(xt), m))
    tmap = fit_conditional(np.hstack([y, x]), m, AtmConfig(seed=seed))
    nll = negative_log_likelihood(tmap, np.hstack([yt, xt])).mean_nll
    alphas = [a for c in tmap.components for a in c.f.index_set]
    share = sum(any(a[:m]) for a in alphas) / len(alphas)
    print(f"m = {m}: test NLL {nll:.3f}, features {len(alphas)}, share touching y {share:.2f}")
