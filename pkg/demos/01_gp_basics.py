# coding: utf-8

# # Gaussian-process basics
#
# A tour of the surrogate model: build a Matern 5/2 kernel, condition a GP
# on a handful of points, look at its predictions, and choose the kernel
# parameters by maximizing the log evidence.

# %%

import numpy as np

from tgbo import Dataset, KernelParams, fit, log_marginal_likelihood, predict
from tgbo.gp import log_marginal_likelihood_grad, log_pseudo_likelihood, predict_batch
from tgbo.model_selection import Kind, Optimizer, default_bounds, optimize_params

rng = np.random.default_rng(0)

# %% [markdown]
# Six noise-free samples of a 1-d function. Kernel parameters are a signal
# amplitude plus one length-scale per input dimension.

# %%

X = rng.uniform(0, 1, size=(6, 1))
y = np.sin(6 * X[:, 0])
data = Dataset(X, y)
params = KernelParams(signal=1.0, lengthscales=[0.5])
print(params.to_vector())

# %% [markdown]
# Conditioning factors the covariance once; predictions then reuse the factor.
# At an observed input the mean reproduces the target and the variance is ~0.

# %%

gp = fit(data, params, noise_variance=1e-4)
post = predict(gp, X[0])
print(f"at a data point: mean {post.mean:.4f} (target {y[0]:.4f}), variance {post.variance:.2e}")

grid = np.linspace(0, 1, 11)[:, None]
mean, var = predict_batch(gp, grid)
for x, m, v in zip(grid[:, 0], mean, var):
    print(f"x={x:.1f}  mean={m:+.3f}  sd={np.sqrt(v):.3f}")

# %% [markdown]
# The log evidence and its analytic gradient drive parameter selection.
# The leave-one-out pseudo-likelihood is the alternative criterion.

# %%

print("log evidence     ", log_marginal_likelihood(data, params))
print("gradient         ", log_marginal_likelihood_grad(data, params))
print("LOO pseudo-lik.  ", log_pseudo_likelihood(data, params))

# %% [markdown]
# Maximizing the evidence inside the default box ``[1e-2, 1e3]``.

# %%

best = optimize_params(data, Kind.MLM, Optimizer.LBFGSB, KernelParams.ones(1),
                       default_bounds(1))
print("selected parameters", best.to_vector())
print("log evidence now   ", log_marginal_likelihood(data, best))
