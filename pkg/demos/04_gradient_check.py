"""
Checking the hand-written gradients against finite differences
==============================================================

The whole model — layer mixing, two attention poolings, the modulation
transform, fusion, and the masked output layer — is differentiated by
hand. This script verifies one tensor of the analytic gradient against
a symmetric finite difference, the same cross-check the test suite
applies to every tensor.
"""

# a small random input stands in for a real utterance's features
import numpy as np

from moddx.encode import LayeredTemporalRep
from moddx.model import backward, forward, forward_with_cache, init_params

rng = np.random.default_rng(0)
rep = LayeredTemporalRep(rng.normal(size=(2, 30, 8)), frame_rate_hz=50.0)

# a scaled-down model keeps the loop over coordinates quick
params = init_params(
    n_layers=2,
    n_features=8,
    attn_hidden=8,
    embedding_size=16,
    seed=7,
)

# one forward pass records every intermediate needed by the backward
# pass; seeding d_logit with 1 makes the result d(logit)/d(parameter)
logit, _, cache = forward_with_cache(rep, params, mode="infer")
grads = backward(cache, params, d_logit=1.0)
print(f"logit {logit:+.4f}; differentiating the fusion weight matrix")

# perturb each coordinate of one tensor both ways and difference the
# logits; this approximates the same derivative numerically
tensor = params.fuse.W
step = 1e-4
numeric = np.zeros_like(tensor)
flat, out = tensor.reshape(-1), numeric.reshape(-1)
for i in range(flat.size):
    orig = flat[i]
    flat[i] = orig + step
    hi = forward(rep, params)[0]
    flat[i] = orig - step
    lo = forward(rep, params)[0]
    flat[i] = orig
    out[i] = (hi - lo) / (2.0 * step)

# compare where the gradient is meaningfully nonzero
analytic = grads["fuse.W"].reshape(-1)
numeric = numeric.reshape(-1)
mask = np.maximum(np.abs(analytic), np.abs(numeric)) > 1e-6
rel = np.abs(analytic[mask] - numeric[mask]) / np.maximum(
    np.abs(analytic[mask]), np.abs(numeric[mask])
)
print(f"{mask.sum()} of {analytic.size} coordinates compared")
print(f"worst relative disagreement: {rel.max():.2e}")
