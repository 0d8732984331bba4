"""Model head: aggregation, pooling, fusion, pruning, and exact gradients."""

import numpy as np
import pytest

from moddx.dsp import StftConfig, Waveform
from moddx.dynamics import ModulationDynamics, modulation_transform
from moddx.encode import LayeredTemporalRep, encode_mel, preprocess
from moddx.model import (
    Attention,
    backward,
    forward,
    forward_with_cache,
    init_params,
    layer_aggregate,
    make_prune_mask,
    asp_time,
    pool_dynamics,
    softmax,
)

RATE = 50.0


def uniform_attention(n_features, hidden=4):
    """Attention with zero scores: softmax gives equal weight to every row."""
    return Attention(W=np.zeros((hidden, n_features)), b=np.zeros(hidden), v=np.zeros(hidden))


def tiny_params(**kwargs):
    defaults = dict(n_layers=2, n_features=8, attn_hidden=8, embedding_size=16, seed=7)
    defaults.update(kwargs)
    return init_params(**defaults)


def tiny_rep(seed=0, n_layers=2, n_frames=20, n_features=8):
    rng = np.random.default_rng(seed)
    return LayeredTemporalRep(rng.normal(size=(n_layers, n_frames, n_features)), frame_rate_hz=RATE)


# ------------------------------------------------------------ aggregation


def test_aggregate_single_layer_is_identity():
    rep = tiny_rep(n_layers=1)
    np.testing.assert_allclose(layer_aggregate(rep, np.array([3.7])), rep.values[0], rtol=1e-12)


def test_aggregate_identical_layers():
    base = tiny_rep(n_layers=1).values[0]
    rep = LayeredTemporalRep(np.stack([base, base]), frame_rate_hz=RATE)
    np.testing.assert_allclose(layer_aggregate(rep, np.array([2.0, -1.0])), base, rtol=1e-12)


def test_aggregate_uniform_logits_average():
    rep = tiny_rep(n_layers=2)
    expected = 0.5 * rep.values[0] + 0.5 * rep.values[1]
    np.testing.assert_allclose(layer_aggregate(rep, np.zeros(2)), expected, rtol=1e-12)


def test_aggregate_rejects_logit_mismatch():
    with pytest.raises(ValueError):
        layer_aggregate(tiny_rep(n_layers=2), np.zeros(3))


def test_softmax_weights_sum_to_one_and_positive():
    rng = np.random.default_rng(1)
    for _ in range(20):
        w = softmax(rng.normal(size=12) * 5)
        assert abs(w.sum() - 1.0) < 1e-9
        assert np.all(w > 0)


# ------------------------------------------------------------ pooling


def test_asp_uniform_attention_is_mean_and_population_std():
    rng = np.random.default_rng(2)
    h = rng.normal(size=(30, 6))
    out = asp_time(h, uniform_attention(6))
    np.testing.assert_allclose(out[:6], h.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(out[6:], h.std(axis=0), rtol=1e-9)


def test_asp_single_frame():
    h = np.array([[1.5, -2.0]])
    out = asp_time(h, uniform_attention(2))
    np.testing.assert_allclose(out[:2], h[0], rtol=1e-12)
    np.testing.assert_allclose(out[2:], np.sqrt(1e-8), rtol=1e-12)


def test_asp_hand_example():
    # Two frames of a single feature, equal attention: mean 2, std 1.
    out = asp_time(np.array([[1.0], [3.0]]), uniform_attention(1))
    np.testing.assert_allclose(out, [2.0, 1.0], rtol=1e-12)


def test_asp_sigma_floor_and_finiteness():
    rng = np.random.default_rng(3)
    attn = Attention(W=rng.normal(size=(4, 5)), b=rng.normal(size=4), v=rng.normal(size=4))
    for _ in range(10):
        out = asp_time(rng.normal(size=(12, 5)) * 100, attn)
        assert np.all(np.isfinite(out))
        assert np.all(out[5:] >= np.sqrt(1e-8) - 1e-12)


def test_asp_invariant_to_frame_permutation():
    rng = np.random.default_rng(4)
    h = rng.normal(size=(25, 6))
    attn = Attention(W=rng.normal(size=(4, 6)), b=rng.normal(size=4), v=rng.normal(size=4))
    base = asp_time(h, attn)
    shuffled = asp_time(h[rng.permutation(25)], attn)
    np.testing.assert_allclose(shuffled, base, rtol=1e-9, atol=1e-12)


def test_pool_dynamics_identical_frames_collapse_to_one():
    rng = np.random.default_rng(5)
    frame = rng.uniform(0.1, 2.0, size=(6, 11))  # F x K
    dyn = ModulationDynamics(np.repeat(frame[:, None, :], 5, axis=1), mod_bin_hz=0.125)
    out = pool_dynamics(dyn, uniform_attention(6))
    np.testing.assert_allclose(out[:6], frame.T.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(out[6:], frame.T.std(axis=0), rtol=1e-9)


def test_pool_dynamics_single_bin():
    dyn = ModulationDynamics(np.ones((3, 4, 1)) * 2.0, mod_bin_hz=0.125)
    out = pool_dynamics(dyn, uniform_attention(3))
    np.testing.assert_allclose(out[:3], 2.0, rtol=1e-12)
    np.testing.assert_allclose(out[3:], np.sqrt(1e-8), rtol=1e-12)


def test_pool_dynamics_uniform_matches_brute_force():
    rng = np.random.default_rng(6)
    values = rng.uniform(0.0, 3.0, size=(5, 7, 9))
    dyn = ModulationDynamics(values, mod_bin_hz=0.125)
    out = pool_dynamics(dyn, uniform_attention(5))
    rows = values.mean(axis=1).T  # K x F brute force
    np.testing.assert_allclose(out[:5], rows.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(out[5:], rows.std(axis=0), rtol=1e-9)


# ------------------------------------------------------------ pruning


def test_prune_mask_zero_percentage():
    np.testing.assert_array_equal(make_prune_mask(np.arange(1.0, 6.0), 0.0), np.ones(5))


def test_prune_mask_ninety_percent_keeps_argmax():
    rng = np.random.default_rng(7)
    w = rng.normal(size=10)
    mask = make_prune_mask(w, 0.9)
    assert mask.sum() == 1.0
    assert mask[np.argmax(np.abs(w))] == 1.0


def test_prune_mask_sorts_by_magnitude():
    np.testing.assert_array_equal(
        make_prune_mask(np.array([3.0, -5.0, 1.0, 2.0]), 0.5), [1.0, 1.0, 0.0, 0.0]
    )


def test_prune_mask_ties_prune_lower_index_first():
    np.testing.assert_array_equal(
        make_prune_mask(np.ones(4), 0.5), [0.0, 0.0, 1.0, 1.0]
    )


def test_prune_mask_rejects_full_prune():
    with pytest.raises(ValueError):
        make_prune_mask(np.ones(4), 1.0)


def test_prune_fraction_matches_configuration():
    params = tiny_params(prune_pct=0.25)
    assert int((params.prune_mask == 0).sum()) == int(np.floor(0.25 * 16))


# ------------------------------------------------------------ forward


def test_forward_infer_is_deterministic():
    params, rep = tiny_params(), tiny_rep()
    first, emb1 = forward(rep, params)
    second, emb2 = forward(rep, params)
    assert first == second
    np.testing.assert_array_equal(emb1.values, emb2.values)


def test_forward_gain_invariance_through_preprocess():
    rng = np.random.default_rng(8)
    x = rng.normal(size=24000)
    params = init_params(n_layers=1, n_features=24, attn_hidden=8, embedding_size=16, seed=3)

    def run(samples):
        rep = encode_mel(preprocess(samples, 16000), n_mels=24)
        return forward(rep, params)[0]

    assert run(x) == run(4.0 * x)


def test_forward_all_pruned_logit_is_bias():
    params, rep = tiny_params(), tiny_rep()
    params.prune_mask = np.zeros_like(params.prune_mask)
    params.out.b = np.array([0.3125])
    logit, _ = forward(rep, params)
    assert logit == 0.3125


def test_forward_rejects_feature_mismatch():
    with pytest.raises(ValueError):
        forward(tiny_rep(n_features=9), tiny_params())


def test_forward_single_branch_variants():
    rep = tiny_rep()
    for kwargs in (dict(use_dynamics=False), dict(use_temporal=False)):
        params = tiny_params(**kwargs)
        assert params.fuse.W.shape[1] == 2 * 8
        logit, emb = forward(rep, params)
        assert np.isfinite(logit)
        assert emb.values.shape == (16,)


def test_forward_branches_disagree():
    rep = tiny_rep()
    logits = {
        name: forward(rep, tiny_params(**kwargs))[0]
        for name, kwargs in [
            ("both", {}), ("temporal", dict(use_dynamics=False)),
            ("dynamics", dict(use_temporal=False)),
        ]
    }
    assert len(set(logits.values())) == 3


def test_forward_train_needs_rng_when_dropout_on():
    with pytest.raises(ValueError):
        forward(tiny_rep(), tiny_params(), mode="train")


def test_forward_train_dropout_changes_logit_not_embedding():
    params, rep = tiny_params(), tiny_rep()
    infer_logit, infer_emb = forward(rep, params)
    train_logit, train_emb = forward(rep, params, mode="train", rng=np.random.default_rng(0))
    # Dropout sits after the fusion output, so the embedding is untouched.
    np.testing.assert_array_equal(train_emb.values, infer_emb.values)
    assert train_logit != infer_logit


def test_forward_train_without_dropout_equals_infer():
    params, rep = tiny_params(dropout_rate=0.0), tiny_rep()
    assert forward(rep, params, mode="train")[0] == forward(rep, params)[0]


def test_init_requires_a_branch():
    with pytest.raises(ValueError):
        tiny_params(use_temporal=False, use_dynamics=False)


def test_init_is_seed_deterministic():
    a, b = tiny_params(seed=11), tiny_params(seed=11)
    for (name_a, ta), (_, tb) in zip(a.named_tensors(), b.named_tensors()):
        np.testing.assert_array_equal(ta, tb, err_msg=name_a)


# ------------------------------------------------------------ gradients


def numeric_grad(rep, params, tensor, step=1e-4):
    """Central finite difference of the infer-mode logit w.r.t. one tensor."""
    grad = np.zeros_like(tensor)
    flat = tensor.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = forward(rep, params)[0]
        flat[i] = orig - step
        lo = forward(rep, params)[0]
        flat[i] = orig
        out[i] = (hi - lo) / (2.0 * step)
    return grad


def assert_grads_close(analytic, numeric, name):
    analytic, numeric = analytic.reshape(-1), numeric.reshape(-1)
    for i, (a, n) in enumerate(zip(analytic, numeric)):
        denom = max(abs(a), abs(n))
        if denom < 1e-6:
            assert abs(a - n) < 1e-6, f"{name}[{i}]: {a} vs {n}"
        else:
            assert abs(a - n) / denom < 1e-4, f"{name}[{i}]: {a} vs {n}"


@pytest.mark.parametrize(
    "branches",
    [dict(), dict(use_dynamics=False), dict(use_temporal=False)],
    ids=["both", "temporal-only", "dynamics-only"],
)
def test_backward_matches_finite_differences(branches):
    params = tiny_params(prune_pct=0.25, **branches)
    rep = tiny_rep(seed=12)
    _, _, cache = forward_with_cache(rep, params, mode="infer")
    grads = backward(cache, params, d_logit=1.0)
    for name, tensor in params.named_tensors():
        assert_grads_close(grads[name], numeric_grad(rep, params, tensor), name)


def test_backward_zero_gradient_on_pruned_positions():
    params = tiny_params(prune_pct=0.5)
    rep = tiny_rep(seed=13)
    _, _, cache = forward_with_cache(rep, params, mode="infer")
    grads = backward(cache, params, d_logit=1.0)
    assert np.all(grads["out.W"][params.prune_mask == 0.0] == 0.0)


def test_backward_with_seeded_dropout_matches_finite_differences():
    # Freezing the dropout mask by reusing the same seed makes the train-mode
    # logit differentiable; check a couple of tensors against differences.
    params, rep = tiny_params(), tiny_rep(seed=14)
    _, _, cache = forward_with_cache(rep, params, mode="train", rng=np.random.default_rng(9))
    grads = backward(cache, params, d_logit=1.0)

    keep = cache["keep"]

    def logit_with_fixed_mask():
        _, _, c = forward_with_cache(rep, params, mode="train", rng=np.random.default_rng(9))
        assert np.array_equal(c["keep"], keep)
        return c["act"] @ (params.out.W * params.prune_mask) + params.out.b[0]

    for name, tensor in [("fuse.b", params.fuse.b), ("out.W", params.out.W)]:
        numeric = np.zeros_like(tensor.reshape(-1))
        flat = tensor.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + 1e-4
            hi = logit_with_fixed_mask()
            flat[i] = orig - 1e-4
            lo = logit_with_fixed_mask()
            flat[i] = orig
            numeric[i] = (hi - lo) / 2e-4
        assert_grads_close(grads[name], numeric.reshape(tensor.shape), name)


def test_dynamics_cache_matches_public_transform():
    # The differentiable path and the fast public transform must agree.
    params, rep = tiny_params(), tiny_rep(seed=15)
    _, _, cache = forward_with_cache(rep, params, mode="infer")
    agg = layer_aggregate(rep, params.layer_logits)
    dyn = modulation_transform(agg, RATE, params.dyn_stft)
    np.testing.assert_allclose(
        cache["dyn"]["time_avg"], dyn.values.mean(axis=1), rtol=1e-12, atol=1e-15
    )
