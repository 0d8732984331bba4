"""The diagnostic head: layer aggregation, attentive pooling, fusion, pruning.

Architecture, end to end::

    L x T x F tensor
        --softmax(layer_logits)--> T x F aggregate
        temporal branch:  attentive mean/std over time      -> 2F
        dynamics branch:  modulation transform, time-average,
                          attentive mean/std over mod. bins -> 2F
        concat -> fusion FC -> E-dim embedding  (the health embedding)
        dropout (train only) -> LeakyReLU -> masked output FC -> logit

Either branch can be disabled for ablations, halving the fusion input width.
The output layer is magnitude-pruned once at initialization; the mask is
frozen and masked weights never receive gradient.

``forward`` is pure given fixed parameters. Training uses
``forward_with_cache``/``backward``, which compute exact reverse-mode
gradients for every trainable tensor, including the paths through the
modulation transform (a fixed linear map followed by squaring).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import StftConfig, hamming_window
from .dynamics import ModulationDynamics, modulation_transform
from .encode import LayeredTemporalRep

VAR_FLOOR = 1e-8  # clamp on pooled variance before the square root


@dataclass
class Attention:
    """Scored pooling parameters: score(h) = v . tanh(W h + b)."""

    W: np.ndarray  # H x F
    b: np.ndarray  # H
    v: np.ndarray  # H


@dataclass
class Linear:
    W: np.ndarray
    b: np.ndarray


@dataclass
class ModelParams:
    """All trainable tensors plus the structural knobs of one model."""

    layer_logits: np.ndarray  # L
    attn_time: Attention
    attn_freq: Attention
    fuse: Linear  # E x (4F or 2F)
    out: Linear  # E and scalar bias, stored as (E,) and (1,)
    prune_mask: np.ndarray  # E, entries in {0, 1}, frozen
    dropout_rate: float = 0.25
    leaky_slope: float = 0.1
    use_temporal: bool = True
    use_dynamics: bool = True
    dyn_stft: StftConfig = field(default_factory=StftConfig)

    @property
    def n_layers(self) -> int:
        return len(self.layer_logits)

    @property
    def n_features(self) -> int:
        return self.attn_time.W.shape[1]

    @property
    def embedding_size(self) -> int:
        return len(self.out.W)

    def named_tensors(self):
        """(name, array) pairs for every trainable tensor, fixed order."""
        return [
            ("layer_logits", self.layer_logits),
            ("attn_time.W", self.attn_time.W),
            ("attn_time.b", self.attn_time.b),
            ("attn_time.v", self.attn_time.v),
            ("attn_freq.W", self.attn_freq.W),
            ("attn_freq.b", self.attn_freq.b),
            ("attn_freq.v", self.attn_freq.v),
            ("fuse.W", self.fuse.W),
            ("fuse.b", self.fuse.b),
            ("out.W", self.out.W),
            ("out.b", self.out.b),
        ]


@dataclass(frozen=True)
class HealthEmbedding:
    """E-dimensional utterance embedding (fusion output, pre-activation)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise ValueError("embedding must be a finite 1-D vector")
        object.__setattr__(self, "values", values)


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = np.exp(x - np.max(x))
    return shifted / shifted.sum()


def init_params(
    n_layers: int,
    n_features: int,
    attn_hidden: int = 128,
    embedding_size: int = 768,
    dropout_rate: float = 0.25,
    prune_pct: float = 0.0,
    leaky_slope: float = 0.1,
    use_temporal: bool = True,
    use_dynamics: bool = True,
    dyn_stft: StftConfig = StftConfig(),
    seed: int = 0,
) -> ModelParams:
    """Seeded initialization: weights uniform in +-sqrt(1/fan_in), biases zero.

    The output-layer prune mask is computed here, from the initial weights,
    and never changes afterwards.
    """
    if not (use_temporal or use_dynamics):
        raise ValueError("at least one branch must be enabled")
    rng = np.random.default_rng(seed)

    def uniform(fan_in, *shape):
        bound = np.sqrt(1.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)

    cat_width = 2 * n_features * (int(use_temporal) + int(use_dynamics))
    out_w = uniform(embedding_size, embedding_size)
    return ModelParams(
        layer_logits=np.zeros(n_layers),
        attn_time=Attention(
            W=uniform(n_features, attn_hidden, n_features),
            b=np.zeros(attn_hidden),
            v=uniform(attn_hidden, attn_hidden),
        ),
        attn_freq=Attention(
            W=uniform(n_features, attn_hidden, n_features),
            b=np.zeros(attn_hidden),
            v=uniform(attn_hidden, attn_hidden),
        ),
        fuse=Linear(W=uniform(cat_width, embedding_size, cat_width), b=np.zeros(embedding_size)),
        out=Linear(W=out_w, b=np.zeros(1)),
        prune_mask=make_prune_mask(out_w, prune_pct),
        dropout_rate=dropout_rate,
        leaky_slope=leaky_slope,
        use_temporal=use_temporal,
        use_dynamics=use_dynamics,
        dyn_stft=dyn_stft,
    )


def make_prune_mask(weights: np.ndarray, percentage: float) -> np.ndarray:
    """Binary mask zeroing the floor(percentage * E) smallest-|w| positions.

    Ties are broken by index: among equal magnitudes, lower indices are
    pruned first.
    """
    if not 0.0 <= percentage < 1.0:
        raise ValueError(f"prune percentage must be in [0, 1), got {percentage}")
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    n_prune = int(np.floor(percentage * len(weights)))
    mask = np.ones(len(weights))
    order = np.argsort(np.abs(weights), kind="stable")
    mask[order[:n_prune]] = 0.0
    return mask


def layer_aggregate(rep: LayeredTemporalRep, layer_logits: np.ndarray) -> np.ndarray:
    """Convex combination of layers under softmax(layer_logits) -> T x F."""
    layer_logits = np.asarray(layer_logits, dtype=np.float64)
    if len(layer_logits) != rep.n_layers:
        raise ValueError(
            f"got {len(layer_logits)} layer logits for a {rep.n_layers}-layer representation"
        )
    weights = softmax(layer_logits)
    return np.einsum("l,ltf->tf", weights, rep.values)


def _asp(h: np.ndarray, attn: Attention):
    """Attentive mean/std pooling over the rows of h (N x F) -> 2F vector.

    Scores e = v . tanh(W h + b) are softmax-normalized into weights alpha;
    the output concatenates the alpha-weighted mean with the alpha-weighted
    standard deviation (variance floored before the root).
    """
    if h.shape[1] != attn.W.shape[1]:
        raise ValueError(f"{h.shape[1]} features vs attention expecting {attn.W.shape[1]}")
    pre = h @ attn.W.T + attn.b  # N x H
    act = np.tanh(pre)
    alpha = softmax(act @ attn.v)  # N
    mu = alpha @ h
    second = alpha @ (h * h)
    var = np.maximum(second - mu * mu, VAR_FLOOR)
    return np.concatenate([mu, np.sqrt(var)])


def asp_time(h: np.ndarray, attn: Attention) -> np.ndarray:
    """Attentive statistics over time frames of a T x F matrix."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValueError(f"need a non-empty T x F matrix, got shape {h.shape}")
    return _asp(h, attn)


def pool_dynamics(d: ModulationDynamics, attn: Attention) -> np.ndarray:
    """Attentive statistics over modulation-frequency bins.

    The F x J x K dynamics tensor is averaged over analysis frames to K x F,
    then pooled over the K frequency rows.
    """
    time_avg = d.values.mean(axis=1)  # F x K
    return _asp(time_avg.T, attn)


def _leaky(u: np.ndarray, slope: float) -> np.ndarray:
    return np.where(u > 0.0, u, slope * u)


def forward(
    rep: LayeredTemporalRep,
    params: ModelParams,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
):
    """Run the head; returns (logit, HealthEmbedding).

    ``infer`` mode is deterministic (dropout inactive). ``train`` mode draws
    an inverted-dropout mask from ``rng``, which is then required.
    """
    logit, embedding, _ = _forward_impl(rep, params, mode, rng, want_cache=False)
    return logit, embedding


def forward_with_cache(
    rep: LayeredTemporalRep,
    params: ModelParams,
    mode: str = "train",
    rng: np.random.Generator | None = None,
):
    """Like forward, but also returns the cache consumed by ``backward``."""
    return _forward_impl(rep, params, mode, rng, want_cache=True)


def _forward_impl(rep, params, mode, rng, want_cache):
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "train" and params.dropout_rate > 0.0 and rng is None:
        raise ValueError("train mode with dropout needs an rng")
    if rep.n_features != params.n_features:
        raise ValueError(
            f"representation has {rep.n_features} features, model expects {params.n_features}"
        )

    cache: dict = {"rep": rep, "mode": mode}
    weights = softmax(params.layer_logits)
    agg = np.einsum("l,ltf->tf", weights, rep.values)  # T x F
    cache["layer_weights"] = weights
    cache["agg"] = agg

    parts = []
    if params.use_temporal:
        vec_t, asp_cache_t = _asp_with_cache(agg, params.attn_time)
        parts.append(vec_t)
        cache["asp_time"] = asp_cache_t
    if params.use_dynamics:
        dyn_cache = _dynamics_with_cache(agg, rep.frame_rate_hz, params.dyn_stft)
        vec_d, asp_cache_d = _asp_with_cache(dyn_cache["time_avg"].T, params.attn_freq)
        parts.append(vec_d)
        cache["dyn"] = dyn_cache
        cache["asp_freq"] = asp_cache_d

    cat = np.concatenate(parts)
    if params.fuse.W.shape[1] != len(cat):
        raise ValueError(
            f"fusion expects width {params.fuse.W.shape[1]}, branch concat has {len(cat)}"
        )
    z = params.fuse.W @ cat + params.fuse.b  # the health embedding
    if mode == "train" and params.dropout_rate > 0.0:
        keep = (rng.random(len(z)) >= params.dropout_rate) / (1.0 - params.dropout_rate)
    else:
        keep = None
    dropped = z if keep is None else z * keep
    act = _leaky(dropped, params.leaky_slope)
    masked_w = params.out.W * params.prune_mask
    logit = float(masked_w @ act + params.out.b[0])

    if not want_cache:
        return logit, HealthEmbedding(z.copy()), None
    cache.update(cat=cat, z=z, keep=keep, dropped=dropped, act=act)
    return logit, HealthEmbedding(z.copy()), cache


def _asp_with_cache(h, attn):
    pre = h @ attn.W.T + attn.b
    act = np.tanh(pre)
    alpha = softmax(act @ attn.v)
    mu = alpha @ h
    second = alpha @ (h * h)
    raw_var = second - mu * mu
    var = np.maximum(raw_var, VAR_FLOOR)
    out = np.concatenate([mu, np.sqrt(var)])
    return out, {
        "h": h, "tanh": act, "alpha": alpha, "mu": mu,
        "raw_var": raw_var, "sigma": np.sqrt(var),
    }


def _dynamics_with_cache(agg, frame_rate_hz, cfg: StftConfig):
    """Modulation transform retaining the linear intermediates for backprop."""
    window = cfg.window_length(frame_rate_hz)
    hop = cfg.hop_length(frame_rate_hz)
    n_time = agg.shape[0]
    padded = agg
    if n_time < window:
        padded = np.concatenate([agg, np.zeros((window - n_time, agg.shape[1]))], axis=0)
    n_frames = (padded.shape[0] - window) // hop + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    win = hamming_window(window)
    segments = padded[idx] * win[None, :, None]  # J x window x F
    spectrum = np.fft.rfft(segments, n=cfg.n_fft, axis=1)  # J x K x F
    power = spectrum.real**2 + spectrum.imag**2
    time_avg = power.mean(axis=0).T  # F x K
    return {
        "n_time": n_time, "padded_len": padded.shape[0], "window": win,
        "idx": idx, "segments": segments,
        "re": spectrum.real, "im": spectrum.imag, "time_avg": time_avg,
        "n_fft": cfg.n_fft,
    }


def _asp_backward(d_out, attn: Attention, cache):
    """Gradients of the pooled 2F vector w.r.t. h and the attention params."""
    h, act, alpha = cache["h"], cache["tanh"], cache["alpha"]
    mu, sigma = cache["mu"], cache["sigma"]
    n_feat = h.shape[1]
    d_mu_out, d_sigma = d_out[:n_feat], d_out[n_feat:]

    # sigma = sqrt(max(second - mu^2, floor)); no gradient where floored.
    live = (cache["raw_var"] > VAR_FLOOR).astype(np.float64)
    d_var = live * d_sigma / (2.0 * sigma)
    d_second = d_var
    d_mu = d_mu_out - 2.0 * mu * d_var

    d_alpha = h @ d_mu + (h * h) @ d_second  # N
    d_h = alpha[:, None] * (d_mu[None, :] + 2.0 * h * d_second[None, :])

    d_scores = alpha * (d_alpha - alpha @ d_alpha)  # softmax backward
    d_act = np.outer(d_scores, attn.v)
    d_pre = d_act * (1.0 - act**2)
    d_h += d_pre @ attn.W  # h also feeds the scores
    return d_h, {
        "W": d_pre.T @ h,
        "b": d_pre.sum(axis=0),
        "v": act.T @ d_scores,
    }


def _dynamics_backward(d_time_avg, cache):
    """Push F x K gradients back through mean, squaring, DFT, and framing."""
    re, im = cache["re"], cache["im"]  # J x K x F
    n_frames = re.shape[0]
    d_power = (d_time_avg.T / n_frames)[None, :, :]  # broadcast over frames
    d_re = 2.0 * re * d_power
    d_im = 2.0 * im * d_power

    n_fft = cache["n_fft"]
    window_len = cache["segments"].shape[1]
    angles = 2.0 * np.pi * np.outer(np.arange(window_len), np.arange(re.shape[1])) / n_fft
    # rfft coefficient: X_k = sum_w x_w (cos - i sin), so dx = dRe.cos - dIm.sin
    d_seg = np.einsum("jkf,wk->jwf", d_re, np.cos(angles)) - np.einsum(
        "jkf,wk->jwf", d_im, np.sin(angles)
    )
    d_seg *= cache["window"][None, :, None]

    d_padded = np.zeros((cache["padded_len"], d_seg.shape[2]))
    np.add.at(d_padded, cache["idx"].reshape(-1), d_seg.reshape(-1, d_seg.shape[2]))
    return d_padded[: cache["n_time"]]  # drop zero-pad rows


def backward(cache, params: ModelParams, d_logit: float):
    """Exact gradients of ``d_logit * logit`` for every trainable tensor.

    Returns a dict keyed like ``ModelParams.named_tensors()``. Pruned output
    positions receive exactly zero gradient.
    """
    act, z, keep = cache["act"], cache["z"], cache["keep"]
    masked_w = params.out.W * params.prune_mask

    grads = {
        "out.W": d_logit * act * params.prune_mask,
        "out.b": np.array([d_logit]),
    }
    d_act = d_logit * masked_w
    d_dropped = np.where(cache["dropped"] > 0.0, d_act, params.leaky_slope * d_act)
    d_z = d_dropped if keep is None else d_dropped * keep

    grads["fuse.W"] = np.outer(d_z, cache["cat"])
    grads["fuse.b"] = d_z
    d_cat = params.fuse.W.T @ d_z

    n_feat = params.n_features
    d_agg = np.zeros_like(cache["agg"])
    offset = 0
    if params.use_temporal:
        d_h, attn_grads = _asp_backward(d_cat[offset : offset + 2 * n_feat],
                                        params.attn_time, cache["asp_time"])
        d_agg += d_h
        grads["attn_time.W"] = attn_grads["W"]
        grads["attn_time.b"] = attn_grads["b"]
        grads["attn_time.v"] = attn_grads["v"]
        offset += 2 * n_feat
    else:
        grads["attn_time.W"] = np.zeros_like(params.attn_time.W)
        grads["attn_time.b"] = np.zeros_like(params.attn_time.b)
        grads["attn_time.v"] = np.zeros_like(params.attn_time.v)
    if params.use_dynamics:
        d_h_freq, attn_grads = _asp_backward(d_cat[offset : offset + 2 * n_feat],
                                             params.attn_freq, cache["asp_freq"])
        d_agg += _dynamics_backward(d_h_freq.T, cache["dyn"])
        grads["attn_freq.W"] = attn_grads["W"]
        grads["attn_freq.b"] = attn_grads["b"]
        grads["attn_freq.v"] = attn_grads["v"]
    else:
        grads["attn_freq.W"] = np.zeros_like(params.attn_freq.W)
        grads["attn_freq.b"] = np.zeros_like(params.attn_freq.b)
        grads["attn_freq.v"] = np.zeros_like(params.attn_freq.v)

    # agg = sum_l softmax(logits)_l rep_l
    rep_values = cache["rep"].values
    d_weights = np.einsum("tf,ltf->l", d_agg, rep_values)
    weights = cache["layer_weights"]
    grads["layer_logits"] = weights * (d_weights - weights @ d_weights)
    return grads
