"""Training engine: loss, exact gradients, optimizer, schedule, early stop.

Everything is driven by one seeded random generator, consumed in a fixed
order (augmentation first, then per-epoch shuffles and dropout masks), so a
run is bitwise reproducible from its configuration.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import expit

from .config import RunConfig
from .dsp import StftConfig, Waveform, resample_by_ratio
from .encode import (
    LayeredTemporalRep,
    PreprocessConfig,
    encode_mel,
    load_wrx1,
    preprocess,
    read_wav,
)
from .errors import TrainingError
from .manifest import DatasetManifest, ManifestRecord
from .model import ModelParams, backward, forward, forward_with_cache, init_params

RT60_RANGE_S = (0.2, 0.8)


@dataclass(frozen=True)
class AugmentConfig:
    """Waveform corruption settings for training-time augmentation."""

    enabled: bool = True
    prob_noise: float = 1.0
    prob_reverb: float = 1.0
    snr_min_db: float = 0.0
    snr_max_db: float = 15.0
    speed_min: float = 0.95
    speed_max: float = 1.05

    def __post_init__(self):
        if self.snr_min_db > self.snr_max_db:
            raise ValueError("snr_min_db exceeds snr_max_db")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, schedule, and early-stop settings."""

    epochs: int = 30
    batch_size: int = 1
    lr_start: float = 1e-4
    lr_end: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    early_stop: bool = True
    warmup_epochs: int = 2
    patience: int = 3
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 < self.lr_end <= self.lr_start:
            raise ValueError("need 0 < lr_end <= lr_start")
        if self.batch_size != 1:
            raise ValueError("only batch_size = 1 is supported")


def train_config_from(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        lr_start=cfg.lr_start,
        lr_end=cfg.lr_end,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        adam_eps=cfg.adam_eps,
        weight_decay=cfg.weight_decay,
        early_stop=cfg.early_stop,
        warmup_epochs=cfg.warmup_epochs,
        patience=cfg.patience,
        augment=AugmentConfig(
            enabled=cfg.augment,
            prob_noise=cfg.prob_noise,
            prob_reverb=cfg.prob_reverb,
            snr_min_db=cfg.snr_min_db,
            snr_max_db=cfg.snr_max_db,
            speed_min=cfg.speed_min,
            speed_max=cfg.speed_max,
        ),
        seed=cfg.seed,
    )


# ---------------------------------------------------------------- loss


def bce_loss(logit: float, label: int) -> float:
    """Binary cross-entropy on a logit, in the overflow-safe softplus form."""
    sign = 2.0 * label - 1.0
    return float(np.logaddexp(0.0, -sign * logit))


def bce_grad(logit: float, label: int) -> float:
    """d bce_loss / d logit = sigmoid(logit) - label."""
    return float(expit(logit)) - label


def loss_and_grad(
    rep: LayeredTemporalRep,
    label: int,
    params: ModelParams,
    rng: np.random.Generator | None = None,
    mode: str = "train",
):
    """One supervised example: loss plus exact gradients for every tensor."""
    logit, _, cache = forward_with_cache(rep, params, mode=mode, rng=rng)
    loss = bce_loss(logit, label)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss} at logit {logit}")
    return loss, backward(cache, params, bce_grad(logit, label))


# ---------------------------------------------------------------- schedule


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Linear ramp from lr_start at epoch 0 to lr_end at the final epoch."""
    if not 0 <= epoch < cfg.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs})")
    if cfg.epochs == 1:
        return cfg.lr_start
    return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * epoch / (cfg.epochs - 1)


# ---------------------------------------------------------------- optimizer


class AdamW:
    """Adam with decoupled weight decay (decay applied directly to weights)."""

    def __init__(self, params: ModelParams, cfg: TrainConfig):
        self.cfg = cfg
        self.step_count = 0
        self.m = {name: np.zeros_like(t) for name, t in params.named_tensors()}
        self.v = {name: np.zeros_like(t) for name, t in params.named_tensors()}

    def step(self, params: ModelParams, grads: dict, lr: float) -> None:
        cfg = self.cfg
        self.step_count += 1
        bias1 = 1.0 - cfg.beta1**self.step_count
        bias2 = 1.0 - cfg.beta2**self.step_count
        for name, tensor in params.named_tensors():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            tensor -= lr * cfg.weight_decay * tensor
            tensor -= lr * (m / bias1) / (np.sqrt(v / bias2) + cfg.adam_eps)


# ---------------------------------------------------------------- augment


def augment(w: Waveform, cfg: AugmentConfig, rng: np.random.Generator) -> list[Waveform]:
    """Original plus corrupted copies: white noise, reverberation, speed.

    The random draws (inclusion gates, SNR, reverberation time, speed
    factor) are consumed in a fixed order so results depend only on the
    generator state. The input waveform itself is never modified.
    """
    if not cfg.enabled:
        return [w]
    out = [w]
    x = w.samples

    noise_gate = rng.random()
    snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db)
    noise = rng.standard_normal(len(x))
    if noise_gate < cfg.prob_noise:
        signal_power = np.mean(x**2)
        if signal_power > 0.0:
            target_power = signal_power / 10.0 ** (snr_db / 10.0)
            noise *= np.sqrt(target_power / np.mean(noise**2))
            out.append(Waveform(x + noise, w.sample_rate))
        else:
            out.append(Waveform(x.copy(), w.sample_rate))

    reverb_gate = rng.random()
    rt60 = rng.uniform(*RT60_RANGE_S)
    if reverb_gate < cfg.prob_reverb:
        # Impulse response decaying by 60 dB over rt60 seconds, unit DC gain.
        n_taps = max(1, round(rt60 * w.sample_rate))
        ir = 10.0 ** (-3.0 * np.arange(n_taps) / (rt60 * w.sample_rate))
        ir /= ir.sum()
        out.append(Waveform(fftconvolve(x, ir)[: len(x)], w.sample_rate))

    factor = cfg.speed_min if rng.random() < 0.5 else cfg.speed_max
    out.append(Waveform(resample_by_ratio(x, factor), w.sample_rate))
    return out


# ---------------------------------------------------------------- data


def rep_from_file(path, cfg: RunConfig) -> LayeredTemporalRep:
    """Encode one manifest entry: WRX1 tensors load directly, audio is
    preprocessed and run through the built-in log-mel encoder."""
    path = Path(path)
    if path.suffix.lower() == ".wrx1":
        return load_wrx1(path)
    samples, rate = read_wav(path)
    pre = PreprocessConfig(cfg.max_duration_s, cfg.min_duration_s, cfg.target_rate)
    return encode_mel(preprocess(samples, rate, pre), n_mels=cfg.n_mels)


def _training_items(records, cfg: RunConfig, aug: AugmentConfig, rng):
    """(rep, label, id) triples, with augmented copies for audio records."""
    pre = PreprocessConfig(cfg.max_duration_s, cfg.min_duration_s, cfg.target_rate)
    items = []
    for record in records:
        if Path(record.path).suffix.lower() == ".wrx1":
            # Precomputed tensors cannot be waveform-augmented.
            items.append((load_wrx1(record.path), record.label, record.id))
            continue
        samples, rate = read_wav(record.path)
        base = preprocess(samples, rate, pre)
        for w in augment(base, aug, rng):
            items.append((encode_mel(w, n_mels=cfg.n_mels), record.label, record.id))
    return items


def _check_uniform_shape(items):
    layers = {rep.n_layers for rep, _, _ in items}
    feats = {rep.n_features for rep, _, _ in items}
    if len(layers) > 1 or len(feats) > 1:
        raise ValueError(
            f"mixed representation shapes: layers {sorted(layers)}, features {sorted(feats)}"
        )


# ---------------------------------------------------------------- loop


@dataclass
class TrainResult:
    best_params: ModelParams
    final_params: ModelParams
    best_epoch: int
    best_val_loss: float
    best_val_f1: float
    log: list
    stopped_early: bool


def _validate(params: ModelParams, items) -> tuple[float, float]:
    from .analysis import f1_macro

    losses, preds, labels = [], [], []
    for rep, label, _ in items:
        logit, _ = forward(rep, params, mode="infer")
        losses.append(bce_loss(logit, label))
        preds.append(1 if logit >= 0.0 else 0)
        labels.append(label)
    return float(np.mean(losses)), f1_macro(preds, labels)


def train(manifest: DatasetManifest, cfg: RunConfig) -> TrainResult:
    """Full training run; returns the best and final parameter sets plus a
    per-epoch log of (epoch, lr, train_loss, val_f1, stopped_early) records.

    The checkpoint returned as best is the one with the lowest validation
    loss (earliest epoch on ties). Early stopping separately watches
    validation macro-F1: after the warmup epochs, ``patience`` consecutive
    epochs without an F1 improvement halt the run.
    """
    train_records = manifest.split("train")
    valid_records = manifest.split("valid")
    if not train_records or not valid_records:
        raise ValueError("training requires non-empty train and valid splits")

    tcfg = train_config_from(cfg)
    rng = np.random.default_rng(cfg.seed)
    items = _training_items(train_records, cfg, tcfg.augment, rng)
    val_items = [(rep_from_file(r.path, cfg), r.label, r.id) for r in valid_records]
    _check_uniform_shape(items + val_items)

    sample = items[0][0]
    params = init_params(
        n_layers=sample.n_layers,
        n_features=sample.n_features,
        attn_hidden=cfg.attn_hidden,
        embedding_size=cfg.embedding_size,
        dropout_rate=cfg.dropout,
        prune_pct=cfg.prune_pct,
        leaky_slope=cfg.leaky_slope,
        use_temporal=cfg.use_temporal,
        use_dynamics=cfg.use_dynamics,
        dyn_stft=StftConfig(cfg.window_ms, cfg.hop_ms, cfg.n_fft),
        seed=cfg.seed,
    )
    optimizer = AdamW(params, tcfg)

    log: list[dict] = []
    best = None  # (val_loss, epoch, params copy, val_f1)
    best_f1 = -np.inf
    stale_epochs = 0
    stopped_early = False

    for epoch in range(tcfg.epochs):
        lr = lr_at(epoch, tcfg)
        epoch_losses = []
        for index in rng.permutation(len(items)):
            rep, label, item_id = items[index]
            try:
                loss, grads = loss_and_grad(rep, label, params, rng=rng, mode="train")
            except TrainingError as err:
                raise TrainingError(f"epoch {epoch}, sample {item_id!r}: {err}") from err
            optimizer.step(params, grads, lr)
            epoch_losses.append(loss)

        val_loss, val_f1 = _validate(params, val_items)
        if best is None or val_loss < best[0]:
            best = (val_loss, epoch, copy.deepcopy(params), val_f1)

        if val_f1 > best_f1:
            best_f1 = val_f1
            stale_epochs = 0
        elif epoch >= tcfg.warmup_epochs:
            stale_epochs += 1

        stopping = tcfg.early_stop and stale_epochs >= tcfg.patience
        log.append(
            {
                "epoch": epoch,
                "lr": lr,
                "train_loss": float(np.mean(epoch_losses)),
                "val_f1": val_f1,
                "stopped_early": stopping,
            }
        )
        if stopping:
            stopped_early = True
            break

    best_loss, best_epoch, best_params, best_val_f1 = best
    return TrainResult(
        best_params=best_params,
        final_params=params,
        best_epoch=best_epoch,
        best_val_loss=best_loss,
        best_val_f1=best_val_f1,
        log=log,
        stopped_early=stopped_early,
    )
