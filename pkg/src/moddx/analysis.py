"""Evaluation metrics and the interpretability suite.

Covers discrimination metrics (rank AUC, macro F1), the group-contrast
F-ratio map over modulation frequency, embedding sparsity, learned layer
importance, and a linear-discriminant speaker probe for measuring how much
speaker identity leaks into an embedding space.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy.stats import rankdata

from .dynamics import ModulationDynamics
from .errors import UndefinedMetricError
from .model import HealthEmbedding, ModelParams, softmax

F_RATIO_EPS = 1e-12
LDA_SHRINKAGE = 1e-3


@dataclass(frozen=True)
class FRatioMap:
    """Per-pixel group-contrast ratios over feature x modulation bin.

    Entries are either 0 (filtered) or >= 1: ratios below 1 mean the group
    means differ by less than the within-group spread and are zeroed.
    """

    values: np.ndarray
    mod_bin_hz: float


@dataclass(frozen=True)
class SparsityReport:
    mean_pct: float
    std_pct: float
    threshold_rel: float


def auc_roc(scores, labels) -> float:
    """Pair-counting AUC with ties at half credit; needs both classes."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if len(scores) != len(labels):
        raise ValueError(f"{len(scores)} scores vs {len(labels)} labels")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = rankdata(scores)  # average ranks give ties 0.5 credit
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _f1_one_class(preds, labels, positive) -> float:
    tp = int(np.sum((preds == positive) & (labels == positive)))
    fp = int(np.sum((preds == positive) & (labels != positive)))
    fn = int(np.sum((preds != positive) & (labels == positive)))
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def f1_macro(preds, labels) -> float:
    """Unweighted mean of the two per-class F1 scores.

    A class that is absent from both predictions and labels scores 0,
    pulling the average down rather than being skipped.
    """
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if len(preds) != len(labels):
        raise ValueError(f"{len(preds)} predictions vs {len(labels)} labels")
    if len(preds) == 0:
        raise ValueError("empty inputs")
    return (_f1_one_class(preds, labels, 1) + _f1_one_class(preds, labels, 0)) / 2.0


def _time_averaged_stack(group) -> np.ndarray:
    mats = []
    for item in group:
        values = item.values if isinstance(item, ModulationDynamics) else np.asarray(item)
        mats.append(values.mean(axis=1) if values.ndim == 3 else values)
    shapes = {m.shape for m in mats}
    if len(shapes) > 1:
        raise ValueError(f"mixed dynamics shapes: {sorted(shapes)}")
    return np.stack(mats)


def f_ratio_map(pos, neg) -> FRatioMap:
    """Pixel-wise contrast between two groups of modulation dynamics.

    Each sample is first averaged over analysis frames to an F x K matrix;
    per pixel, the ratio is (mean difference)^2 over the summed group
    variances. Ratios below 1 are reported as 0.
    """
    if not len(pos) or not len(neg):
        raise ValueError("both groups must be non-empty")
    mod_bin = None
    for item in list(pos) + list(neg):
        if isinstance(item, ModulationDynamics):
            mod_bin = item.mod_bin_hz
            break
    stack_pos = _time_averaged_stack(pos)
    stack_neg = _time_averaged_stack(neg)
    if stack_pos.shape[1:] != stack_neg.shape[1:]:
        raise ValueError(f"group shapes differ: {stack_pos.shape[1:]} vs {stack_neg.shape[1:]}")
    mean_diff = stack_pos.mean(axis=0) - stack_neg.mean(axis=0)
    ratio = mean_diff**2 / (stack_pos.var(axis=0) + stack_neg.var(axis=0) + F_RATIO_EPS)
    ratio[ratio < 1.0] = 0.0
    return FRatioMap(values=ratio, mod_bin_hz=mod_bin if mod_bin is not None else float("nan"))


def _stack_embeddings(embeddings) -> np.ndarray:
    rows = [e.values if isinstance(e, HealthEmbedding) else np.asarray(e) for e in embeddings]
    return np.stack(rows).astype(np.float64)


def sparsity(embeddings, threshold_rel: float = 0.01) -> SparsityReport:
    """Share of near-zero components per embedding, mean +- std over samples.

    A component is near-zero when its magnitude is below ``threshold_rel``
    of the sample's own peak magnitude; an all-zero sample counts as 100%.
    """
    mat = _stack_embeddings(embeddings)
    if mat.size == 0:
        raise ValueError("empty embedding set")
    mags = np.abs(mat)
    peaks = mags.max(axis=1)
    pcts = np.where(
        peaks == 0.0,
        100.0,
        (mags < threshold_rel * peaks[:, None]).sum(axis=1) * 100.0 / mat.shape[1],
    )
    return SparsityReport(
        mean_pct=float(pcts.mean()), std_pct=float(pcts.std()), threshold_rel=threshold_rel
    )


def layer_importance(params: ModelParams) -> np.ndarray:
    """Learned layer mixing weights (softmax of the layer logits; sums to 1)."""
    return softmax(params.layer_logits)


def speaker_probe(embeddings, speakers, train_frac: float = 0.10, seed: int = 0) -> float:
    """Speaker-identification accuracy of a linear discriminant classifier.

    Splits each speaker's samples at random — ceil(train_frac * n), at least
    one — into a small train set, fits a shared-covariance linear
    discriminant (covariance shrunk slightly toward the identity for
    stability in high dimension), and reports accuracy on the held-out rest.
    High accuracy means the embeddings still encode who is speaking.
    """
    mat = _stack_embeddings(embeddings)
    speakers = np.asarray([str(s) for s in speakers])
    if len(mat) != len(speakers):
        raise ValueError(f"{len(mat)} embeddings vs {len(speakers)} speaker ids")
    unique = sorted(set(speakers.tolist()))
    if len(unique) < 2:
        raise ValueError("speaker probe needs at least 2 speakers")
    if not 0 < train_frac < 1:
        raise ValueError(f"train_frac must be in (0, 1), got {train_frac}")

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for speaker in unique:
        idx = np.flatnonzero(speakers == speaker)
        if len(idx) < 2:
            raise ValueError(f"speaker {speaker!r} has {len(idx)} sample(s), need at least 2")
        idx = idx[rng.permutation(len(idx))]
        n_train = max(1, ceil(train_frac * len(idx)))
        train_idx.extend(idx[:n_train])
        test_idx.extend(idx[n_train:])
    train_idx, test_idx = np.array(train_idx), np.array(test_idx)

    predicted = lda_predict(mat[train_idx], speakers[train_idx], mat[test_idx])
    return float(np.mean(predicted == speakers[test_idx]))


def lda_predict(x_train, y_train, x_test, shrinkage: float = LDA_SHRINKAGE) -> np.ndarray:
    """Shared-covariance linear discriminant classification.

    Fits per-class means, a pooled within-class covariance shrunk toward the
    identity by ``shrinkage``, and empirical class priors; returns the
    predicted class label for every test row (ties go to the earlier class
    in sorted order).
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    x_test = np.asarray(x_test, dtype=np.float64)
    y_train = np.asarray(y_train)
    classes = sorted(set(y_train.tolist()))
    class_index = {c: i for i, c in enumerate(classes)}
    means = np.stack([x_train[y_train == c].mean(axis=0) for c in classes])
    centered = x_train - means[[class_index[c] for c in y_train]]
    cov = centered.T @ centered / len(x_train)
    cov = (1.0 - shrinkage) * cov + shrinkage * np.eye(cov.shape[1])

    # score_c(x) = x . inv(cov) mu_c - mu_c . inv(cov) mu_c / 2 + log prior_c
    solved = np.linalg.solve(cov, means.T)  # E x C
    priors = np.array([(y_train == c).sum() for c in classes]) / len(y_train)
    scores = x_test @ solved - 0.5 * np.einsum("ce,ec->c", means, solved) + np.log(priors)
    return np.array(classes, dtype=object)[np.argmax(scores, axis=1)]


# ---------------------------------------------------------------- reports


def save_fratio_map(fmap: FRatioMap, path) -> None:
    """Tabular text dump: feature index, bin frequency in Hz, ratio value."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature\tbin_hz\tvalue\n")
        n_features, n_bins = fmap.values.shape
        for feat in range(n_features):
            for k in range(n_bins):
                fh.write(f"{feat}\t{k * fmap.mod_bin_hz:.6f}\t{fmap.values[feat, k]:.9g}\n")


def save_sparsity_report(report: SparsityReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("metric\tvalue\n")
        fh.write(f"mean_pct\t{report.mean_pct:.6f}\n")
        fh.write(f"std_pct\t{report.std_pct:.6f}\n")
        fh.write(f"threshold_rel\t{report.threshold_rel}\n")
