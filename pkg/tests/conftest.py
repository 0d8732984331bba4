"""Shared fixtures: tiny on-disk corpora for exercising the training loop."""

import numpy as np

from moddx.encode import write_wav
from moddx.manifest import DatasetManifest, ManifestRecord


def build_tone_corpus(directory, n_utts=24, n_train=16, n_valid=4, seed=0):
    """Linearly separable toy set: class 1 is a 3 kHz tone, class 0 is 500 Hz.

    Utterances are 1 s at 16 kHz with a little additive noise; splits are
    assigned in order (train, valid, then test).
    """
    rng = np.random.default_rng(seed)
    t = np.arange(16000) / 16000.0
    records = []
    for i in range(n_utts):
        label = i % 2
        tone = np.sin(2.0 * np.pi * (3000.0 if label else 500.0) * t)
        samples = tone + 0.05 * rng.normal(size=len(t))
        path = directory / f"utt{i:02d}.wav"
        write_wav(path, samples, 16000)
        split = "train" if i < n_train else ("valid" if i < n_train + n_valid else "test")
        records.append(ManifestRecord(f"utt{i:02d}", path, label, f"spk{i % 4}", split))
    return DatasetManifest(tuple(records))
