"""Synthetic two-class corpus with controllable slow amplitude modulation.

Positive utterances are a carrier multiplied by ``1 + depth * sin(2 pi f t)``
with a sub-2 Hz modulation frequency; negatives are the bare carrier. Each
utterance belongs to a synthetic speaker whose identity is stamped as a
fixed spectral tilt, and speakers — not utterances — are partitioned into
train/valid/test, so the splits are speaker-independent by construction.

This gives a corpus where class separation lives in the low modulation
band and speaker identity lives in the static spectral shape, which is
exactly the contrast the analysis tools are meant to expose.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import sawtooth as scipy_sawtooth

from .encode import write_wav
from .manifest import DatasetManifest, ManifestRecord

SAMPLE_RATE = 16000
SPLIT_FRACTIONS = {"train": 0.7, "valid": 0.1, "test": 0.2}
TILT_REF_HZ = 1000.0


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_per_class: int = 100
    duration_s: float = 10.0
    carrier: str = "noise"
    mod_freq_hz: float = 0.3
    mod_depth: float = 0.5
    speaker_tilt_db_per_octave: float = 3.0
    n_speakers: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError(f"n_per_class must be >= 1, got {self.n_per_class}")
        if not 0.0 < self.mod_freq_hz < 2.0:
            raise ValueError(
                f"mod_freq_hz must lie in (0, 2), the slow-modulation band; got {self.mod_freq_hz}"
            )
        if self.carrier not in ("noise", "sawtooth"):
            raise ValueError(f"carrier must be 'noise' or 'sawtooth', got {self.carrier!r}")
        if not 0.0 <= self.mod_depth <= 1.0:
            raise ValueError(f"mod_depth must be in [0, 1], got {self.mod_depth}")
        if self.n_speakers < 3:
            raise ValueError("need at least 3 speakers to populate three splits")


def _speaker_tilts(spec: SyntheticCorpusSpec) -> np.ndarray:
    """One tilt per speaker, spread evenly over +-speaker_tilt_db_per_octave."""
    if spec.n_speakers == 1:
        return np.zeros(1)
    return np.linspace(
        -spec.speaker_tilt_db_per_octave, spec.speaker_tilt_db_per_octave, spec.n_speakers
    )


def _apply_tilt(samples: np.ndarray, tilt_db_per_octave: float) -> np.ndarray:
    """Color a signal with a constant dB-per-octave spectral slope."""
    if tilt_db_per_octave == 0.0:
        return samples
    spectrum = np.fft.rfft(samples)
    freqs = np.fft.rfftfreq(len(samples), d=1.0 / SAMPLE_RATE)
    octaves = np.zeros_like(freqs)
    positive = freqs > 0
    octaves[positive] = np.log2(freqs[positive] / TILT_REF_HZ)
    gain = 10.0 ** (tilt_db_per_octave * octaves / 20.0)
    gain[0] = gain[1]  # DC follows the lowest bin rather than exploding
    return np.fft.irfft(spectrum * gain, n=len(samples))


def _carrier(spec: SyntheticCorpusSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    if spec.carrier == "noise":
        return rng.standard_normal(n)
    t = np.arange(n) / SAMPLE_RATE
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return scipy_sawtooth(2.0 * np.pi * 110.0 * t + phase)


def _split_of_speaker(index: int, n_speakers: int) -> str:
    """Deterministic speaker partition honoring 70/10/20 as closely as the
    speaker count allows, with every split non-empty."""
    n_valid = max(1, round(SPLIT_FRACTIONS["valid"] * n_speakers))
    n_test = max(1, round(SPLIT_FRACTIONS["test"] * n_speakers))
    n_train = n_speakers - n_valid - n_test
    if n_train < 1:
        raise ValueError(f"{n_speakers} speakers cannot populate three splits 70/10/20")
    if index < n_train:
        return "train"
    if index < n_train + n_valid:
        return "valid"
    return "test"


def generate_synthetic(spec: SyntheticCorpusSpec, out_dir) -> DatasetManifest:
    """Write the corpus WAVs under ``out_dir`` and return its manifest.

    Utterances alternate over speakers round-robin, so every speaker gets
    both classes (given enough utterances). The modulation carries a random
    starting phase per utterance; its frequency, the class contrast, is
    exact.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    tilts = _speaker_tilts(spec)
    n_samples = round(spec.duration_s * SAMPLE_RATE)
    t = np.arange(n_samples) / SAMPLE_RATE

    records = []
    for label in (1, 0):
        for i in range(spec.n_per_class):
            speaker_idx = (i if label else i + spec.n_per_class) % spec.n_speakers
            carrier = _carrier(spec, rng, n_samples)
            if label:
                phase = rng.uniform(0.0, 2.0 * np.pi)
                envelope = 1.0 + spec.mod_depth * np.sin(
                    2.0 * np.pi * spec.mod_freq_hz * t + phase
                )
                samples = carrier * envelope
            else:
                samples = carrier
            samples = _apply_tilt(samples, tilts[speaker_idx])
            samples = 0.9 * samples / np.max(np.abs(samples))

            name = f"{'pos' if label else 'neg'}_{i:04d}"
            path = out_dir / f"{name}.wav"
            write_wav(path, samples, SAMPLE_RATE)
            records.append(
                ManifestRecord(
                    id=name,
                    path=path,
                    label=label,
                    speaker=f"spk{speaker_idx:02d}",
                    split=_split_of_speaker(speaker_idx, spec.n_speakers),
                )
            )
    return DatasetManifest(tuple(records))
