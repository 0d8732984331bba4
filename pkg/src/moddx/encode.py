"""Waveform preprocessing and temporal-representation encoders.

A temporal representation is an L x T x F tensor: L encoder layers, T time
frames, F feature channels. The built-in log-mel encoder produces a single
layer; multi-layer tensors come from external encoders via WRX1 files.

WRX1 is a little-endian binary format: magic ``WRX1``, three u32 dims
(L, T, F), one f32 frame rate in Hz, then L*T*F f32 values ordered
layer-major, then frame, then feature.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .dsp import StftConfig, Waveform, mel_filterbank, resample, stft_power
from .errors import FormatError

WRX1_MAGIC = b"WRX1"
_WRX1_HEADER = struct.Struct("<4sIIIf")

# Every frame covers 25 ms of audio, advancing 20 ms per step, so the frame
# rate is 50 Hz regardless of sample rate.
MEL_STFT = StftConfig(window_ms=25.0, hop_ms=20.0, n_fft=400)
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class PreprocessConfig:
    """Duration and rate limits applied to raw audio before encoding."""

    max_duration_s: float = 10.0
    min_duration_s: float = 1.0
    target_rate: int = 16000

    def __post_init__(self):
        if not (0 < self.min_duration_s <= self.max_duration_s):
            raise ValueError(
                f"need 0 < min_duration_s <= max_duration_s, got "
                f"{self.min_duration_s} and {self.max_duration_s}"
            )
        if self.target_rate <= 0:
            raise ValueError(f"target_rate must be positive, got {self.target_rate}")


@dataclass(frozen=True)
class LayeredTemporalRep:
    """L x T x F feature tensor with its frame rate in Hz."""

    values: np.ndarray
    frame_rate_hz: float = 50.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or min(values.shape) < 1:
            raise ValueError(f"values must be a non-empty L x T x F tensor, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("temporal representation contains non-finite values")
        if self.frame_rate_hz <= 0:
            raise ValueError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        object.__setattr__(self, "values", values)

    @property
    def n_layers(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def n_features(self) -> int:
        return self.values.shape[2]


def preprocess(samples, sample_rate: int, cfg: PreprocessConfig = PreprocessConfig()) -> Waveform:
    """Normalize raw audio into the canonical model input.

    Steps, in order: average channels to mono, resample to the target rate,
    truncate to the maximum duration (keeping the head), zero-pad the tail up
    to the minimum duration, and scale so the peak magnitude is exactly 1.
    All-zero audio skips the scaling step instead of dividing by zero.

    ``samples`` may be 1-D (mono) or 2-D with shape (n_samples, n_channels).
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("cannot preprocess empty audio")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise ValueError(f"audio must be 1-D or 2-D, got shape {samples.shape}")

    w = resample(Waveform(samples, sample_rate), cfg.target_rate)
    out = w.samples[: round(cfg.max_duration_s * cfg.target_rate)]
    min_len = round(cfg.min_duration_s * cfg.target_rate)
    if len(out) < min_len:
        out = np.concatenate([out, np.zeros(min_len - len(out))])
    peak = np.max(np.abs(out))
    if peak > 0.0:
        out = out / peak
    return Waveform(out, cfg.target_rate)


def encode_mel(w: Waveform, n_mels: int = 64) -> LayeredTemporalRep:
    """Single-layer log-mel encoding of a preprocessed waveform.

    Returns a 1 x T x n_mels tensor of log(mel power + floor); at 16 kHz the
    25 ms / 20 ms framing yields exactly 50 frames per second.
    """
    spec = stft_power(w.samples, w.sample_rate, MEL_STFT)
    bank = mel_filterbank(n_mels, MEL_STFT.n_fft, w.sample_rate)
    mel_power = spec.values @ bank.T
    values = np.log(mel_power + LOG_FLOOR)
    frame_rate = w.sample_rate / MEL_STFT.hop_length(w.sample_rate)
    return LayeredTemporalRep(values[None, :, :], frame_rate_hz=frame_rate)


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file as float64 samples (integer formats scaled to [-1, 1])."""
    rate, data = wavfile.read(path)
    if np.issubdtype(data.dtype, np.integer):
        data = data / float(max(abs(np.iinfo(data.dtype).min), np.iinfo(data.dtype).max))
    return np.asarray(data, dtype=np.float64), int(rate)


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float32 WAV audio."""
    wavfile.write(path, sample_rate, np.asarray(samples, dtype=np.float32))


def write_wrx1(rep: LayeredTemporalRep, path) -> None:
    """Serialize a temporal representation to a WRX1 file."""
    n_layers, n_frames, n_features = rep.values.shape
    header = _WRX1_HEADER.pack(WRX1_MAGIC, n_layers, n_frames, n_features, rep.frame_rate_hz)
    payload = np.ascontiguousarray(rep.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_wrx1(path) -> LayeredTemporalRep:
    """Read a WRX1 file back into a temporal representation.

    Raises FormatError on a bad magic, a truncated header, dimension fields
    of zero, or a payload whose byte count disagrees with the header.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _WRX1_HEADER.size:
        raise FormatError(f"{path}: header truncated ({len(raw)} bytes, need {_WRX1_HEADER.size})")
    magic, n_layers, n_frames, n_features, frame_rate = _WRX1_HEADER.unpack_from(raw)
    if magic != WRX1_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {WRX1_MAGIC!r}")
    if min(n_layers, n_frames, n_features) < 1:
        raise FormatError(
            f"{path}: dimensions must all be >= 1, got L={n_layers} T={n_frames} F={n_features}"
        )
    expected = n_layers * n_frames * n_features * 4
    actual = len(raw) - _WRX1_HEADER.size
    if actual != expected:
        raise FormatError(f"{path}: payload is {actual} bytes, header implies {expected}")
    if not (np.isfinite(frame_rate) and frame_rate > 0):
        raise FormatError(f"{path}: invalid frame rate {frame_rate}")
    values = np.frombuffer(raw, dtype="<f4", offset=_WRX1_HEADER.size).astype(np.float64)
    return LayeredTemporalRep(
        values.reshape(n_layers, n_frames, n_features), frame_rate_hz=float(frame_rate)
    )
