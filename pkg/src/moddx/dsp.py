"""Deterministic signal-processing primitives.

Window functions, framed power STFT, band-limited resampling, and a
triangular mel filterbank. Everything here is a pure function over numpy
arrays; nothing keeps state, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Waveform:
    """Mono sample sequence plus its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"Waveform samples must be 1-D, got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class StftConfig:
    """Framing parameters for the power STFT.

    Window and hop are given in milliseconds and converted to whole samples
    (or frames, for frame-rate series) at the rate of the analyzed series:
    round(ms * rate / 1000), clamped to at least 1.
    """

    window_ms: float = 256.0
    hop_ms: float = 64.0
    n_fft: int = 400
    window_kind: str = "hamming"
    pad: str = "zero"

    def __post_init__(self):
        if not (self.window_ms >= self.hop_ms > 0):
            raise ValueError(
                f"need window_ms >= hop_ms > 0, got window_ms={self.window_ms} hop_ms={self.hop_ms}"
            )
        if self.n_fft < 1:
            raise ValueError(f"n_fft must be positive, got {self.n_fft}")
        if self.window_kind != "hamming":
            raise ValueError(f"unsupported window kind: {self.window_kind!r}")
        if self.pad != "zero":
            raise ValueError(f"unsupported pad mode: {self.pad!r}")

    def window_length(self, rate_hz: float) -> int:
        """Window length in samples at the given series rate (>= 1)."""
        return max(1, round(self.window_ms * rate_hz / 1000.0))

    def hop_length(self, rate_hz: float) -> int:
        """Hop length in samples at the given series rate (>= 1)."""
        return max(1, round(self.hop_ms * rate_hz / 1000.0))


@dataclass(frozen=True)
class PowerSpectrogram:
    """One-sided power spectrogram: J frames by K = n_fft//2 + 1 bins."""

    values: np.ndarray
    bin_hz: float
    frame_rate_hz: float


def hamming_window(length: int) -> np.ndarray:
    """Symmetric Hamming window w[k] = 0.54 - 0.46*cos(2*pi*k/(length-1)).

    A length of 1 yields [1.0] (the degenerate single-point window).
    """
    if length < 1:
        raise ValueError(f"window length must be >= 1, got {length}")
    if length == 1:
        return np.ones(1)
    k = np.arange(length)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (length - 1))


def frame_count(n_samples: int, window: int, hop: int) -> int:
    """Number of full analysis frames: floor((n - window)/hop) + 1."""
    if n_samples < window:
        raise ValueError(
            f"series of length {n_samples} is shorter than the {window}-sample window; "
            "zero-pad before framing"
        )
    return (n_samples - window) // hop + 1


def stft_power(series: np.ndarray, rate_hz: float, cfg: StftConfig) -> PowerSpectrogram:
    """Framed one-sided power spectrogram of a real series.

    Each frame is windowed (Hamming), zero-padded to ``cfg.n_fft``, and
    Fourier transformed; values are squared complex magnitudes. Content
    beyond the last full frame never contributes.

    Raises ValueError if the series is shorter than one window, so that
    callers can decide to pad.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ValueError(f"series must be 1-D, got shape {series.shape}")
    window = cfg.window_length(rate_hz)
    hop = cfg.hop_length(rate_hz)
    if cfg.n_fft < window:
        raise ValueError(f"n_fft={cfg.n_fft} is smaller than the {window}-sample window")
    n_frames = frame_count(len(series), window, hop)

    coeffs = hamming_window(window)
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = series[idx] * coeffs[None, :]
    spectrum = np.fft.rfft(frames, n=cfg.n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    return PowerSpectrogram(
        values=power,
        bin_hz=rate_hz / cfg.n_fft,
        frame_rate_hz=rate_hz,
    )


def _sinc_kernel_matrix(positions: np.ndarray, cutoff: float, half_width: int):
    """Windowed-sinc interpolation taps for fractional sample positions.

    Returns (indices, taps) where out[m] = sum_k x[indices[m, k]] * taps[m, k]
    assuming x is zero outside its support. cutoff is the anti-alias cutoff
    as a fraction of the input Nyquist.
    """
    base = np.floor(positions).astype(np.int64)
    offsets = np.arange(-half_width + 1, half_width + 1)
    indices = base[:, None] + offsets[None, :]
    u = indices - positions[:, None]
    taps = cutoff * np.sinc(cutoff * u)
    # Hann taper keeps the kernel compact and the stopband quiet.
    taper = np.cos(np.pi * u / (2.0 * half_width)) ** 2
    taper[np.abs(u) >= half_width] = 0.0
    return indices, taps * taper


def _resample_to_length(x: np.ndarray, ratio: float, out_len: int, taps: int = 32) -> np.ndarray:
    """Band-limited interpolation of x at step 1/ratio with out_len samples."""
    if out_len <= 0:
        return np.zeros(0)
    cutoff = min(1.0, ratio)
    half_width = int(np.ceil(taps / cutoff))
    out = np.empty(out_len)
    n = len(x)
    # Bound the gather matrix to ~4M elements per block.
    chunk = max(1, (1 << 22) // (2 * half_width))
    for start in range(0, out_len, chunk):
        stop = min(out_len, start + chunk)
        positions = np.arange(start, stop) / ratio
        indices, kernel = _sinc_kernel_matrix(positions, cutoff, half_width)
        valid = (indices >= 0) & (indices < n)
        gathered = np.where(valid, x[np.clip(indices, 0, n - 1)], 0.0)
        out[start:stop] = np.einsum("mk,mk->m", gathered, kernel)
    return out


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Resample to target_rate via windowed-sinc interpolation.

    Output length is round(len * target_rate / source_rate). When the rates
    already match the samples are returned bit-identical.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == w.sample_rate:
        return Waveform(w.samples.copy(), w.sample_rate)
    ratio = target_rate / w.sample_rate
    out_len = round(len(w.samples) * target_rate / w.sample_rate)
    return Waveform(_resample_to_length(w.samples, ratio, out_len), target_rate)


def resample_by_ratio(samples: np.ndarray, ratio: float) -> np.ndarray:
    """Stretch a sample sequence by 1/ratio: output length round(len/ratio).

    Used for speed perturbation, where the result is reinterpreted at the
    original rate. ratio=1 returns a bit-identical copy.
    """
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    samples = np.asarray(samples, dtype=np.float64)
    if ratio == 1.0:
        return samples.copy()
    out_len = round(len(samples) / ratio)
    return _resample_to_length(samples, 1.0 / ratio, out_len)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filters, shape (n_mels, n_fft//2 + 1), covering 0..Nyquist."""
    if n_mels < 1:
        raise ValueError(f"n_mels must be >= 1, got {n_mels}")
    if n_fft < 2:
        raise ValueError(f"n_fft must be >= 2, got {n_fft}")
    n_bins = n_fft // 2 + 1
    if n_mels > n_bins:
        raise ValueError(f"n_mels={n_mels} exceeds the {n_bins} available frequency bins")

    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    bin_freqs = np.arange(n_bins) * sample_rate / n_fft

    lower = edges_hz[:-2][:, None]
    center = edges_hz[1:-1][:, None]
    upper = edges_hz[2:][:, None]
    rising = (bin_freqs[None, :] - lower) / np.maximum(center - lower, 1e-12)
    falling = (upper - bin_freqs[None, :]) / np.maximum(upper - center, 1e-12)
    bank = np.maximum(0.0, np.minimum(rising, falling))

    if np.any(bank.sum(axis=1) <= 0):
        raise ValueError(
            f"n_mels={n_mels} leaves empty filters at n_fft={n_fft}, rate={sample_rate}; "
            "use fewer mel bands or a longer FFT"
        )
    return bank
