"""Modulation dynamics: per-channel power STFT over the feature time axis.

Each feature channel of a T x F temporal representation is treated as a
slow time series at the representation's frame rate (50 Hz by default) and
run through a framed power STFT. The result is an F x J x K tensor — feature
channel by analysis frame by modulation-frequency bin — describing how the
energy of each channel fluctuates over time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import StftConfig, frame_count, hamming_window


@dataclass(frozen=True)
class ModulationDynamics:
    """F x J x K modulation power tensor with its bin spacing in Hz."""

    values: np.ndarray
    mod_bin_hz: float

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    @property
    def n_bins(self) -> int:
        return self.values.shape[2]


def modulation_transform(
    rep: np.ndarray,
    frame_rate_hz: float,
    cfg: StftConfig = StftConfig(),
    pad_short: bool = True,
) -> ModulationDynamics:
    """Framed power STFT of every feature channel of a T x F matrix.

    With the 256 ms / 64 ms defaults at 50 Hz the analysis window spans 13
    frames with a hop of 3. Inputs shorter than one window are zero-padded
    along time (mirroring the minimum-duration audio padding) unless
    ``pad_short`` is false, in which case they raise ValueError.
    """
    rep = np.asarray(rep, dtype=np.float64)
    if rep.ndim != 2:
        raise ValueError(f"rep must be a T x F matrix, got shape {rep.shape}")
    window = cfg.window_length(frame_rate_hz)
    hop = cfg.hop_length(frame_rate_hz)
    if cfg.n_fft < window:
        raise ValueError(f"n_fft={cfg.n_fft} is smaller than the {window}-frame window")
    if rep.shape[0] < window:
        if not pad_short:
            raise ValueError(
                f"{rep.shape[0]} frames is shorter than the {window}-frame window"
            )
        pad = np.zeros((window - rep.shape[0], rep.shape[1]))
        rep = np.concatenate([rep, pad], axis=0)

    n_frames = frame_count(rep.shape[0], window, hop)
    n_bins = cfg.n_fft // 2 + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    coeffs = hamming_window(window)[None, :, None]

    # Channels are independent; work in blocks so the complex intermediate
    # stays small even for wide (e.g. 768-feature) representations.
    n_features = rep.shape[1]
    out = np.empty((n_features, n_frames, n_bins))
    block = max(1, (1 << 24) // (n_frames * cfg.n_fft))
    for start in range(0, n_features, block):
        stop = min(n_features, start + block)
        segments = rep[:, start:stop][idx] * coeffs  # J x window x block
        spectrum = np.fft.rfft(segments, n=cfg.n_fft, axis=1)
        power = spectrum.real**2 + spectrum.imag**2
        out[start:stop] = power.transpose(2, 0, 1)
    return ModulationDynamics(values=out, mod_bin_hz=frame_rate_hz / cfg.n_fft)


def mod_freq_axis(cfg: StftConfig, frame_rate_hz: float) -> np.ndarray:
    """Center frequency in Hz of each of the K = n_fft//2 + 1 modulation bins."""
    return np.arange(cfg.n_fft // 2 + 1) * (frame_rate_hz / cfg.n_fft)
