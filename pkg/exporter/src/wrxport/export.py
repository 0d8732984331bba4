"""Run a pretrained self-supervised speech encoder over audio files and write
every transformer layer's hidden states to WRX1 tensor files.

Each audio file becomes one WRX1 file holding an L x T x F float32 tensor:
L transformer layers (the convolutional input layer is excluded), T frames
at the encoder's frame rate, F hidden dimensions. For the default model that
is L = 12, F = 768 at 50 frames per second. Hidden states are exported raw —
any normalization or layer weighting is the consumer's job.

The WRX1 layout (little-endian): magic ``WRX1``, u32 layer/frame/feature
counts, f32 frame rate in Hz, then the tensor as float32 in C order.
"""

from __future__ import annotations

import argparse
import math
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_MODEL = "microsoft/wavlm-base-plus"
TARGET_RATE = 16000
_HEADER = struct.Struct("<4sIIIf")
AUDIO_SUFFIXES = (".wav", ".flac")


@dataclass
class ExportJob:
    audio_paths: list
    out_dir: Path
    model_id: str = DEFAULT_MODEL


@dataclass
class ExportReport:
    written: list = field(default_factory=list)  # (audio path, wrx1 path)
    failed: list = field(default_factory=list)  # (audio path, error message)

    @property
    def ok(self) -> bool:
        return not self.failed


def write_wrx1(path, tensor: np.ndarray, frame_rate_hz: float) -> None:
    """Serialize an L x T x F tensor in the WRX1 layout."""
    tensor = np.ascontiguousarray(tensor, dtype="<f4")
    if tensor.ndim != 3:
        raise ValueError(f"need an L x T x F tensor, got shape {tensor.shape}")
    n_layers, n_frames, n_features = tensor.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"WRX1", n_layers, n_frames, n_features, frame_rate_hz))
        fh.write(tensor.tobytes())


def read_audio(path) -> np.ndarray:
    """Mono float samples at 16 kHz, resampled if the file rate differs."""
    from scipy.io import wavfile
    from scipy.signal import resample_poly

    rate, raw = wavfile.read(path)
    data = np.asarray(raw, dtype=np.float64)
    if np.issubdtype(raw.dtype, np.integer):
        data = data / float(max(abs(np.iinfo(raw.dtype).min), np.iinfo(raw.dtype).max))
    if data.ndim == 2:
        data = data.mean(axis=1)
    if rate != TARGET_RATE:
        gcd = math.gcd(int(rate), TARGET_RATE)
        data = resample_poly(data, TARGET_RATE // gcd, int(rate) // gcd)
    return data


def _load_model(model_id: str):
    import torch
    from transformers import WavLMModel

    model = WavLMModel.from_pretrained(model_id)
    model.eval()
    torch.set_grad_enabled(False)
    return model


def _frame_rate(model) -> float:
    """Encoder frame rate from its conv-front-end strides (20 ms -> 50 Hz)."""
    stride = 1
    for s in model.config.conv_stride:
        stride *= int(s)
    return TARGET_RATE / stride


def _hidden_state_tensor(model, samples: np.ndarray) -> np.ndarray:
    import torch

    wave = torch.from_numpy(np.ascontiguousarray(samples, dtype=np.float32))[None, :]
    outputs = model(wave, output_hidden_states=True)
    # hidden_states[0] is the convolutional input projection; the transformer
    # layers proper are indices 1..N.
    layers = outputs.hidden_states[1:]
    return torch.stack([layer[0] for layer in layers]).numpy()


def export(job: ExportJob) -> ExportReport:
    """Encode every audio file in the job; continue past per-file failures."""
    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = _load_model(job.model_id)
    rate_hz = _frame_rate(model)

    report = ExportReport()
    for audio_path in job.audio_paths:
        audio_path = Path(audio_path)
        try:
            samples = read_audio(audio_path)
            tensor = _hidden_state_tensor(model, samples)
            out_path = out_dir / (audio_path.stem + ".wrx1")
            write_wrx1(out_path, tensor, rate_hz)
            report.written.append((audio_path, out_path))
        except Exception as err:  # per-file isolation by contract
            report.failed.append((audio_path, f"{type(err).__name__}: {err}"))
    return report


def _collect_inputs(entries) -> list:
    paths = []
    for entry in entries:
        path = Path(entry)
        if path.is_dir():
            paths.extend(sorted(p for p in path.iterdir() if p.suffix.lower() in AUDIO_SUFFIXES))
        else:
            paths.append(path)
    return paths


def run_command(argv) -> int:
    parser = argparse.ArgumentParser(prog="wrxport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="encode audio files to WRX1 hidden-state tensors")
    p.add_argument("--model", default=DEFAULT_MODEL, help="model name or local path")
    p.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="audio files and/or directories")
    p.add_argument("--out", required=True, help="output directory")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0

    inputs = _collect_inputs(args.inputs)
    if not inputs:
        print("error: no input audio files found", file=sys.stderr)
        return 1
    report = export(ExportJob(audio_paths=inputs, out_dir=Path(args.out), model_id=args.model))
    # Manifest fragment (id,path) for splicing into a dataset manifest.
    for audio_path, out_path in report.written:
        print(f"{audio_path.stem},{out_path}")
    for audio_path, message in report.failed:
        print(f"error: {audio_path}: {message}", file=sys.stderr)
    return 0 if report.ok else 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
