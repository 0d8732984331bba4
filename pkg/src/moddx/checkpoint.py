"""Versioned model checkpoint container (WRXC).

Layout, all integers little-endian:

    bytes 0-3   magic ``WRXC``
    bytes 4-7   u32 container version (currently 1)
    bytes 8-11  u32 byte length of the JSON header that follows
    ...         UTF-8 JSON header
    ...         tensor payloads, float32 little-endian, C order,
                concatenated in the order the header lists them

The JSON header carries the full run configuration, the model's structural
hyperparameters, and a manifest of tensor names and shapes. Every model
tensor — including the non-trainable output prune mask — is stored, so a
loaded checkpoint reproduces inference exactly (up to float32 rounding of
the stored values).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import RunConfig, config_from_dict
from .dsp import StftConfig
from .errors import FormatError
from .model import Attention, Linear, ModelParams

WRXC_MAGIC = b"WRXC"
WRXC_VERSION = 1


def _tensor_entries(params: ModelParams) -> list:
    entries = list(params.named_tensors())
    entries.append(("prune_mask", params.prune_mask))
    return entries


def save_checkpoint(path, params: ModelParams, run_config: RunConfig) -> None:
    entries = _tensor_entries(params)
    header = {
        "config": run_config.to_dict(),
        "model": {
            "n_layers": int(params.layer_logits.shape[0]),
            "dropout_rate": params.dropout_rate,
            "leaky_slope": params.leaky_slope,
            "use_temporal": params.use_temporal,
            "use_dynamics": params.use_dynamics,
            "dyn_window_ms": params.dyn_stft.window_ms,
            "dyn_hop_ms": params.dyn_stft.hop_ms,
            "dyn_n_fft": params.dyn_stft.n_fft,
        },
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in entries],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WRXC_MAGIC)
        fh.write(np.uint32(WRXC_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        for _, tensor in entries:
            fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Read a WRXC file back into ``(ModelParams, RunConfig)``."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    if raw[:4] != WRXC_MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}, expected {WRXC_MAGIC!r}")
    version = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    if version != WRXC_VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    header_len = int(np.frombuffer(raw[8:12], dtype="<u4")[0])
    if len(raw) < 12 + header_len:
        raise FormatError(f"{path}: header claims {header_len} bytes but file is shorter")
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise FormatError(f"{path}: unreadable header ({err})") from err

    tensors = {}
    offset = 12 + header_len
    for entry in header["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 4 * count
        if end > len(raw):
            raise FormatError(
                f"{path}: tensor {entry['name']!r} needs {4 * count} bytes, "
                f"only {len(raw) - offset} remain"
            )
        tensors[entry["name"]] = (
            np.frombuffer(raw[offset:end], dtype="<f4").astype(np.float64).reshape(shape)
        )
        offset = end
    if offset != len(raw):
        raise FormatError(f"{path}: {len(raw) - offset} trailing bytes after tensor payload")

    model_meta = header["model"]
    required = [
        "layer_logits",
        "attn_time.W", "attn_time.b", "attn_time.v",
        "attn_freq.W", "attn_freq.b", "attn_freq.v",
        "fuse.W", "fuse.b",
        "out.W", "out.b",
        "prune_mask",
    ]
    missing = [name for name in required if name not in tensors]
    if missing:
        raise FormatError(f"{path}: missing tensors {missing}")

    params = ModelParams(
        layer_logits=tensors["layer_logits"],
        attn_time=Attention(
            W=tensors["attn_time.W"], b=tensors["attn_time.b"], v=tensors["attn_time.v"]
        ),
        attn_freq=Attention(
            W=tensors["attn_freq.W"], b=tensors["attn_freq.b"], v=tensors["attn_freq.v"]
        ),
        fuse=Linear(W=tensors["fuse.W"], b=tensors["fuse.b"]),
        out=Linear(W=tensors["out.W"], b=tensors["out.b"]),
        prune_mask=tensors["prune_mask"],
        dropout_rate=float(model_meta["dropout_rate"]),
        leaky_slope=float(model_meta["leaky_slope"]),
        use_temporal=bool(model_meta["use_temporal"]),
        use_dynamics=bool(model_meta["use_dynamics"]),
        dyn_stft=StftConfig(
            window_ms=float(model_meta["dyn_window_ms"]),
            hop_ms=float(model_meta["dyn_hop_ms"]),
            n_fft=int(model_meta["dyn_n_fft"]),
        ),
    )
    return params, config_from_dict(header["config"])
