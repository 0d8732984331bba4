"""Run configuration: one flat namespace, one `key = value` file format.

Every knob of a run — encoder, model, optimizer, schedule, augmentation —
lives in RunConfig under the same name used in config files, so a file, a
checkpoint, and the in-memory object always line up field for field.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import FormatError


@dataclass
class RunConfig:
    # encoder / preprocessing
    n_mels: int = 64
    target_rate: int = 16000
    max_duration_s: float = 10.0
    min_duration_s: float = 1.0
    # modulation analysis
    window_ms: float = 256.0
    hop_ms: float = 64.0
    n_fft: int = 400
    # model
    attn_hidden: int = 128
    embedding_size: int = 768
    dropout: float = 0.25
    prune_pct: float = 0.0
    leaky_slope: float = 0.1
    use_temporal: bool = True
    use_dynamics: bool = True
    # optimization
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
    # augmentation
    augment: bool = True
    snr_min_db: float = 0.0
    snr_max_db: float = 15.0
    speed_min: float = 0.95
    speed_max: float = 1.05
    prob_noise: float = 1.0
    prob_reverb: float = 1.0
    # reproducibility
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 < self.lr_end <= self.lr_start:
            raise ValueError(f"need 0 < lr_end <= lr_start, got {self.lr_end} > {self.lr_start}")
        if self.snr_min_db > self.snr_max_db:
            raise ValueError("snr_min_db exceeds snr_max_db")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, text: str, line_no: int):
    kind = _FIELDS[name].type
    try:
        if kind == "bool":
            lowered = text.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError:
        raise FormatError(f"line {line_no}: cannot parse {name} value {text!r} as {kind}") from None


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; '#' starts a comment, blanks are skipped."""
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _FIELDS:
            raise FormatError(f"line {line_no}: unknown configuration key {key!r}")
        if key in values:
            raise FormatError(f"line {line_no}: duplicate key {key!r}")
        values[key] = _coerce(key, value, line_no)
    try:
        return RunConfig(**values)
    except ValueError as err:
        raise FormatError(f"invalid configuration: {err}") from err


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def save_config(cfg: RunConfig, path) -> None:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(RunConfig)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def config_from_dict(data: dict) -> RunConfig:
    unknown = set(data) - set(_FIELDS)
    if unknown:
        raise FormatError(f"unknown configuration keys: {sorted(unknown)}")
    return RunConfig(**data)
