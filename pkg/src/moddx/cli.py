"""Command-line surface.

Subcommands: ``synth`` (corpus generator), ``train``, ``evaluate``,
``extract``, ``analyze fratio|sparsity|layers``, ``probe speaker``.
Exit codes: 0 success, 1 usage error, 2 data or format error. All commands
are deterministic: rerunning with identical inputs and seed reproduces
byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    auc_roc,
    f1_macro,
    f_ratio_map,
    layer_importance,
    save_fratio_map,
    save_sparsity_report,
    sparsity,
    speaker_probe,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .dsp import StftConfig
from .dynamics import modulation_transform
from .encode import LayeredTemporalRep, write_wrx1
from .errors import FormatError, TrainingError, UndefinedMetricError
from .manifest import parse_manifest, write_manifest
from .model import forward, layer_aggregate
from .synth import SyntheticCorpusSpec, generate_synthetic
from .training import rep_from_file, train

SPLIT_CHOICES = ("train", "valid", "test", "all")


def _select_records(manifest, split: str):
    records = manifest.records if split == "all" else manifest.split(split)
    if not records:
        raise ValueError(f"manifest has no records in split {split!r}")
    return records


def _score_records(records, params, cfg: RunConfig):
    """Manifest-ordered (logit, embedding, record) triples, inference mode."""
    out = []
    for record in records:
        rep = rep_from_file(record.path, cfg)
        logit, embedding = forward(rep, params, mode="infer")
        out.append((logit, embedding, record))
    return out


def cmd_synth(args) -> int:
    spec = SyntheticCorpusSpec(
        n_per_class=args.n_per_class,
        duration_s=args.duration_s,
        carrier=args.carrier,
        mod_freq_hz=args.mod_freq_hz,
        mod_depth=args.mod_depth,
        speaker_tilt_db_per_octave=args.tilt_db_per_octave,
        n_speakers=args.n_speakers,
        seed=args.seed,
    )
    manifest = generate_synthetic(spec, args.out)
    manifest_path = Path(args.out) / "manifest.csv"
    write_manifest(manifest, manifest_path)
    print(f"wrote {len(manifest.records)} utterances and {manifest_path}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    manifest = parse_manifest(
        args.manifest, require_speaker_independent=not args.allow_speaker_overlap
    )
    result = train(manifest, cfg)
    save_checkpoint(args.out, result.best_params, cfg)
    log_path = Path(args.log) if args.log else Path(str(args.out) + ".log.jsonl")
    with open(log_path, "w", encoding="utf-8") as fh:
        for record in result.log:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(
        f"checkpoint {args.out} (best epoch {result.best_epoch}, "
        f"val_loss {result.best_val_loss:.6f}, val_f1 {result.best_val_f1:.6f}); "
        f"log {log_path}"
    )
    return 0


def cmd_evaluate(args) -> int:
    params, cfg = load_checkpoint(args.ckpt)
    manifest = parse_manifest(args.manifest)
    splits = [args.split] if args.split else ["valid", "test"]
    for split in splits:
        scored = _score_records(_select_records(manifest, split), params, cfg)
        logits = np.array([s[0] for s in scored])
        labels = np.array([s[2].label for s in scored])
        preds = (logits >= 0.0).astype(int)
        auc = auc_roc(logits, labels)
        f1 = f1_macro(preds, labels)
        print(f"split={split} n={len(scored)} auc={auc:.6f} f1={f1:.6f}")
    return 0


def cmd_extract(args) -> int:
    params, cfg = load_checkpoint(args.ckpt)
    manifest = parse_manifest(args.manifest)
    records = _select_records(manifest, args.split)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    index_rows = []
    for logit, embedding, record in _score_records(records, params, cfg):
        path = out_dir / f"{record.id}.wrx1"
        # One embedding = a degenerate 1 x 1 x E tensor; frame rate is nominal.
        write_wrx1(LayeredTemporalRep(embedding.values.reshape(1, 1, -1), 1.0), path)
        index_rows.append([record.id, path.name, record.label, record.speaker, record.split])
    with open(out_dir / "index.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "path", "label", "speaker", "split"])
        writer.writerows(index_rows)
    print(f"wrote {len(index_rows)} embeddings to {out_dir}")
    return 0


def _analysis_stft(args, params) -> StftConfig:
    """Analysis-time modulation window, overridable for finer frequency
    localization than the model's own (short) training window provides."""
    return StftConfig(
        window_ms=args.window_ms if args.window_ms else params.dyn_stft.window_ms,
        hop_ms=args.hop_ms if args.hop_ms else params.dyn_stft.hop_ms,
        n_fft=args.n_fft if args.n_fft else params.dyn_stft.n_fft,
    )


def cmd_analyze_fratio(args) -> int:
    params, cfg = load_checkpoint(args.ckpt)
    manifest = parse_manifest(args.manifest)
    records = _select_records(manifest, args.split)
    stft = _analysis_stft(args, params)
    groups = {0: [], 1: []}
    for record in records:
        rep = rep_from_file(record.path, cfg)
        agg = layer_aggregate(rep, params.layer_logits)
        groups[record.label].append(modulation_transform(agg, rep.frame_rate_hz, stft))
    fmap = f_ratio_map(groups[1], groups[0])
    save_fratio_map(fmap, args.out)
    feat, bin_idx = np.unravel_index(int(np.argmax(fmap.values)), fmap.values.shape)
    print(
        f"wrote {args.out}; peak value {fmap.values[feat, bin_idx]:.6f} "
        f"at feature {feat}, bin {bin_idx} ({bin_idx * fmap.mod_bin_hz:.4f} Hz)"
    )
    return 0


def cmd_analyze_sparsity(args) -> int:
    params, cfg = load_checkpoint(args.ckpt)
    manifest = parse_manifest(args.manifest)
    scored = _score_records(_select_records(manifest, args.split), params, cfg)
    report = sparsity([emb for _, emb, _ in scored])
    if args.out:
        save_sparsity_report(report, args.out)
    print(f"sparsity {report.mean_pct:.4f}% +- {report.std_pct:.4f}%")
    return 0


def cmd_analyze_layers(args) -> int:
    params, _ = load_checkpoint(args.ckpt)
    weights = layer_importance(params)
    lines = ["layer\tweight"] + [f"{i}\t{w:.6f}" for i, w in enumerate(weights)]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        print(line)
    return 0


def cmd_probe_speaker(args) -> int:
    params, cfg = load_checkpoint(args.ckpt)
    manifest = parse_manifest(args.manifest)
    scored = _score_records(_select_records(manifest, args.split), params, cfg)
    accuracy = speaker_probe(
        [emb for _, emb, _ in scored],
        [record.speaker for _, _, record in scored],
        train_frac=args.train_frac,
        seed=args.seed,
    )
    speakers = {record.speaker for _, _, record in scored}
    print(f"speaker_probe_accuracy={accuracy:.6f} n_speakers={len(speakers)} n={len(scored)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moddx", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic two-class corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--duration-s", type=float, default=10.0)
    p.add_argument("--carrier", choices=("noise", "sawtooth"), default="noise")
    p.add_argument("--mod-freq-hz", type=float, default=0.3)
    p.add_argument("--mod-depth", type=float, default=0.5)
    p.add_argument("--tilt-db-per-octave", type=float, default=3.0)
    p.add_argument("--n-speakers", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model from a manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint path to write")
    p.add_argument("--log", help="training-log path (default: <out>.log.jsonl)")
    p.add_argument(
        "--allow-speaker-overlap",
        action="store_true",
        help="skip the speaker-independence check across splits",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="report AUC and macro F1 per split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=SPLIT_CHOICES, help="default: valid and test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("extract", help="write per-utterance embeddings")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--split", choices=SPLIT_CHOICES, default="all")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("analyze", help="interpretability reports")
    analyze = p.add_subparsers(dest="analysis", required=True)

    q = analyze.add_parser("fratio", help="group-contrast map over modulation bins")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--manifest", required=True)
    q.add_argument("--out", required=True, help="tabular map file to write")
    q.add_argument("--split", choices=SPLIT_CHOICES, default="all")
    q.add_argument("--window-ms", type=float, help="analysis window override")
    q.add_argument("--hop-ms", type=float, help="analysis hop override")
    q.add_argument("--n-fft", type=int, help="analysis transform-size override")
    q.set_defaults(func=cmd_analyze_fratio)

    q = analyze.add_parser("sparsity", help="near-zero share of embedding components")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--manifest", required=True)
    q.add_argument("--out", help="report file to write (summary prints regardless)")
    q.add_argument("--split", choices=SPLIT_CHOICES, default="all")
    q.set_defaults(func=cmd_analyze_sparsity)

    q = analyze.add_parser("layers", help="learned layer mixing weights")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--out", help="optional report file")
    q.set_defaults(func=cmd_analyze_layers)

    p = sub.add_parser("probe", help="information-leakage probes on embeddings")
    probe = p.add_subparsers(dest="probe_target", required=True)

    q = probe.add_parser("speaker", help="speaker-identification probe")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--manifest", required=True)
    q.add_argument("--split", choices=SPLIT_CHOICES, default="all")
    q.add_argument("--train-frac", type=float, default=0.10)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_probe_speaker)

    return parser


def run_command(argv) -> int:
    """Dispatch one command line; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 on --help; we report
        # usage errors as 1 and reserve 2 for data/format errors.
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except (FormatError, TrainingError, UndefinedMetricError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
