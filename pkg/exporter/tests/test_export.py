"""Exporter round-trips against a locally constructed encoder.

The real pretrained checkpoint is large and network-gated, so these tests
build a randomly initialized encoder with the production geometry (12
transformer layers, 768 hidden dimensions, 20 ms hop) and save it locally.
Shapes, framing, format compliance, and determinism are all checked against
that stand-in; only the weights differ from the published model.
"""

import numpy as np
import pytest
import torch
from scipy.io import wavfile

from moddx.encode import load_wrx1
from wrxport.export import ExportJob, export, run_command, write_wrx1


@pytest.fixture(scope="session")
def local_model(tmp_path_factory):
    from transformers import WavLMConfig, WavLMModel

    torch.manual_seed(0)
    config = WavLMConfig()  # defaults: 12 layers, 768 hidden, 20 ms hop
    model = WavLMModel(config)
    path = tmp_path_factory.mktemp("model") / "wavlm-local"
    model.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def clips(tmp_path_factory):
    directory = tmp_path_factory.mktemp("clips")
    rng = np.random.default_rng(0)
    for name, seconds in (("ten", 10.0), ("one", 1.0)):
        samples = 0.1 * rng.standard_normal(round(seconds * 16000)).astype(np.float32)
        wavfile.write(directory / f"{name}.wav", 16000, samples)
    return directory


@pytest.fixture(scope="session")
def exported(local_model, clips, tmp_path_factory):
    out = tmp_path_factory.mktemp("exported")
    report = export(
        ExportJob(
            audio_paths=[clips / "ten.wav", clips / "one.wav"],
            out_dir=out,
            model_id=local_model,
        )
    )
    assert report.ok, report.failed
    return out


def test_ten_second_clip_shape(exported):
    rep = load_wrx1(exported / "ten.wrx1")
    assert rep.n_layers == 12
    assert rep.n_features == 768
    assert abs(rep.n_frames - 499) <= 2
    assert rep.frame_rate_hz == pytest.approx(50.0)


def test_one_second_clip_shape(exported):
    rep = load_wrx1(exported / "one.wrx1")
    assert (rep.n_layers, rep.n_features) == (12, 768)
    assert abs(rep.n_frames - 49) <= 2


def test_export_is_deterministic(local_model, clips, tmp_path):
    job = ExportJob(audio_paths=[clips / "one.wav"], out_dir=tmp_path / "a",
                    model_id=local_model)
    assert export(job).ok
    job2 = ExportJob(audio_paths=[clips / "one.wav"], out_dir=tmp_path / "b",
                     model_id=local_model)
    assert export(job2).ok
    assert (tmp_path / "a" / "one.wrx1").read_bytes() == (
        tmp_path / "b" / "one.wrx1"
    ).read_bytes()


def test_unreadable_file_reported_without_stopping_the_batch(
    local_model, clips, tmp_path
):
    bad = tmp_path / "broken.wav"
    bad.write_bytes(b"not audio at all")
    report = export(
        ExportJob(
            audio_paths=[clips / "one.wav", bad],
            out_dir=tmp_path / "out",
            model_id=local_model,
        )
    )
    assert len(report.written) == 1
    assert len(report.failed) == 1
    assert report.failed[0][0] == bad
    assert not report.ok


def test_write_wrx1_layout_matches_the_primary_reader(tmp_path):
    tensor = np.arange(2 * 3 * 4, dtype=np.float64).reshape(2, 3, 4)
    path = tmp_path / "tiny.wrx1"
    write_wrx1(path, tensor, 50.0)
    rep = load_wrx1(path)
    np.testing.assert_array_equal(rep.values, tensor)
    assert rep.frame_rate_hz == 50.0
    assert path.stat().st_size == 20 + 2 * 3 * 4 * 4


def test_cli_exports_directory_and_prints_manifest_fragment(
    local_model, clips, tmp_path, capsys
):
    code = run_command(
        ["export", "--model", local_model, "--in", str(clips),
         "--out", str(tmp_path / "out")]
    )
    assert code == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2  # one id,path line per clip
    for line in out:
        clip_id, path = line.split(",", 1)
        assert clip_id in ("one", "ten")
        assert path.endswith(f"{clip_id}.wrx1")


def test_cli_reports_failures_with_nonzero_exit(local_model, clips, tmp_path, capsys):
    bad = tmp_path / "junk.wav"
    bad.write_bytes(b"junk")
    code = run_command(
        ["export", "--model", local_model, "--in", str(clips / "one.wav"), str(bad),
         "--out", str(tmp_path / "out")]
    )
    assert code == 1
    captured = capsys.readouterr()
    assert "junk.wav" in captured.err
    assert "one.wrx1" in captured.out


def test_cli_usage_error(capsys):
    assert run_command(["export"]) == 1
    capsys.readouterr()


def test_cli_empty_input_set(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run_command(["export", "--in", str(empty), "--out", str(tmp_path / "o")]) == 1
    assert "no input" in capsys.readouterr().err
