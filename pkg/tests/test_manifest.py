"""Manifest CSV parsing, validation, and round-trip behavior."""

from pathlib import Path

import pytest

from moddx.errors import FormatError
from moddx.manifest import (
    DatasetManifest,
    ManifestRecord,
    parse_manifest,
    write_manifest,
)

VALID = """id,path,label,speaker,split
a,one.wav,0,spkA,train
b,two.wav,1,spkB,valid
c,sub/three.wav,1,spkC,test
"""


def write(tmp_path, text, name="manifest.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_three_line_file_parses_three_records(tmp_path):
    manifest = parse_manifest(write(tmp_path, VALID))
    assert len(manifest.records) == 3
    assert [r.id for r in manifest.records] == ["a", "b", "c"]
    assert [r.label for r in manifest.records] == [0, 1, 1]
    assert [r.split for r in manifest.records] == ["train", "valid", "test"]


def test_relative_paths_resolve_against_manifest_directory(tmp_path):
    manifest = parse_manifest(write(tmp_path, VALID))
    assert manifest.records[0].path == tmp_path / "one.wav"
    assert manifest.records[2].path == tmp_path / "sub" / "three.wav"


def test_absolute_paths_kept_verbatim(tmp_path):
    text = f"id,path,label,speaker,split\na,{tmp_path / 'x.wav'},0,s,train\n"
    manifest = parse_manifest(write(tmp_path, text))
    assert manifest.records[0].path == tmp_path / "x.wav"


def test_non_binary_label_cites_its_line(tmp_path):
    text = VALID + "d,four.wav,2,spkD,train\n"
    with pytest.raises(FormatError, match=r"line 5.*label"):
        parse_manifest(write(tmp_path, text))


def test_unknown_split_cites_its_line(tmp_path):
    text = VALID.replace("b,two.wav,1,spkB,valid", "b,two.wav,1,spkB,dev")
    with pytest.raises(FormatError, match=r"line 3.*split"):
        parse_manifest(write(tmp_path, text))


def test_duplicate_id_cites_both_lines(tmp_path):
    text = VALID + "a,five.wav,0,spkE,train\n"
    with pytest.raises(FormatError, match=r"line 5.*duplicate.*first on line 2"):
        parse_manifest(write(tmp_path, text))


def test_wrong_column_count_rejected(tmp_path):
    text = "id,path,label,speaker,split\na,one.wav,0,train\n"
    with pytest.raises(FormatError, match=r"line 2.*fields"):
        parse_manifest(write(tmp_path, text))


def test_bad_header_rejected(tmp_path):
    text = "id,file,label,speaker,split\na,one.wav,0,s,train\n"
    with pytest.raises(FormatError, match="header"):
        parse_manifest(write(tmp_path, text))


def test_empty_file_rejected(tmp_path):
    with pytest.raises(FormatError, match="empty"):
        parse_manifest(write(tmp_path, ""))


def test_blank_lines_are_skipped(tmp_path):
    manifest = parse_manifest(write(tmp_path, VALID + "\n\n"))
    assert len(manifest.records) == 3


def test_speaker_overlap_flag_names_the_speaker(tmp_path):
    text = """id,path,label,speaker,split
a,one.wav,0,spkX,train
b,two.wav,1,spkY,valid
c,three.wav,1,spkX,test
"""
    path = write(tmp_path, text)
    # Lenient mode parses fine and just reports the overlap.
    manifest = parse_manifest(path)
    assert manifest.overlapping_speakers() == ["spkX"]
    with pytest.raises(FormatError, match="spkX"):
        parse_manifest(path, require_speaker_independent=True)


def test_speaker_independent_corpus_passes_the_strict_check(tmp_path):
    manifest = parse_manifest(write(tmp_path, VALID), require_speaker_independent=True)
    assert manifest.overlapping_speakers() == []


def test_split_selector(tmp_path):
    manifest = parse_manifest(write(tmp_path, VALID))
    assert [r.id for r in manifest.split("train")] == ["a"]
    assert [r.id for r in manifest.split("test")] == ["c"]
    with pytest.raises(ValueError, match="unknown split"):
        manifest.split("dev")


def test_write_then_parse_round_trip(tmp_path):
    original = parse_manifest(write(tmp_path, VALID))
    out = tmp_path / "copy"
    out.mkdir()
    write_manifest(original, out / "manifest.csv")
    # Paths outside the new manifest's directory come back absolute, so the
    # records still point at the same files.
    reloaded = parse_manifest(out / "manifest.csv")
    assert [r.id for r in reloaded.records] == [r.id for r in original.records]
    assert [Path(r.path).resolve() for r in reloaded.records] == [
        Path(r.path).resolve() for r in original.records
    ]


def test_write_relativizes_paths_inside_the_manifest_directory(tmp_path):
    record = ManifestRecord("a", tmp_path / "deep" / "one.wav", 0, "s", "train")
    write_manifest(DatasetManifest((record,)), tmp_path / "manifest.csv")
    text = (tmp_path / "manifest.csv").read_text(encoding="utf-8")
    assert "deep/one.wav" in text.replace("\\", "/")
    reloaded = parse_manifest(tmp_path / "manifest.csv")
    assert reloaded.records[0].path.resolve() == (tmp_path / "deep" / "one.wav").resolve()
