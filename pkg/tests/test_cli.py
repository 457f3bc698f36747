"""Tests for src/cli/main.py"""

import pytest

from src.bsif import filter_file_name, load_filter_bank
from src.cli import build_parser, main
from src.pipeline import load_manifest, parse_config
from src.pipeline.store import read_eval_report
from src.svm import ATTACK

EXTRACT_CONFIG = """
[modes]
extract_features = on

[paths]
image_dir = images
filter_dir = filters
feature_dir = features
training_list = images/manifest.csv

[bsif]
bit_depth = 5
scales = 3
"""


@pytest.fixture
def prepared(tmp_path):
    assert main(["gen-synthetic", "--out", str(tmp_path / "images"), "--count", "3",
                 "--width", "64", "--height", "64", "--seed", "1"]) == 0
    assert main(["gen-filters", "--out", str(tmp_path / "filters"), "--bit-depth", "5", "--sizes", "3"]) == 0
    config = tmp_path / "tcl.ini"
    config.write_text(EXTRACT_CONFIG)
    return config


def test_gen_synthetic_summary(tmp_path, capsys):
    code = main(["gen-synthetic", "--out", str(tmp_path), "--count", "2", "--width", "64", "--height", "64",
                 "--seed", "1"])
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert code == 0
    assert line.startswith("stage=gen-synthetic images=4 attack=2 bonafide=2 seed=1")
    assert (tmp_path / "manifest.csv").is_file()


def test_gen_filters(tmp_path, capsys):
    assert main(["gen-filters", "--out", str(tmp_path), "--bit-depth", "6", "--sizes", "3,5", "--seed", "2"]) == 0
    assert "banks=2 n=6 seed=2" in capsys.readouterr().out
    bank = load_filter_bank(tmp_path / filter_file_name(5, 6))
    assert (bank.s, bank.n) == (5, 6)


def test_extract(prepared, capsys):
    capsys.readouterr()
    assert main(["extract", "--config", str(prepared)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[-1].startswith("stage=extract images=6 extracted=6 failed=0 files=2")
    assert (prepared.parent / "features" / "bsif_3x3_5bit_half.csv").is_file()


def test_show_config_round_trip(prepared, tmp_path, capsys):
    capsys.readouterr()
    assert main(["show-config", "--config", str(prepared), "--set", "svm.folds=4", "--seed", "9"]) == 0
    rendered = tmp_path / "effective.ini"
    rendered.write_text(capsys.readouterr().out)
    original = parse_config(prepared, overrides=["svm.folds=4"], seed=9)
    assert parse_config(rendered) == original


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["extract"],
    ["gen-filters", "--out", "x", "--sizes", "3,a"],
])
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_missing_config_file(tmp_path):
    assert main(["train", "--config", str(tmp_path / "absent.ini")]) == 1


def test_invalid_override(prepared):
    assert main(["extract", "--config", str(prepared), "--set", "svm.folds=1"]) == 1
    assert main(["extract", "--config", str(prepared), "--set", "no_such_key=1"]) == 1


def test_failed_extraction_exit_code(prepared, capsys):
    manifest = prepared.parent / "images" / "manifest.csv"
    manifest.write_text(manifest.read_text() + "missing.pgm,attack,,\n")
    assert main(["extract", "--config", str(prepared)]) == 2
    assert "failed missing.pgm" in capsys.readouterr().out


def test_help_lists_config_keys():
    assert "svm.c_values" in build_parser().format_help()


def test_split_manifest(tmp_path, capsys):
    assert main(["gen-synthetic", "--out", str(tmp_path), "--count", "6", "--width", "64", "--height", "64"]) == 0
    capsys.readouterr()
    assert main(["split-manifest", str(tmp_path / "manifest.csv"), "--seed", "4"]) == 0
    assert capsys.readouterr().out.strip() == "stage=split-manifest images=12 train=8 test=4 seed=4"
    train, test = load_manifest(tmp_path / "train.csv"), load_manifest(tmp_path / "test.csv")
    assert not set(train.filenames) & set(test.filenames)
    assert sorted(train.filenames + test.filenames) == sorted(load_manifest(tmp_path / "manifest.csv").filenames)
    assert list(test.labels).count(ATTACK) == 2


DESK_CONFIG = """
[modes]
extract_features = on
train_models = on
test_images = on

[paths]
image_dir = images
filter_dir = filters
feature_dir = features
model_dir = models
output_dir = reports
training_list = images/train.csv
testing_list = images/test.csv

[bsif]
bit_depth = 5
scales = 3, 5

[svm]
c_values = 2^-1, 2^3
gamma_values = 2^4, 2^7
folds = 3

[ensemble]
size = 3

[runtime]
workers = 2
"""


def test_desk_run_on_disjoint_lists(tmp_path, capsys):
    images = tmp_path / "images"
    assert main(["gen-synthetic", "--out", str(images), "--count", "9", "--groups", "3",
                 "--width", "64", "--height", "64"]) == 0
    assert main(["split-manifest", str(images / "manifest.csv")]) == 0
    assert main(["gen-filters", "--out", str(tmp_path / "filters"), "--bit-depth", "5", "--sizes", "3,5"]) == 0
    (tmp_path / "desk.ini").write_text(DESK_CONFIG)
    capsys.readouterr()

    assert main(["run", "--config", str(tmp_path / "desk.ini")]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("stage=")]
    assert [l.split()[0] for l in lines] == ["stage=extract", "stage=train", "stage=test"]

    train, test = load_manifest(images / "train.csv"), load_manifest(images / "test.csv")
    assert (len(train), len(test)) == (12, 6)
    assert not set(train.filenames) & set(test.filenames)
    report = read_eval_report(tmp_path / "reports" / "ensemble_report.csv")
    assert sum(int(report[k]) for k in ("tp", "fn", "fp", "tn")) == 6
    assert len(list((tmp_path / "models").glob("svm_*.model"))) == 4
