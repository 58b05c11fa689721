"""End-to-end harness tests: verbs, files, determinism, exit codes."""

import csv
import json

import numpy as np
import pytest

from cmaug import load_corpus
from cmaug.cli import (
    DEFAULT_SPEC,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    load_spec,
    main,
)

SMALL_SPEC = {
    "corpus": {
        "generate": {
            "verb_classes": 4,
            "noun_classes": 6,
            "synonyms_per_class": 2,
            "train_samples": 60,
            "test_samples": 20,
            "feature_dim": 16,
            "noise_scale": 0.1,
            "seed": 5,
        }
    },
    "train": {"epochs": 2, "batch_size": 16, "embed_dim": 8, "text_dim": 12},
    "augment": {"chance": 0.5},
    "sweep": {"chi": [0.0, 1.0], "variants": ["none", "joint"]},
    "seeds": [0],
}


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SMALL_SPEC))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_print_config_is_full_spec(capsys):
    assert main(["print-config"]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed == DEFAULT_SPEC
    assert printed["sweep"]["chi"] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_unknown_spec_field_is_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"trian": {}}))
    assert main(["train", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "trian" in capsys.readouterr().err


def test_gen_writes_loadable_split(tmp_path, spec_file):
    out = tmp_path / "corpus"
    assert main(["gen", "--config", str(spec_file), "--out", str(out)]) == EXIT_OK
    train_corpus = load_corpus(out / "train")
    test_corpus = load_corpus(out / "test")
    assert len(train_corpus) == 60 and len(test_corpus) == 20
    assert train_corpus.split == "train" and test_corpus.split == "test"


def test_gen_deterministic_per_seed(tmp_path, spec_file):
    for name in ("a", "b"):
        assert main(["gen", "--config", str(spec_file), "--out", str(tmp_path / name)]) == EXIT_OK
    for rel in ("train/metadata.jsonl", "train/features.bin", "test/classes.json"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    out_c = tmp_path / "c"
    assert main(["gen", "--config", str(spec_file), "--out", str(out_c), "--seed", "9"]) == EXIT_OK
    assert (out_c / "train/features.bin").read_bytes() != (tmp_path / "a" / "train/features.bin").read_bytes()


def test_train_writes_checkpoints_and_log(tmp_path, spec_file):
    out = tmp_path / "run"
    code = main(["train", "--config", str(spec_file), "--out", str(out), "--seed", "0", "--seed", "1"])
    assert code == EXIT_OK
    assert (out / "checkpoint-seed0.ckpt").exists()
    assert (out / "checkpoint-seed1.ckpt").exists()
    rows = read_rows(out / "train-log.csv")
    assert {r["seed"] for r in rows} == {"0", "1"}
    assert [r["epoch"] for r in rows if r["seed"] == "0"] == ["0", "1"]
    assert all(float(r["loss"]) >= 0 for r in rows)


def test_resume_refused(tmp_path, spec_file, capsys):
    code = main(["train", "--config", str(spec_file), "--out", str(tmp_path / "o"),
                 "--resume", "x.ckpt"])
    assert code == EXIT_CONFIG
    assert "not supported" in capsys.readouterr().err


def test_eval_report_and_summary(tmp_path, spec_file, capsys):
    out = tmp_path / "run"
    main(["gen", "--config", str(spec_file), "--out", str(tmp_path / "corpus")])
    main(["train", "--config", str(spec_file), "--out", str(out)])
    code = main([
        "eval",
        "--checkpoint", str(out / "checkpoint-seed0.ckpt"),
        "--corpus", str(tmp_path / "corpus" / "test"),
        "--out", str(out),
    ])
    assert code == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert set(report) == {"t2v", "v2t", "t-v", "Rsum"}
    for direction in ("t2v", "v2t", "t-v"):
        assert set(report[direction]) == {"mAP", "nDCG", "R@1", "R@5", "R@10"}
    summary = capsys.readouterr().out
    assert "t2v" in summary and "Rsum" in summary

    # Re-evaluating produces byte-identical JSON.
    first = (out / "report.json").read_bytes()
    main([
        "eval",
        "--checkpoint", str(out / "checkpoint-seed0.ckpt"),
        "--corpus", str(tmp_path / "corpus" / "test"),
        "--out", str(out),
    ])
    assert (out / "report.json").read_bytes() == first


def test_eval_missing_corpus_is_io_error(tmp_path, spec_file, capsys):
    out = tmp_path / "run"
    main(["train", "--config", str(spec_file), "--out", str(out)])
    code = main([
        "eval",
        "--checkpoint", str(out / "checkpoint-seed0.ckpt"),
        "--corpus", str(tmp_path / "nowhere"),
    ])
    assert code == EXIT_IO


def test_sweep_grid_and_chi_zero_rows(tmp_path, spec_file):
    out = tmp_path / "sweep"
    code = main(["sweep", "--config", str(spec_file), "--out", str(out),
                 "--chi", "0,1.0", "--variant", "none,joint,video-fine"])
    assert code == EXIT_OK
    rows = read_rows(out / "sweep.csv")
    assert len(rows) == 2 * 3 * 1  # chi x variants x seeds
    metric_cols = [c for c in rows[0] if c not in ("chi", "seed", "variant")]

    # With chance 0 every augmentation variant trains the same model.
    zero_rows = {r["variant"]: r for r in rows if float(r["chi"]) == 0.0}
    for col in metric_cols:
        assert zero_rows["none"][col] == zero_rows["joint"][col] == zero_rows["video-fine"][col]

    # Variant "none" ignores chi entirely.
    none_rows = [r for r in rows if r["variant"] == "none"]
    assert len(none_rows) == 2
    for col in metric_cols:
        assert none_rows[0][col] == none_rows[1][col]


def test_sweep_matches_train_plus_eval_at_chi_zero(tmp_path, spec_file):
    out = tmp_path / "sweep"
    main(["sweep", "--config", str(spec_file), "--out", str(out), "--chi", "0", "--variant", "none"])
    row = read_rows(out / "sweep.csv")[0]

    spec = json.loads(spec_file.read_text())
    spec["augment"] = {"chance": 0.0}
    no_aug = tmp_path / "noaug.json"
    no_aug.write_text(json.dumps(spec))
    main(["gen", "--config", str(no_aug), "--out", str(tmp_path / "corpus")])
    main(["train", "--config", str(no_aug), "--out", str(tmp_path / "run")])
    main([
        "eval",
        "--checkpoint", str(tmp_path / "run" / "checkpoint-seed0.ckpt"),
        "--corpus", str(tmp_path / "corpus" / "test"),
        "--out", str(tmp_path / "run"),
    ])
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert float(row["ndcg_avg"]) == pytest.approx(report["t-v"]["nDCG"], abs=1e-9)
    assert float(row["map_t2v"]) == pytest.approx(report["t2v"]["mAP"], abs=1e-9)
    assert float(row["rsum"]) == pytest.approx(report["Rsum"], abs=1e-9)


def test_sweep_workers_do_not_change_output(tmp_path, spec_file):
    args = ["sweep", "--config", str(spec_file), "--chi", "0,1.0", "--variant", "none,joint"]
    main(args + ["--out", str(tmp_path / "w1"), "--workers", "1"])
    main(args + ["--out", str(tmp_path / "w2"), "--workers", "2"])
    assert (tmp_path / "w1" / "sweep.csv").read_bytes() == (tmp_path / "w2" / "sweep.csv").read_bytes()


def test_sweep_rerun_is_bit_identical(tmp_path, spec_file):
    args = ["sweep", "--config", str(spec_file), "--chi", "0.5", "--variant", "joint"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_bad_variant_is_config_error(tmp_path, spec_file, capsys):
    code = main(["sweep", "--config", str(spec_file), "--out", str(tmp_path / "s"),
                 "--variant", "video-blurry"])
    assert code == EXIT_CONFIG
    assert "video-blurry" in capsys.readouterr().err


def test_bad_chi_is_config_error(tmp_path, spec_file):
    code = main(["sweep", "--config", str(spec_file), "--out", str(tmp_path / "s"), "--chi", "1.5"])
    assert code == EXIT_CONFIG


def test_augment_dump_records(tmp_path, spec_file):
    out = tmp_path / "dump"
    spec = json.loads(spec_file.read_text())
    spec["augment"]["chance"] = 1.0
    full = tmp_path / "full.json"
    full.write_text(json.dumps(spec))
    code = main(["augment-dump", "--config", str(full), "--out", str(out), "--count", "200"])
    assert code == EXIT_OK
    lines = (out / "augment-dump.jsonl").read_text().splitlines()
    assert len(lines) == 200
    records = [json.loads(line) for line in lines]
    assert all(r["augmented"] for r in records)
    for r in records:
        assert r["kind"] == "mix"
        assert r["branch"] in ("verb", "noun")
        # Either a partner was mixed in or the empty-candidate reason shows.
        assert (r["video_partner"] is not None) or (r["video_weight"] is None)


def test_augment_dump_deterministic(tmp_path, spec_file):
    for name in ("a", "b"):
        main(["augment-dump", "--config", str(spec_file), "--out", str(tmp_path / name),
              "--count", "100"])
    assert (tmp_path / "a" / "augment-dump.jsonl").read_bytes() == (
        tmp_path / "b" / "augment-dump.jsonl"
    ).read_bytes()


def test_load_spec_defaults_when_no_file():
    assert load_spec(None) == DEFAULT_SPEC
