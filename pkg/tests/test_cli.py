from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from jobsignals.cli import main

DATA_DIR = Path(__file__).parent / "data"


def _write_jsonl(path: Path, records: list[dict]) -> None:
    path.write_text("".join(json.dumps(r) + "\n" for r in records))


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line]


@pytest.fixture
def raw_file(tmp_path: Path) -> Path:
    records = [
        {"id": "a", "body": "<p>Hiring a nurse for our on-site clinic team now</p>",
         "metadata": {"remote_type": "In Person", "salary": "30"}},
        {"id": "b", "body": "Hiring a nurse for our on-site clinic team now",
         "metadata": {"remote_type": "In Person", "salary": "30"}},
        {"id": "c", "body": "der die das und nicht für arbeit stelle gut",
         "metadata": {"remote_type": "Remote", "salary": "20"}},
        {"id": "d", "body": "Remote analyst role with a great salary and the best team",
         "metadata": {"remote_type": "Remote", "salary": "90k"}},
        {"id": "e", "body": "All nulls here so this gets dropped for having no source signals",
         "metadata": {}},
    ]
    path = tmp_path / "raw.jsonl"
    _write_jsonl(path, records)
    return path


def test_clean_command(tmp_path, raw_file, capsys):
    out = tmp_path / "clean.jsonl"
    assert main(["clean", str(raw_file), str(out)]) == 0
    records = _read_jsonl(out)
    # a kept (html), b dropped as duplicate of a, c non-english, d kept, e null-heavy
    assert [r["id"] for r in records] == ["a", "d"]
    assert records[0]["provenance"]["had_html"] is True
    assert "<" not in records[0]["text"]
    printed = capsys.readouterr().out
    assert "kept=2" in printed
    assert "non_english=1" in printed
    assert "duplicate=1" in printed
    assert "null_heavy=1" in printed


def test_clean_missing_input_exit_3(tmp_path, capsys):
    assert main(["clean", str(tmp_path / "nope.jsonl"), str(tmp_path / "out.jsonl")]) == 3
    assert "error" in capsys.readouterr().err


def test_sample_command_deterministic(tmp_path, capsys):
    records = [
        {"id": f"{s}-{i}", "body": "x", "metadata": {"onet_code": s}}
        for s in ("A", "B") for i in range(10)
    ]
    path = tmp_path / "raw.jsonl"
    _write_jsonl(path, records)

    assert main(["sample", str(path), "--n", "6", "--seed", "5"]) == 0
    first = capsys.readouterr().out
    assert main(["sample", str(path), "--n", "6", "--seed", "5"]) == 0
    second = capsys.readouterr().out
    assert first == second
    ids = [json.loads(line)["id"] for line in first.splitlines()]
    assert len(ids) == 6
    assert sum(1 for i in ids if i.startswith("A")) == 3


def test_sample_too_large_exit_2(tmp_path, capsys):
    path = tmp_path / "raw.jsonl"
    _write_jsonl(path, [{"id": "a", "body": "x", "metadata": {"onet_code": "A"}}])
    assert main(["sample", str(path), "--n", "5"]) == 2


def _annotate_config(tmp_path: Path, **overrides) -> Path:
    config = {
        "paths": {"checkpoint": str(tmp_path / "checkpoint")},
        "chunking": {"max_tokens": 64, "overlap": 8, "k": 4},
        "backends": {v: {"kind": "rule"} for v in
                     ("remote_type", "remuneration", "experience", "education")},
        "concurrency": {"max_inflight": 4, "retries": 1, "backoff_ms": 0},
    }
    config.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


@pytest.fixture
def clean_file(tmp_path: Path) -> Path:
    records = []
    for i in range(6):
        records.append({
            "id": f"p{i}",
            "text": f"Remote role number {i}. Pays a salary. Bachelor's degree required.",
            "provenance": {"had_html": False, "original_length": 70, "language_score": 0.5},
        })
    path = tmp_path / "clean.jsonl"
    _write_jsonl(path, records)
    return path


def test_annotate_command_with_rule_backends(tmp_path, clean_file, capsys):
    config = _annotate_config(tmp_path)
    out = tmp_path / "annotations.jsonl"
    assert main(["annotate", str(clean_file), "--config", str(config),
                 "--out", str(out)]) == 0
    records = _read_jsonl(out)
    assert [r["posting_id"] for r in records] == [f"p{i}" for i in range(6)]
    assert all(r["signals"]["remote_type"] == "remote" for r in records)
    assert all(set(r["status"].values()) == {"ok"} for r in records)
    assert (tmp_path / "checkpoint").read_text().strip() == "p5"


def test_annotate_resume_appends(tmp_path, clean_file):
    config = _annotate_config(tmp_path)
    out = tmp_path / "annotations.jsonl"
    (tmp_path / "checkpoint").write_text("p2\n")
    out.write_text("PRIOR\nPRIOR\nPRIOR\n")
    assert main(["annotate", str(clean_file), "--config", str(config),
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[:3] == ["PRIOR", "PRIOR", "PRIOR"]
    resumed = [json.loads(line)["posting_id"] for line in lines[3:]]
    assert resumed == ["p3", "p4", "p5"]


def test_annotate_invalid_config_exit_2(tmp_path, clean_file, capsys):
    config = _annotate_config(tmp_path, chunking={"max_tokens": 8, "overlap": 99, "k": 1})
    out = tmp_path / "annotations.jsonl"
    assert main(["annotate", str(clean_file), "--config", str(config),
                 "--out", str(out)]) == 2
    assert not out.exists()  # config validation precedes any input read


def test_annotate_mock_backend_from_config(tmp_path, clean_file):
    backends = {v: {"kind": "rule"} for v in
                ("remuneration", "experience", "education")}
    backends["remote_type"] = {"kind": "mock", "response": '{"remote_type": "hybrid"}'}
    config = _annotate_config(tmp_path, backends=backends)
    out = tmp_path / "annotations.jsonl"
    assert main(["annotate", str(clean_file), "--config", str(config),
                 "--out", str(out)]) == 0
    assert all(r["signals"]["remote_type"] == "hybrid" for r in _read_jsonl(out))


def test_evaluate_command(tmp_path, capsys):
    signals = {
        "remote_type": "remote",
        "remuneration": {"is_salaried": True, "is_hourly": False,
                         "has_bonus": False, "has_commission": False},
        "experience": {"experience_required": True, "experience_minimum_years": 2.0},
        "education": {"requirement_level": "required", "education_level": "bachelor"},
    }
    pairs = [{"id": str(i), "truth": signals, "predicted": signals} for i in range(4)]
    path = tmp_path / "pairs.jsonl"
    _write_jsonl(path, pairs)
    json_out = tmp_path / "report.json"
    assert main(["evaluate", str(path), "--json-out", str(json_out)]) == 0
    printed = capsys.readouterr().out
    assert "1.00" in printed
    assert "Accuracy per sub-variable" in printed
    report = json.loads(json_out.read_text())
    assert report["per_variable"]["remote_type"]["weighted"]["f1"] == 1.0
    assert report["sub_variable"]["remote_type"] == 100.0


def test_export_train_command(tmp_path, clean_file, capsys):
    config = _annotate_config(tmp_path)
    annotations = tmp_path / "annotations.jsonl"
    main(["annotate", str(clean_file), "--config", str(config), "--out", str(annotations)])
    out = tmp_path / "train.jsonl"
    assert main(["export-train", str(annotations), str(clean_file),
                 "--variable", "remote_type", "--out", str(out)]) == 0
    examples = _read_jsonl(out)
    assert len(examples) == 6
    assert examples[0]["label"] == '{"remote_type":"remote"}'
    assert "Remote role number 0" in examples[0]["text"]


def test_stats_command(tmp_path, capsys):
    records = [{"id": "a", "text": "x" * 100}, {"id": "b", "text": "y" * 300}]
    path = tmp_path / "clean.jsonl"
    _write_jsonl(path, records)
    assert main(["stats", str(path)]) == 0
    printed = capsys.readouterr().out
    assert "count=2" in printed
    assert "mean_chars=200.0" in printed


def test_smoke_corpus_through_cli(tmp_path, capsys):
    cleaned = tmp_path / "clean.jsonl"
    assert main(["clean", str(DATA_DIR / "smoke_postings.jsonl"), str(cleaned)]) == 0
    config = _annotate_config(tmp_path)
    out = tmp_path / "annotations.jsonl"
    assert main(["annotate", str(cleaned), "--config", str(config),
                 "--out", str(out)]) == 0
    got = {r["posting_id"]: r["signals"] for r in _read_jsonl(out)}
    expected = {r["id"]: r["signals"]
                for r in _read_jsonl(DATA_DIR / "smoke_expected.jsonl")}
    assert got == expected
