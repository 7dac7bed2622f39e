import json

import pytest

from normbench.cli import main
from normbench.records import digest_file, read_jsonl, write_jsonl

from conftest import REPO

RESPONSES = str(REPO / "fixtures" / "responses")


def _manifest(path):
    return json.loads(path.with_name(path.name + ".manifest.json").read_text())


def test_generate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert main(["generate", "--seed", "7", "-o", str(a)]) == 0
    assert main(["generate", "--seed", "7", "-o", str(b)]) == 0
    ma, mb = _manifest(a), _manifest(b)
    assert ma["outputs"][str(a)] == mb["outputs"][str(b)] == digest_file(a) == digest_file(b)
    assert ma["config"]["seed"] == 7 and ma["tool_version"]


def test_generate_rejects_bad_config(tmp_path, capsys):
    assert main(["generate", "--noise-rate", "2", "-o", str(tmp_path / "c.jsonl")]) == 1
    assert "noise" in capsys.readouterr().err


def test_unknown_subcommand_and_flag():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["generate", "--bogus"])
    assert info.value.code == 1


def test_oracle_and_stats(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    main(["generate", "--stories-per-task-count", "2", "-o", str(corpus)])
    assert main(["oracle", str(corpus), "-o", str(tmp_path / "j.jsonl")]) == 0
    records = list(read_jsonl(tmp_path / "j.jsonl"))
    assert len(records) == 80 and {r["schema_version"] for r in records} == {1}
    assert _manifest(tmp_path / "j.jsonl")["inputs"][str(corpus)] == digest_file(corpus)
    assert main(["stats", str(corpus), "-o", str(tmp_path / "s.json")]) == 0
    stats = json.loads((tmp_path / "s.json").read_text())
    assert stats["total_events"] == stats["unique_events"] + sum(
        v for v in stats["frequency"].values() if v > 1)


def test_score_mismatched_corpora(tmp_path, capsys):
    small, big = tmp_path / "small.jsonl", tmp_path / "big.jsonl"
    main(["generate", "--seed", "1", "--stories-per-task-count", "1", "-o", str(small)])
    main(["generate", "--seed", "1", "--stories-per-task-count", "2", "-o", str(big)])
    main(["oracle", str(small), "-o", str(tmp_path / "js.jsonl")])
    main(["oracle", str(big), "-o", str(tmp_path / "jb.jsonl")])
    capsys.readouterr()
    status = main(["score", "--ground-truth", str(tmp_path / "jb.jsonl"),
                   "--model-records", str(tmp_path / "js.jsonl"), "--output-dir", str(tmp_path / "r")])
    assert status == 1
    assert "without model records" in capsys.readouterr().err


def test_run_replay_missing_responses_flag(tmp_path):
    corpus = tmp_path / "c.jsonl"
    main(["generate", "--stories-per-task-count", "1", "-o", str(corpus)])
    assert main(["run", str(corpus), "--cache", str(tmp_path / "cache")]) == 1


def test_run_all_failed_is_transport_error(tmp_path):
    corpus = tmp_path / "c.jsonl"
    main(["generate", "--stories-per-task-count", "1", "-o", str(corpus)])
    (tmp_path / "empty").mkdir()
    status = main(["run", str(corpus), "--responses", str(tmp_path / "empty"),
                   "--cache", str(tmp_path / "cache"), "-o", str(tmp_path / "v.jsonl")])
    assert status == 2


def test_live_run_without_credential(tmp_path, monkeypatch):
    monkeypatch.delenv("NB_ABSENT_KEY", raising=False)
    corpus = tmp_path / "c.jsonl"
    main(["generate", "--stories-per-task-count", "1", "-o", str(corpus)])
    status = main(["run", str(corpus), "--transport", "live", "--api-key-env", "NB_ABSENT_KEY",
                   "--cache", str(tmp_path / "cache")])
    assert status == 1


def test_score_imported_annotations(tmp_path):
    truth = [{"story_id": "a", "norm_id": n, "binary": b} for n in range(1, 11) for b in ("yes", "yes", "no")]
    model = [{"story_id": "a", "norm_id": n, "binary": "yes", "model": "m"} for n in range(1, 11)]
    write_jsonl(tmp_path / "t.jsonl", truth)
    write_jsonl(tmp_path / "m.jsonl", model)
    assert main(["score", "--ground-truth", str(tmp_path / "t.jsonl"), "--model-records",
                 str(tmp_path / "m.jsonl"), "--output-dir", str(tmp_path / "r"), "--format", "csv"]) == 0
    assert (tmp_path / "r" / "accuracy_per_norm.csv").read_text().splitlines()[1].endswith(",100.0")


def test_pipeline_offline_and_warm_cache(tmp_path):
    out = tmp_path / "out"
    argv = ["pipeline", "--seed", "7", "--transport", "replay", "--responses", RESPONSES, "--out", str(out)]
    assert main(argv) == 0
    for name in ("corpus.jsonl", "judgements.jsonl", "verdicts.jsonl", "stats.json"):
        assert (out / name).exists() and _manifest(out / name)["outputs"]
    assert len(list(read_jsonl(out / "verdicts.jsonl"))) == 800
    run = _manifest(out / "verdicts.jsonl")
    assert run["transport_calls"] == 80 and run["summary"]["failed_stories"] == []
    report = (out / "report" / "report.md").read_bytes()
    score_manifest = json.loads((out / "report" / "score.manifest.json").read_text())
    assert set(score_manifest["outputs"]) == {str(out / "report" / "report.md"), str(out / "report" / "confusion.csv")}

    assert main(argv) == 0
    assert _manifest(out / "verdicts.jsonl")["transport_calls"] == 0
    assert (out / "report" / "report.md").read_bytes() == report
