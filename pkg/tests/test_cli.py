from __future__ import annotations

import functools
import json
import re

import pytest

from cotcompress import cli
from cotcompress.gateway import Gateway
from cotcompress.jsonl import load_trajectories, write_jsonl
from cotcompress.repro.appendix import CLIPS_ROUNDS


@pytest.fixture
def demo(tmp_path):
    assert cli.main(["fixtures", str(tmp_path)]) == 0
    return tmp_path


def run(demo, *args):
    return cli.main([args[0], "-c", str(demo / "config.yaml"), *args[1:]])


def test_pipeline_on_worked_examples(demo, capsys):
    assert run(demo, "generate") == 0
    trajs = load_trajectories(demo / "out/trajectories.jsonl")
    assert [len(t.rounds) for t in trajs] == [1, 1]
    assert run(demo, "compress") == 0
    assert run(demo, "build-dataset") == 0
    trajs = {t.question.id: t for t in load_trajectories(demo / "out/trajectories.jsonl")}
    clips = trajs["gsm8k-clips"]
    assert clips.selected.text == CLIPS_ROUNDS[3]
    assert (demo / "out/reports/elasticity.csv").exists()
    assert (demo / "out/reports/per_round.csv").read_text().startswith("question_id,round,token_count,rate,usable\n")
    report = json.loads((demo / "out/reports/dataset_report.json").read_text())
    assert report["n_compressed"] == 2


def test_generate_is_resumable(demo, capsys):
    qfile = demo / "questions.jsonl"
    full = qfile.read_text()
    qfile.write_text(full.splitlines()[0] + "\n")
    assert run(demo, "generate") == 0
    first = (demo / "out/trajectories.jsonl").read_text()
    qfile.write_text(full)
    assert run(demo, "generate") == 0
    assert "wrote 2 trajectories" in capsys.readouterr().out
    assert (demo / "out/trajectories.jsonl").read_text().count("\n") == 2
    assert first.splitlines()[0] in (demo / "out/trajectories.jsonl").read_text()


def test_fixture_miss_lists_hashes(demo, capsys):
    write_jsonl(demo / "questions.jsonl", [{"id": "new", "text": "unseen question"}])
    assert run(demo, "generate") == 1
    err = capsys.readouterr().err
    assert "fixture miss" in err
    assert re.search(r"^  [0-9a-f]{64}$", err, re.M)


def test_max_rounds_override(demo):
    assert run(demo, "generate") == 0
    assert run(demo, "compress", "--set", "compression.max_rounds=1") == 0
    assert all(len(t.rounds) <= 2 for t in load_trajectories(demo / "out/trajectories.jsonl"))


def test_compress_needs_generate(demo, capsys):
    assert run(demo, "compress") == 1
    assert "run generate first" in capsys.readouterr().err


def test_unreachable_endpoint(demo, monkeypatch, capsys):
    monkeypatch.setattr(cli, "Gateway", functools.partial(Gateway, sleep=lambda s: None))
    rc = run(
        demo, "generate", "--set", "backend.mode=live",
        "--set", "endpoints.generator.base_url=http://127.0.0.1:9/v1",
        "--set", "endpoints.generator.timeout_s=0.5",
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert "generate gsm8k-clips" in err and "generate math-quadratic-sum" in err


def test_evaluate_all_correct(demo, capsys):
    log = demo / "log.jsonl"
    write_jsonl(log, [
        {"id": "gsm8k-clips", "text": "so $\\boxed{72}$", "latency_s": 0.5},
        {"id": "math-quadratic-sum", "text": "\\boxed{5}", "latency_s": 1.5},
    ])
    assert run(demo, "evaluate", "--set", f"paths.eval_in={log}") == 0
    summary = json.loads((demo / "out/reports/eval_summary.json").read_text())
    assert summary["accuracy"] == 1.0 and summary["mean_latency_s"] == 1.0


def test_estimate_embedded(tmp_path, capsys):
    rc = cli.main([
        "estimate", "--embedded", "LLaMA-3.1-8B", "--predict", "0.464,4.584,330.37,0.861,0.922",
        "--set", f"paths.reports_dir={tmp_path}",
    ])
    assert rc == 0
    out = json.loads((tmp_path / "estimator_model.json").read_text())
    pred = out["prediction"]
    assert len(pred["mu"]) == 2 and all(s > 0 for s in pred["sigma"])
    assert "precision_matrix" in out["model"]["acc"]
    assert "acc =" in capsys.readouterr().out


def test_estimate_bad_row(tmp_path, capsys):
    rc = cli.main(["estimate", "--embedded", "LLaMA-3.1-8B", "--predict", "1,2", "--set", f"paths.reports_dir={tmp_path}"])
    assert rc == 1 and "estimate" in capsys.readouterr().err


def test_repro(tmp_path, capsys):
    assert cli.main(["repro", "--set", f"paths.reports_dir={tmp_path}"]) == 0
    out = capsys.readouterr().out
    assert "table1 TE MultiRound LLaMA-3.1-8B GSM8K" in out
    assert json.loads((tmp_path / "repro_report.json").read_text())["passed"] is True


def test_missing_config(capsys):
    assert cli.main(["generate"]) == 2
