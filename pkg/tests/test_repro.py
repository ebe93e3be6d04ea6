from __future__ import annotations

import json

import pytest

from cotcompress.core import Question
from cotcompress.repro import harness
from cotcompress.repro.appendix import (
    CLIPS_QUESTION,
    CLIPS_ROUNDS,
    FIXTURES_FILE,
    QUADRATIC_QUESTION,
    QUADRATIC_ROUNDS,
    QUESTIONS_FILE,
    chain_conflicts,
    write_fixture_files,
)
from cotcompress.repro.tables import (
    TABLE_CHECKSUMS,
    TABLE_NAMES,
    _TABLES,
    load_embedded_table,
    table_checksum,
)


def test_every_table_is_pinned():
    assert set(TABLE_CHECKSUMS) == set(TABLE_NAMES)
    for name in TABLE_NAMES:
        assert table_checksum(name) == TABLE_CHECKSUMS[name]


def test_tampering_detected(monkeypatch):
    cols, rows = _TABLES["table9_r2"]
    tampered = (rows[0][:1] + (0.99,) + rows[0][2:],) + tuple(rows[1:])
    monkeypatch.setitem(_TABLES, "table9_r2", (cols, tampered))
    with pytest.raises(RuntimeError, match="checksum"):
        load_embedded_table("table9_r2")


def test_unknown_table():
    with pytest.raises(KeyError):
        load_embedded_table("table42")


def test_table_shapes():
    for name in ("table5_llama", "table6_qwen3b", "table7_qwen7b"):
        assert len(load_embedded_table(name).rows) == 20
    t1 = load_embedded_table("table1_rows")
    assert len([r for r in t1.rows if r["method"] in ("Original", "MultiRound")]) == 12
    last = load_embedded_table("table5_llama").rows[-1]
    assert (last["compressor"], last["rounds"], last["compression_rate"], last["compressed_len"]) == (
        "GPT-4o-mini", 5, 0.464, 88.58
    )


def test_frozen_fixtures_regenerate_byte_identically(tmp_path):
    f, q = tmp_path / "f.jsonl", tmp_path / "q.jsonl"
    write_fixture_files(f, q)
    assert f.read_bytes() == FIXTURES_FILE.read_bytes()
    assert q.read_bytes() == QUESTIONS_FILE.read_bytes()


def test_chain_conflicts():
    assert chain_conflicts(CLIPS_QUESTION, CLIPS_ROUNDS) == []
    # identical rounds 2 and 3 make rounds 4 and 8 unreachable for a prompt-keyed replay
    assert chain_conflicts(QUADRATIC_QUESTION, QUADRATIC_ROUNDS) == [4, 8]


def test_token_efficiency_report():
    rep = harness.verify_token_efficiency()
    gating = [c for c in rep.checks if c.gating]
    assert len(gating) == 12 and all(c.passed for c in gating)
    assert len(rep.extras["table2_exempted"]) == 4
    assert all("MultiRound" in name for name in rep.extras["table2_exempted"])


def test_len_interpretation_is_reported():
    rep = harness.verify_correlations("LLaMA-3.1-8B")
    interp = rep.extras["len_interpretation/LLaMA-3.1-8B"]
    assert interp["better_match"]["table3_corr/Len"] == "compressed_len"
    assert set(interp["candidates"]["table3_corr/Len"]) == {"compressed_len", "original_len"}


def test_cv_report_has_spread_and_joint_fit():
    rep = harness.cv_report("LLaMA-3.1-8B", seed=0)
    spread = rep.extras["cv_spread/LLaMA-3.1-8B"]
    assert len(spread["acc"]["seed_means"]) == harness.CV_SEEDS
    assert spread["acc"]["min"] <= spread["acc"]["mean"] <= spread["acc"]["max"]
    joint = rep.extras["joint_fit/LLaMA-3.1-8B"]
    assert -1 <= joint["rho"] <= 1
    assert set(joint["weights_acc"]) == {
        "compression_rate", "compressed_ppl", "original_len", "original_acc", "compressor_acc"
    }


def test_report_serialization():
    rep = harness.run_all(0)
    d = json.loads(rep.to_json())
    assert d["passed"] is rep.passed
    assert all({"check", "expected", "actual", "tolerance", "pass", "gating"} <= set(c) for c in d["checks"])
    text = rep.to_text()
    assert "gating checks passed" in text.splitlines()[-1]


def test_rebound_round():
    assert harness.rebound_round([10, 8, 9]) == 2
    assert harness.rebound_round([10, 12, 8]) is None  # no decline before the rise
    assert harness.rebound_round([10, 10, 10]) is None


def test_elasticity_curve():
    from tests_helpers import make_traj_from_lengths

    csv_text, flags = harness.elasticity_curve(
        [make_traj_from_lengths("a", [10, 5, 8]), make_traj_from_lengths("b", [20, 10])]
    )
    assert csv_text.splitlines() == [
        "round,n_trajectories,mean_token_count,mean_rate",
        "0,2,15.0,1.0",
        "1,2,7.5,0.5",
        "2,1,8.0,0.8",
    ]
    assert flags == [("a", 2)]
