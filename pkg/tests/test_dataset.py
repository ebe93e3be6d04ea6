from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cotcompress.core import STOP_MAX_ROUNDS, CompressionTrajectory, Question, ReasoningTrace
from cotcompress.dataset import DatasetConfig, build_dataset, parse_training_record, render_training_record
from cotcompress.jsonl import write_jsonl


def make_traj(i, selected=1):
    rounds = (ReasoningTrace(f"long chain {i} \\boxed{{{i}}}", 10), ReasoningTrace(f"short {i} \\boxed{{{i}}}", 5))
    return CompressionTrajectory(Question(f"q{i:02d}", f"question {i}?"), rounds, (1.0, 0.5), selected, STOP_MAX_ROUNDS)


def test_render_examples():
    assert render_training_record("2+2?", "4", True) == "2+2?<|eot|><compress><|eot|>4"
    assert render_training_record("2+2?", "4", False) == "2+2?<|eot|>4"
    assert render_training_record("q", "a", True, DatasetConfig(eos_literal="§")) == "q§<compress>§a"
    with pytest.raises(ValueError):
        render_training_record("", "a", True)


@given(
    st.text(min_size=1).filter(lambda s: "<|eot|>" not in s),
    st.text(min_size=1),
    st.booleans(),
)
def test_parse_inverts_render(q, target, compressed):
    r = parse_training_record(render_training_record(q, target, compressed))
    assert (r.question_text, r.target_text, r.compressed) == (q, target, compressed)


def test_ten_trajectories_fraction_point_two():
    trajs = [make_traj(i) for i in range(10)]
    recs, rep = build_dataset(trajs, DatasetConfig(original_fraction=0.2, seed=7))
    assert len(recs) == 12
    assert (rep.n_compressed, rep.n_original) == (10, 2)
    again, _ = build_dataset(list(reversed(trajs)), DatasetConfig(original_fraction=0.2, seed=7))
    assert [r.to_dict() for r in again] == [r.to_dict() for r in recs]
    for t, r in zip(trajs, [r for r in recs if r.compressed]):
        assert r.target_text == t.selected.text
    for r in recs:
        if not r.compressed:
            assert "<compress>" not in r.rendered and r.target_text.startswith("long chain")


@pytest.mark.parametrize("fraction,n", [(0.0, 5), (1.0, 10), (0.5, 8), (0.7, 9)])
def test_fraction_boundaries(fraction, n):
    recs, _ = build_dataset([make_traj(i) for i in range(5)], DatasetConfig(original_fraction=fraction))
    assert len(recs) == n


def test_skips_unselected_and_invalid():
    bad = make_traj(1, selected=None)
    broken = make_traj(2, selected=7)
    recs, rep = build_dataset([make_traj(0), bad, broken], DatasetConfig(original_fraction=0))
    assert len(recs) == 1
    assert [s["id"] for s in rep.skipped] == ["q01", "q02"]
    assert rep.skipped[0]["reason"] == "no selected chain"


def test_jsonl_byte_identical(tmp_path):
    trajs = [make_traj(i) for i in range(6)]
    outs = []
    for k in range(2):
        recs, _ = build_dataset(trajs, DatasetConfig(seed=3))
        p = tmp_path / f"d{k}.jsonl"
        write_jsonl(p, recs)
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    first = json.loads(outs[0].splitlines()[0])
    assert first["prompt"] + first["completion"] == first["rendered"]


def test_bad_fraction():
    with pytest.raises(ValueError):
        DatasetConfig(original_fraction=1.5)
