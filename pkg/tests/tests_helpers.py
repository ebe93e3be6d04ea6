from __future__ import annotations

from cotcompress.compressor import select_final
from cotcompress.core import STOP_LENGTH_REBOUND, STOP_MAX_ROUNDS, CompressionTrajectory, Question, ReasoningTrace


def make_traj_from_lengths(qid, lengths):
    rebound = any(b > a for a, b in zip(lengths, lengths[1:]))
    usable = len(lengths) - 1 if rebound else len(lengths)
    return CompressionTrajectory(
        Question(qid, "q"),
        tuple(ReasoningTrace(f"{qid}{i}", n) for i, n in enumerate(lengths)),
        tuple(n / lengths[0] for n in lengths),
        select_final(lengths, usable),
        STOP_LENGTH_REBOUND if rebound else STOP_MAX_ROUNDS,
    )
