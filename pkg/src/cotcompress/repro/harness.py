"""Re-derive the published numbers from the embedded tables.

Every comparison becomes a :class:`Check`. Gating checks decide the exit
status of ``repro``; informational checks are reported the same way but never
fail the run (they cover rows the source tables print inconsistently, or
quantities with no acceptance threshold).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..core import FEATURE_NAMES, CompressionTrajectory, FeatureRow
from ..estimator import fit_joint, kfold_cv, pearson
from ..metrics import token_efficiency
from .tables import MODELS, load_embedded_table

TE_TOLERANCE = 0.03
CORR_R_TOLERANCE = 0.05
CORR_LOG10_P_TOLERANCE = 0.5
CV_R2_TOLERANCE = 0.15
CV_SEEDS = 10

# columns of the compression tables behind each correlation-table feature
CORR_FEATURES = {"CR": ("compression_rate",), "PPL": ("ppl",), "Len": ("compressed_len", "original_len")}


@dataclass
class Check:
    check: str
    expected: object
    actual: object
    tolerance: object
    passed: bool
    gating: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else ("FAIL" if self.gating else "info-mismatch")
        tag = "" if self.gating else " [informational]"
        return f"{status:<13} {self.check}: expected {_fmt(self.expected)}, got {_fmt(self.actual)} (tol {_fmt(self.tolerance)}){tag}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def extend(self, other: Report) -> Report:
        self.checks.extend(other.checks)
        self.extras.update(other.extras)
        return self

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)

    def to_text(self) -> str:
        lines = [f"== {self.title} =="]
        lines += [c.line() for c in self.checks]
        n_gate = sum(c.gating for c in self.checks)
        n_fail = sum(c.gating and not c.passed for c in self.checks)
        n_info = sum((not c.gating) and not c.passed for c in self.checks)
        lines.append(f"{n_gate - n_fail}/{n_gate} gating checks passed; {n_info} informational mismatches")
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# -- feature rows -----------------------------------------------------------------


def feature_rows(model: str) -> list[FeatureRow]:
    """The 20 compression-table rows of ``model`` as feature rows."""
    table = load_embedded_table(MODELS[model][0])
    rows = []
    for r in table.rows:
        rows.append(
            FeatureRow(
                compression_rate=r["compression_rate"],
                compressed_ppl=r["ppl"],
                original_len=r["original_len"],
                original_acc=r["original_acc"] / 100.0,
                compressor_acc=r["compressor_acc"],
                target_acc=r["finetuned_acc"],
                target_len=r["compressed_len"],
                label=f"{model}/{r['compressor']}/{r['rounds']}",
            )
        )
    return rows


def model_matrices(model: str) -> tuple[np.ndarray, np.ndarray]:
    rows = feature_rows(model)
    return np.array([r.features() for r in rows]), np.array([r.targets() for r in rows])


# -- token efficiency -------------------------------------------------------------


def verify_token_efficiency() -> Report:
    rep = Report("token efficiency")
    t1 = load_embedded_table("table1_rows")
    for r in t1.rows:
        if r["method"] not in ("Original", "MultiRound"):
            continue
        te = token_efficiency(r["acc"], r["tokens"])
        rep.checks.append(
            Check(
                f"table1 TE {r['method']} {r['model']} {r['dataset']}",
                r["te"],
                round(te, 4),
                TE_TOLERANCE,
                abs(te - r["te"]) <= TE_TOLERANCE,
            )
        )
    exempt = []
    t2 = load_embedded_table("table2_rows")
    for r in t2.rows:
        if r["method"] not in ("Original", "MultiRound"):
            continue
        te = token_efficiency(r["acc"], r["tokens"])
        ok = abs(te - r["te"]) <= TE_TOLERANCE
        name = f"table2 TE {r['method']} {r['model']} {r['dataset']}"
        if not ok:
            exempt.append(name)
        rep.checks.append(
            Check(name, r["te"], round(te, 4), TE_TOLERANCE, ok, gating=False,
                  note="" if ok else "printed TE does not equal Acc/Tokens*100 from the printed columns")
        )
    rep.extras["table2_exempted"] = exempt
    return rep


# -- correlations -------------------------------------------------------------------


def verify_correlations(model: str) -> Report:
    table_name, corr_name, _ = MODELS[model]
    rep = Report(f"correlations {model}")
    rows = load_embedded_table(table_name)
    targets = {"table3_corr": "finetuned_acc", "table4_corr": "compressed_len"}
    interp = {}
    for corr_table, target_col in targets.items():
        published = load_embedded_table(corr_table)
        y = np.array(rows.column(target_col))
        for feat, candidates in CORR_FEATURES.items():
            ref = published.lookup(model=corr_name, feature=feat)
            results = []
            for col in candidates:
                r, p = pearson(np.array(rows.column(col)), y)
                results.append((abs(r - ref["r"]), col, r, p))
            if len(results) > 1:
                interp[f"{corr_table}/{feat}"] = {col: r for _, col, r, _ in results}
            _, col, r, p = min(results)
            label = f"{corr_table} {model} {feat}" + (f" (as {col})" if len(candidates) > 1 else "") + f" vs {target_col}"
            rep.checks.append(Check(f"{label} r", ref["r"], round(r, 4), CORR_R_TOLERANCE, abs(r - ref["r"]) <= CORR_R_TOLERANCE))
            log_diff = _log10_gap(p, ref["p_value"])
            rep.checks.append(
                Check(f"{label} p", ref["p_value"], p, f"log10 +/-{CORR_LOG10_P_TOLERANCE}",
                      log_diff <= CORR_LOG10_P_TOLERANCE, gating=False,
                      note=f"|log10 gap| = {log_diff:.3g}")
            )
    best = {}
    for key, by_col in interp.items():
        corr_table, feat = key.split("/")
        ref = load_embedded_table(corr_table).lookup(model=corr_name, feature=feat)["r"]
        best[key] = min(by_col, key=lambda c: abs(by_col[c] - ref))
    rep.extras[f"len_interpretation/{model}"] = {"candidates": interp, "better_match": best}
    return rep


def _log10_gap(p: float, ref: float) -> float:
    if p <= 0 or ref <= 0:
        return math.inf if p != ref else 0.0
    return abs(math.log10(p) - math.log10(ref))


# -- cross-validation -------------------------------------------------------------


def cv_report(model: str, seed: int = 0, gating: Optional[bool] = None) -> Report:
    _, _, t9_name = MODELS[model]
    ref = load_embedded_table("table9_r2").lookup(model=t9_name)
    X, Y = model_matrices(model)
    gating = (model == "LLaMA-3.1-8B") if gating is None else gating
    rep = Report(f"bayesian ridge cv {model}")
    spread = {}
    for j, (target, ref_r2) in enumerate((("acc", ref["r2_acc"]), ("len", ref["r2_len"]))):
        res = kfold_cv(X, Y[:, j], k=5, seed=seed)
        seeds = [kfold_cv(X, Y[:, j], k=5, seed=seed + s).mean_r2 for s in range(CV_SEEDS)]
        spread[target] = {
            "fold_r2": list(res.fold_r2),
            "seed_means": seeds,
            "min": min(seeds),
            "max": max(seeds),
            "mean": float(np.mean(seeds)),
            "std": float(np.std(seeds)),
        }
        seed_mean = float(np.mean(seeds))
        # fold assignments behind the reference values are unknown, so the gate uses the
        # expectation over split seeds; the single configured seed is reported alongside
        rep.checks.append(
            Check(f"table9 {model} R2 {target} ({CV_SEEDS}-seed mean)", ref_r2, round(seed_mean, 4), CV_R2_TOLERANCE,
                  abs(seed_mean - ref_r2) <= CV_R2_TOLERANCE, gating=gating,
                  note=f"seed range [{min(seeds):.3f}, {max(seeds):.3f}]")
        )
        rep.checks.append(
            Check(f"table9 {model} R2 {target} (seed {seed})", ref_r2, round(res.mean_r2, 4), CV_R2_TOLERANCE,
                  abs(res.mean_r2 - ref_r2) <= CV_R2_TOLERANCE, gating=False)
        )
    rep.extras[f"cv_spread/{model}"] = spread
    joint = fit_joint(X, Y)
    rep.extras[f"joint_fit/{model}"] = {
        "rho": joint.rho,
        "degenerate": joint.degenerate,
        "weights_acc": dict(zip(FEATURE_NAMES, zip(joint.acc.weight_mean.tolist(), joint.acc.weight_std().tolist()))),
        "weights_len": dict(zip(FEATURE_NAMES, zip(joint.length.weight_mean.tolist(), joint.length.weight_std().tolist()))),
    }
    return rep


def cv_self_test(seed: int = 0) -> Report:
    """Noiseless linear control: cross-validated R^2 must be 1."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 4))
    y = X @ np.array([1.5, -2.0, 0.5, 3.0]) + 7.0
    r2 = kfold_cv(X, y, k=5, seed=seed).mean_r2
    rep = Report("cv self-test")
    rep.checks.append(Check("noiseless synthetic CV R2", 1.0, r2, 1e-6, abs(r2 - 1.0) <= 1e-6))
    return rep


def compression_rate_columns(model: str) -> Report:
    """Table CR next to compressed_len / original_len; no agreement is expected."""
    rep = Report(f"compression-rate columns {model}")
    table = load_embedded_table(MODELS[model][0])
    rows = []
    for r in table.rows:
        rows.append({
            "row": f"{r['compressor']}/{r['rounds']}",
            "table_cr": r["compression_rate"],
            "len_ratio": r["compressed_len"] / r["original_len"],
        })
    rep.extras[f"cr_columns/{model}"] = rows
    return rep


def run_all(seed: int = 0) -> Report:
    rep = Report("reproduction")
    rep.extend(verify_token_efficiency())
    for model in MODELS:
        rep.extend(verify_correlations(model))
    for model in MODELS:
        rep.extend(cv_report(model, seed))
        rep.extend(compression_rate_columns(model))
    rep.extend(cv_self_test(seed))
    return rep


# -- elasticity curves -----------------------------------------------------------------

ELASTICITY_HEADER = ("round", "n_trajectories", "mean_token_count", "mean_rate")


def rebound_round(lengths: Sequence[int]) -> Optional[int]:
    """First round whose length rises after at least one earlier decline."""
    declined = False
    for i in range(1, len(lengths)):
        if lengths[i] < lengths[i - 1]:
            declined = True
        elif lengths[i] > lengths[i - 1] and declined:
            return i
    return None


def elasticity_curve(trajectories: Sequence[CompressionTrajectory]) -> tuple[str, list[tuple[str, int]]]:
    """Per-round mean length and rate (rebound rounds included) plus rebound flags."""
    by_round: dict[int, list[tuple[int, float]]] = {}
    flags = []
    for t in trajectories:
        for i, (r, rate) in enumerate(zip(t.rounds, t.rates)):
            by_round.setdefault(i, []).append((r.token_count, rate))
        k = rebound_round([r.token_count for r in t.rounds])
        if k is not None:
            flags.append((t.question.id, k))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ELASTICITY_HEADER)
    for i in sorted(by_round):
        vals = by_round[i]
        w.writerow([i, len(vals), repr(math.fsum(v[0] for v in vals) / len(vals)), repr(math.fsum(v[1] for v in vals) / len(vals))])
    return buf.getvalue(), flags
