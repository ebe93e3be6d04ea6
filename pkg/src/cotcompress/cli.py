"""``cotcompress`` command line: generate, compress, build-dataset, evaluate, estimate, repro."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .compressor import generate_initial, initial_trajectory, per_round_csv, run_trajectory
from .config import ConfigError, PipelineConfig, apply_overrides, config_from_dict, load_config
from .core import FEATURE_NAMES, STOP_ERROR, CompressionTrajectory
from .dataset import build_dataset
from .estimator import EstimatorError, feature_matrix, fit_joint, read_feature_csv
from .gateway import Gateway, GatewayError, HTTPBackend, RecordingBackend, ReplayBackend
from .jsonl import load_questions, load_trajectories, read_jsonl, write_jsonl
from .metrics import MetricError, summarize
from .repro import harness
from .repro.appendix import APPENDIX_QUESTIONS, build_fixture_backend
from .repro.tables import MODELS

logger = logging.getLogger("cotcompress")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


# -- plumbing --------------------------------------------------------------------


def make_gateway(cfg: PipelineConfig) -> tuple[Gateway, Optional[ReplayBackend]]:
    """Gateway for the configured backend mode; also returns the replay store if any."""
    mode, fixtures = cfg.backend.mode, cfg.backend.fixtures
    if mode == "replay":
        if fixtures is None:
            raise ConfigError("backend.fixtures is required in replay mode")
        store = ReplayBackend.from_file(fixtures)
        return Gateway(store, rate_limit=False), store
    if mode == "record":
        if fixtures is None:
            raise ConfigError("backend.fixtures is required in record mode")
        store = ReplayBackend.from_file(fixtures) if Path(fixtures).exists() else ReplayBackend()
        return Gateway(RecordingBackend(HTTPBackend(), store)), store
    return Gateway(HTTPBackend()), None


def _finish_recording(cfg: PipelineConfig, store: Optional[ReplayBackend]) -> None:
    if cfg.backend.mode == "record" and store is not None:
        store.save(cfg.backend.fixtures)


def _report_misses(store: Optional[ReplayBackend]) -> None:
    if store is not None and store.misses:
        print(f"{len(store.misses)} fixture miss(es); missing prompt sha256:", file=sys.stderr)
        for sha in sorted(set(store.misses)):
            print(f"  {sha}", file=sys.stderr)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _sorted_by_id(trajs) -> list[CompressionTrajectory]:
    return sorted(trajs, key=lambda t: t.question.id)


def _save_trajectories(path: Path, trajs) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    write_jsonl(tmp, _sorted_by_id(trajs))
    tmp.replace(path)


# -- stages ------------------------------------------------------------------------


def cmd_generate(cfg: PipelineConfig) -> int:
    """Round-0 chains for every question not already in the trajectories file."""
    qpath = cfg.paths.require("questions_in")
    out = cfg.paths.require("trajectories_out")
    questions = load_questions(qpath)
    done = {t.question.id: t for t in load_trajectories(out)} if out.exists() else {}
    todo = [q for q in questions if q.id not in done]
    logger.info("generate: %d questions, %d already done", len(questions), len(questions) - len(todo))

    endpoint = cfg.endpoint("generator")
    gateway, store = make_gateway(cfg)
    scheme = cfg.compression.token_scheme
    failed = []

    def work(q):
        try:
            return initial_trajectory(q, generate_initial(gateway, endpoint, q, scheme))
        except (GatewayError, ValueError) as e:
            logger.error("generate %s: %s", q.id, e)
            failed.append((q.id, str(e)))
            return None

    with ThreadPoolExecutor(max_workers=endpoint.max_in_flight) as pool:
        for t in pool.map(work, todo):
            if t is not None:
                done[t.question.id] = t
    _save_trajectories(out, done.values())
    _finish_recording(cfg, store)
    _report_misses(store)
    for qid, err in sorted(failed):
        print(f"generate {qid}: {err}", file=sys.stderr)
    print(f"generate: wrote {len(done)} trajectories to {out} ({len(failed)} failed)")
    return 1 if failed else 0


def cmd_compress(cfg: PipelineConfig) -> int:
    """Run the compression loop on every round-0 trajectory; rewrites the trajectories file."""
    path = cfg.paths.require("trajectories_out")
    if not path.exists():
        raise StageError("compress", f"{path} not found; run generate first")
    trajs = load_trajectories(path)
    endpoint = cfg.endpoint("compressor")
    scorer = cfg.endpoints.get("scorer")
    gateway, store = make_gateway(cfg)

    def work(t: CompressionTrajectory) -> CompressionTrajectory:
        if t.stopped_reason is not None and t.stopped_reason != STOP_ERROR:
            return t  # already compressed
        try:
            out = run_trajectory(gateway, endpoint, t.question, t.rounds[0], cfg.compression)
        except ValueError as e:
            logger.error("compress %s: %s", t.question.id, e)
            return replace(t, stopped_reason=STOP_ERROR, error=str(e))
        if scorer is not None and out.selected is not None and not out.selected.logprobs:
            try:
                lps = gateway.score_logprobs(scorer, out.selected.text)
            except GatewayError as e:
                logger.warning("scoring %s: %s", t.question.id, e)
            else:
                rounds = list(out.rounds)
                rounds[out.selected_index] = replace(out.selected, logprobs=tuple(lps) or None)
                out = replace(out, rounds=tuple(rounds))
        return out

    with ThreadPoolExecutor(max_workers=endpoint.max_in_flight) as pool:
        results = _sorted_by_id(pool.map(work, trajs))
    _save_trajectories(path, results)
    reports = cfg.paths.reports_dir
    _write_text(reports / "per_round.csv", per_round_csv(results))
    curve, flags = harness.elasticity_curve(results)
    _write_text(reports / "elasticity.csv", curve)
    _finish_recording(cfg, store)
    _report_misses(store)
    errors = [t.question.id for t in results if t.stopped_reason == STOP_ERROR]
    for qid in errors:
        print(f"compress: {qid} stopped on error", file=sys.stderr)
    print(f"compress: {len(results)} trajectories, {len(errors)} errors, {len(flags)} length rebounds")
    return 1 if errors else 0


def cmd_build_dataset(cfg: PipelineConfig) -> int:
    src = cfg.paths.require("trajectories_out")
    out = cfg.paths.require("dataset_out")
    records, report = build_dataset(load_trajectories(src), cfg.dataset)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(out, records)
    _write_json(cfg.paths.reports_dir / "dataset_report.json", report.to_dict())
    for s in report.skipped:
        logger.warning("build-dataset: skipped %s (%s)", s["id"], s["reason"])
    print(
        f"build-dataset: {len(records)} records ({report.n_compressed} compressed, "
        f"{report.n_original} original, {len(report.skipped)} skipped) -> {out}"
    )
    return 0


def cmd_evaluate(cfg: PipelineConfig) -> int:
    """Accuracy, mean tokens, latency and token efficiency of an external generation log."""
    log = cfg.paths.require("eval_in")
    gold = {}
    if cfg.paths.questions_in is not None and cfg.paths.questions_in.exists():
        gold = {q.id: q.gold_answer for q in load_questions(cfg.paths.questions_in)}
    triples = []
    for rec in read_jsonl(log):
        g = rec.get("gold_answer", gold.get(rec.get("id")))
        if g is None:
            raise StageError("evaluate", f"no gold answer for log entry {rec.get('id')!r}")
        triples.append((rec["text"], g, rec.get("latency_s")))
    if not triples:
        raise StageError("evaluate", f"{log} is empty")
    summary = summarize(triples, cfg.compression.token_scheme)
    reports = cfg.paths.reports_dir
    _write_json(reports / "eval_summary.json", summary.to_dict())
    _write_text(reports / "eval_summary.csv", summary.to_csv_row())
    print(
        f"evaluate: n={summary.n} accuracy={summary.accuracy:.4f} mean_tokens={summary.mean_tokens:.2f} "
        f"TE={summary.token_efficiency:.4f}"
    )
    return 0


def cmd_estimate(cfg: PipelineConfig, embedded: Optional[str] = None, predict: Optional[str] = None) -> int:
    """Fit the joint performance estimator and optionally predict one feature row."""
    if embedded:
        if embedded not in MODELS:
            raise StageError("estimate", f"unknown embedded model {embedded!r}; known: {', '.join(MODELS)}")
        rows = harness.feature_rows(embedded)
    else:
        rows = read_feature_csv(cfg.paths.require("features_in"))
    rows = [r for r in rows if r.target_acc is not None and r.target_len is not None]
    X, Y = feature_matrix(rows)
    model = fit_joint(X, Y)
    out = {"model": model.to_dict(), "n_rows": len(rows), "feature_names": list(FEATURE_NAMES)}
    if predict:
        x = np.array([float(v) for v in predict.split(",")])
        if x.size != len(FEATURE_NAMES):
            raise StageError("estimate", f"--predict needs {len(FEATURE_NAMES)} values ({', '.join(FEATURE_NAMES)})")
        p = model.predict(x)
        out["prediction"] = {"features": x.tolist(), **p.to_dict()}
        print(
            f"estimate: acc = {p.mu[0]:.4f} +/- {p.sigma[0]:.4f}, len = {p.mu[1]:.2f} +/- {p.sigma[1]:.2f}, rho = {p.rho:.3f}"
        )
    path = cfg.paths.reports_dir / "estimator_model.json"
    _write_json(path, out)
    print(f"estimate: fitted on {len(rows)} rows -> {path}")
    return 0


def cmd_repro(cfg: PipelineConfig) -> int:
    report = harness.run_all(cfg.seed)
    reports = cfg.paths.reports_dir
    _write_text(reports / "repro_report.json", report.to_json() + "\n")
    text = report.to_text()
    _write_text(reports / "repro_report.txt", text + "\n")
    print(text)
    return 0 if report.passed else 1


def cmd_fixtures(out_dir: Path, scheme: str) -> int:
    """Write the bundled worked examples as questions + replay fixtures + a config."""
    out_dir.mkdir(parents=True, exist_ok=True)
    write_jsonl(out_dir / "questions.jsonl", APPENDIX_QUESTIONS)
    build_fixture_backend(scheme).save(out_dir / "fixtures.jsonl")
    _write_text(
        out_dir / "config.yaml",
        "seed: 0\n"
        "endpoints:\n"
        "  generator: {name: generator, auth: null}\n"
        "  compressor: {name: gpt-4o-mini, auth: null}\n"
        "compression: {max_rounds: 5, token_scheme: " + scheme + "}\n"
        "dataset: {original_fraction: 0.5}\n"
        "backend: {mode: replay, fixtures: fixtures.jsonl}\n"
        "paths:\n"
        "  questions_in: questions.jsonl\n"
        "  trajectories_out: out/trajectories.jsonl\n"
        "  dataset_out: out/dataset.jsonl\n"
        "  reports_dir: out/reports\n",
    )
    print(f"fixtures: wrote questions.jsonl, fixtures.jsonl and config.yaml to {out_dir}")
    return 0


# -- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cotcompress", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def staged(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-c", "--config", type=Path, help="pipeline YAML (optional for repro)")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. compression.max_rounds=3")
        return sp

    staged("generate", "round-0 chains for each question (resumable)")
    staged("compress", "multi-round compression of round-0 chains")
    staged("build-dataset", "fine-tuning JSONL from compressed trajectories")
    staged("evaluate", "metrics over an external generation log")
    est = staged("estimate", "fit the Bayesian performance estimator")
    est.add_argument("--embedded", choices=sorted(MODELS), help="fit on a bundled reference table instead of features_in")
    est.add_argument("--predict", metavar="CR,PPL,LEN,ACC0,ACCC", help="comma-separated feature row to predict")
    staged("repro", "recompute the reference tables and print pass/fail checks")
    fx = sub.add_parser("fixtures", help="write the bundled worked examples for an offline demo run")
    fx.add_argument("out_dir", type=Path)
    fx.add_argument("--token-scheme", default="unicode-word")
    return p


_STAGES = {
    "generate": cmd_generate,
    "compress": cmd_compress,
    "build-dataset": cmd_build_dataset,
    "evaluate": cmd_evaluate,
    "repro": cmd_repro,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "fixtures":
        return cmd_fixtures(args.out_dir, args.token_scheme)
    try:
        if args.config is not None:
            cfg = load_config(args.config, args.overrides)
        elif args.command in ("repro", "estimate"):
            cfg = config_from_dict(apply_overrides({}, args.overrides), Path.cwd())
        else:
            raise ConfigError(f"{args.command} needs --config")
        if args.command == "estimate":
            return cmd_estimate(cfg, args.embedded, args.predict)
        return _STAGES[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, GatewayError, EstimatorError, MetricError) as e:
        print(f"error: {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
