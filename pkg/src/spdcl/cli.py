"""Command-line surface: score, schedule, train, report.

Each subcommand is an independent process over the file formats in
:mod:`spdcl.io`.  Errors exit nonzero with a single machine-parsable line on
stderr, ``error:<category>: <message>``.  Set SPDCL_LOG=debug|info|warning
to control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from spdcl import io as spdcl_io
from spdcl.difficulty import DifficultyHistory, delta_scores, dump_norms, initial_scores
from spdcl.io import FormatError
from spdcl.scheduler import CurriculumConfig, build_epoch_plan
from spdcl.trainer import TrainHyper, encode_datasets, run_baseline, run_spdcl

log = logging.getLogger("spdcl")


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _fail(category: str, message: str) -> CliError:
    return CliError(category, message)


# ------------------------------------------------------------------- score


def cmd_score(args) -> None:
    try:
        dump = spdcl_io.read_embedding_dump(args.embeddings)
    except (FormatError, OSError) as exc:
        raise _fail("malformed-dump", str(exc))
    if args.epoch < 1:
        raise _fail("bad-arguments", "--epoch must be >= 1")
    if args.epoch == 1:
        if args.prev_scores is not None:
            raise _fail("epoch-mismatch", "--prev-scores is only valid for epoch >= 2")
        records = initial_scores(dump)
        norms = {r.sample_id: r.score for r in records}
    else:
        if args.prev_scores is None:
            raise _fail("epoch-mismatch", f"epoch {args.epoch} requires --prev-scores")
        try:
            prev_records, prev_norms = spdcl_io.read_scores(args.prev_scores)
        except (FormatError, OSError) as exc:
            raise _fail("malformed-scores", str(exc))
        prev_epoch = prev_records[0].epoch
        if prev_epoch != args.epoch - 1:
            raise _fail(
                "epoch-mismatch",
                f"--prev-scores holds epoch {prev_epoch}, expected {args.epoch - 1}",
            )
        history = DifficultyHistory(first_epoch=prev_epoch)
        history.append(prev_norms)
        norms = dump_norms(dump)
        try:
            records = delta_scores(norms, history, mode=args.alignment, ordering=args.ordering)
        except ValueError as exc:
            raise _fail("sample-mismatch", str(exc))
    spdcl_io.write_scores(args.out, records, norms)
    log.info("scored %d samples for epoch %d -> %s", len(records), args.epoch, args.out)


# ---------------------------------------------------------------- schedule


def cmd_schedule(args) -> None:
    try:
        records, _ = spdcl_io.read_scores(args.scores)
    except (FormatError, OSError) as exc:
        raise _fail("malformed-scores", str(exc))
    if records[0].epoch != args.epoch:
        raise _fail(
            "epoch-mismatch",
            f"score file holds epoch {records[0].epoch}, expected {args.epoch}",
        )
    try:
        # total_epochs_T is irrelevant for a single-epoch plan; max() just
        # keeps the config's T >= k recommendation quiet.
        config = CurriculumConfig(
            bins_k=args.bins,
            total_epochs_T=max(args.epoch, args.bins),
            shuffle_seed=args.seed,
            shuffle_within_epoch=not args.no_shuffle,
        )
        plan = build_epoch_plan(records, config, args.epoch)
    except ValueError as exc:
        raise _fail("invalid-config", str(exc))
    spdcl_io.write_manifest(args.out, plan)
    log.info(
        "epoch %d plan: %d visible of %d samples -> %s",
        args.epoch,
        len(plan.ordered_ids),
        len(plan.bin_of),
        args.out,
    )


# ------------------------------------------------------------------- train


def cmd_train(args) -> None:
    try:
        config = spdcl_io.load_run_config(args.config)
    except (FormatError, OSError) as exc:
        raise _fail("invalid-config", str(exc))
    try:
        train_samples = spdcl_io.read_dataset(args.dataset)
        valid_samples = spdcl_io.read_dataset(args.valid)
    except (FormatError, OSError) as exc:
        raise _fail("malformed-dataset", str(exc))
    try:
        train_enc, valid_enc = encode_datasets(
            train_samples, valid_samples, config.task_kind, max_len=config.max_len
        )
    except ValueError as exc:
        raise _fail("malformed-dataset", str(exc))
    if config.bins_k > len(train_enc.sample_ids):
        raise _fail(
            "invalid-config",
            f"bins_k={config.bins_k} exceeds training-set size {len(train_enc.sample_ids)}",
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spdcl_io.write_run_config(out_dir / "run_config.json", config)
    hyper = TrainHyper(
        lr=config.lr,
        batch_size=config.batch,
        hidden=config.hidden_d,
        max_len=config.max_len,
        seed=config.seed,
    )
    runner = run_baseline if args.baseline else run_spdcl
    result = runner(train_enc, valid_enc, config.curriculum(), hyper, out_dir=out_dir)
    _save_final_params(out_dir, result.params, train_enc)
    for stats in result.stats:
        log.info(
            "epoch %d: mean_loss=%.6f over %d samples",
            stats.epoch,
            stats.mean_loss,
            stats.samples_seen,
        )
    log.info("run complete: %d epochs -> %s", len(result.stats), out_dir)


def _save_final_params(out_dir: Path, params, train_enc) -> None:
    tmp = out_dir / ".params_final.npz.tmp"
    with open(tmp, "wb") as fh:
        np.savez(
            fh,
            embedding_table=params.embedding_table,
            head_weights=params.head_weights,
            head_bias=params.head_bias,
        )
    os.replace(tmp, out_dir / "params_final.npz")
    spdcl_io.write_json_atomic(
        out_dir / "model_meta.json",
        {
            "task_kind": params.task_kind,
            "hidden": params.hidden,
            "label_names": train_enc.label_names,
            "vocab_tokens": train_enc.vocab.tokens_in_order(),
            "max_len": train_enc.vocab.max_len,
        },
    )


# ------------------------------------------------------------------ report


def cmd_report(args) -> None:
    try:
        report = spdcl_io.build_report(args.run_dir, baseline_dir=args.baseline_dir)
    except FormatError as exc:
        raise _fail("missing-artifact", str(exc))
    except OSError as exc:
        raise _fail("missing-artifact", str(exc))
    spdcl_io.write_json_atomic(args.out, report)
    if args.csv is not None:
        spdcl_io.write_text_atomic(args.csv, "\n".join(spdcl_io.report_csv_rows(report)) + "\n")
    log.info("report over %d epochs -> %s", len(report["epochs"]), args.out)


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdcl",
        description="Nuclear-norm curriculum learning: score, schedule, train, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="difficulty scores and ranks from an embedding dump")
    p.add_argument("--embeddings", required=True, help="embedding dump file")
    p.add_argument("--prev-scores", default=None, help="previous epoch's score file (epoch >= 2)")
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--out", required=True, help="output score file (JSONL)")
    p.add_argument("--alignment", choices=["rank", "identity"], default="rank")
    p.add_argument("--ordering", choices=["magnitude", "signed"], default="magnitude")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("schedule", help="epoch training manifest from a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output manifest file (JSONL)")
    p.add_argument("--no-shuffle", action="store_true", help="present the visible set in rank order")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("train", help="run the full curriculum (or baseline) training loop")
    p.add_argument("--dataset", required=True, help="training split (JSONL)")
    p.add_argument("--valid", required=True, help="validation split (JSONL)")
    p.add_argument("--config", required=True, help="run config (JSON)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--baseline", action="store_true", help="plain full-data training, no curriculum")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("report", help="aggregate a run directory into one JSON report")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None, help="also write plot-ready CSV here")
    p.add_argument("--baseline-dir", default=None, help="baseline run to diff against")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SPDCL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return 1
    except (FormatError, ValueError) as exc:
        print(f"error:invalid-input: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
