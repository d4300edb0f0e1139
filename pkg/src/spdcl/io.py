"""File formats and persistence for the curriculum pipeline.

Text artifacts are JSON lines written canonically (sorted keys, fixed
separators) so every format round-trips byte for byte.  Embedding dumps are
a small binary format:

    magic   8 bytes  b"SPDCLEMB"
    version u32 LE   currently 1
    count   u64 LE   number of samples
    then per sample:
        id_len u32 LE, id bytes (UTF-8)
        rows   u32 LE, cols u32 LE
        rows*cols float32 LE, row-major

Values are stored single precision; all in-memory math stays double.  Every
write goes through a temp file in the target directory followed by an
atomic rename.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from spdcl.difficulty import ALIGNMENT_MODES, DELTA_ORDERINGS, DifficultyRecord
from spdcl.metrics import EvalReport
from spdcl.nucnorm import EmbeddingMatrix
from spdcl.scheduler import CurriculumConfig, EpochPlan

DUMP_MAGIC = b"SPDCLEMB"
DUMP_VERSION = 1

TASK_KINDS = ("multiclass", "multilabel")


class FormatError(ValueError):
    """A file failed structural validation."""


# ------------------------------------------------------------ atomic writing


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _canonical_json_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_jsonl_atomic(path, records: Iterable[dict]) -> None:
    body = "".join(_canonical_json_line(r) + "\n" for r in records)
    _atomic_write_bytes(Path(path), body.encode("utf-8"))


def write_json_atomic(path, obj) -> None:
    body = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    _atomic_write_bytes(Path(path), body.encode("utf-8"))


def write_text_atomic(path, text: str) -> None:
    _atomic_write_bytes(Path(path), text.encode("utf-8"))


def _read_jsonl(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {lineno} is not valid JSON: {exc}") from exc
    return out


# -------------------------------------------------------------- dataset files


@dataclass(frozen=True)
class TextSample:
    """One dataset record: id, raw text, and one or more label strings."""

    sample_id: str
    text: str
    labels: tuple[str, ...]


def read_dataset(path) -> list[TextSample]:
    """Load a JSON-lines dataset: {"id", "text", "labels"} per line.

    ``labels`` may be a single string (multiclass) or an array of strings
    (multilabel); it must be non-empty either way, and ids must be unique.
    """
    samples = []
    seen = set()
    for lineno, rec in enumerate(_read_jsonl(path), start=1):
        if not isinstance(rec, dict) or not {"id", "text", "labels"} <= rec.keys():
            raise FormatError(f"{path}: record {lineno} must have id/text/labels fields")
        sid = rec["id"]
        if not isinstance(sid, str) or not sid:
            raise FormatError(f"{path}: record {lineno} has a non-string or empty id")
        if sid in seen:
            raise FormatError(f"{path}: duplicate sample id {sid!r}")
        seen.add(sid)
        labels = rec["labels"]
        if isinstance(labels, str):
            labels = [labels]
        if not isinstance(labels, list) or not labels or not all(isinstance(x, str) for x in labels):
            raise FormatError(f"{path}: record {sid!r} needs a non-empty label or label list")
        samples.append(TextSample(sample_id=sid, text=str(rec["text"]), labels=tuple(labels)))
    if not samples:
        raise FormatError(f"{path}: dataset is empty")
    return samples


def write_dataset(path, samples: Sequence[TextSample]) -> None:
    write_jsonl_atomic(
        path,
        (
            {
                "id": s.sample_id,
                "text": s.text,
                "labels": s.labels[0] if len(s.labels) == 1 else list(s.labels),
            }
            for s in samples
        ),
    )


# ------------------------------------------------------------ embedding dumps


def f32_roundtrip(emb: EmbeddingMatrix) -> EmbeddingMatrix:
    """Quantize to the dump's storage precision (float32) and back.

    Scoring quantized matrices guarantees that rescoring a dump read from
    disk reproduces in-process scores exactly.
    """
    return EmbeddingMatrix(emb.sample_id, emb.values.astype("<f4").astype(np.float64))


def write_embedding_dump(path, dump: Sequence[EmbeddingMatrix]) -> None:
    seen = set()
    parts = [DUMP_MAGIC, struct.pack("<IQ", DUMP_VERSION, len(dump))]
    for emb in dump:
        if emb.sample_id in seen:
            raise FormatError(f"duplicate sample id {emb.sample_id!r} in dump")
        seen.add(emb.sample_id)
        id_bytes = emb.sample_id.encode("utf-8")
        parts.append(struct.pack("<I", len(id_bytes)))
        parts.append(id_bytes)
        parts.append(struct.pack("<II", emb.rows, emb.cols))
        parts.append(np.ascontiguousarray(emb.values, dtype="<f4").tobytes())
    _atomic_write_bytes(Path(path), b"".join(parts))


def read_embedding_dump(path) -> list[EmbeddingMatrix]:
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(n, what):
        nonlocal offset
        if offset + n > len(blob):
            raise FormatError(f"{path}: truncated while reading {what}")
        piece = blob[offset : offset + n]
        offset += n
        return piece

    offset = 0
    if take(8, "magic") != DUMP_MAGIC:
        raise FormatError(f"{path}: bad magic, not an embedding dump")
    version, count = struct.unpack("<IQ", take(12, "header"))
    if version != DUMP_VERSION:
        raise FormatError(f"{path}: unsupported dump version {version}")
    dump = []
    seen = set()
    for i in range(count):
        (id_len,) = struct.unpack("<I", take(4, f"id length of sample {i}"))
        sid = take(id_len, f"id of sample {i}").decode("utf-8")
        if sid in seen:
            raise FormatError(f"{path}: duplicate sample id {sid!r}")
        seen.add(sid)
        rows, cols = struct.unpack("<II", take(8, f"shape of {sid!r}"))
        if rows < 1 or cols < 1:
            raise FormatError(f"{path}: sample {sid!r} declares empty shape {rows}x{cols}")
        raw = take(4 * rows * cols, f"values of {sid!r}")
        values = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(rows, cols)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}: sample {sid!r} contains non-finite values")
        dump.append(EmbeddingMatrix(sample_id=sid, values=values))
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes after declared samples")
    return dump


# ------------------------------------------------------------- score files


def write_scores(path, records: Sequence[DifficultyRecord], norms: dict[str, float]) -> None:
    """Score file: one line per sample with both the score and the raw norm.

    The raw nuclear norm rides along so the next epoch can diff against it;
    for epoch 1 the two values coincide.
    """
    rows = []
    for rec in records:
        if rec.sample_id not in norms:
            raise FormatError(f"no raw norm for sample {rec.sample_id!r}")
        rows.append(
            {
                "id": rec.sample_id,
                "epoch": rec.epoch,
                "score": rec.score,
                "rank": rec.rank,
                "norm": norms[rec.sample_id],
            }
        )
    write_jsonl_atomic(path, rows)


def read_scores(path) -> tuple[list[DifficultyRecord], dict[str, float]]:
    records = []
    norms = {}
    epochs = set()
    for lineno, rec in enumerate(_read_jsonl(path), start=1):
        try:
            records.append(
                DifficultyRecord(
                    sample_id=rec["id"],
                    epoch=int(rec["epoch"]),
                    score=float(rec["score"]),
                    rank=int(rec["rank"]),
                )
            )
            norms[rec["id"]] = float(rec["norm"])
            epochs.add(int(rec["epoch"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: line {lineno} is not a valid score record: {exc}") from exc
    if not records:
        raise FormatError(f"{path}: score file is empty")
    if len(epochs) != 1:
        raise FormatError(f"{path}: mixes epochs {sorted(epochs)}")
    ranks = sorted(r.rank for r in records)
    if ranks != list(range(len(records))):
        raise FormatError(f"{path}: ranks are not a permutation of 0..N-1")
    return records, norms


# ------------------------------------------------------------ manifest files


def write_manifest(path, plan: EpochPlan) -> None:
    write_jsonl_atomic(
        path,
        [{"epoch": plan.epoch, "order": plan.ordered_ids, "bin_of": plan.bin_of}],
    )


def read_manifest(path) -> EpochPlan:
    rows = _read_jsonl(path)
    if len(rows) != 1:
        raise FormatError(f"{path}: manifest must contain exactly one record, got {len(rows)}")
    rec = rows[0]
    try:
        order = list(rec["order"])
        bin_of = {str(k): int(v) for k, v in rec["bin_of"].items()}
        epoch = int(rec["epoch"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed manifest record: {exc}") from exc
    if len(set(order)) != len(order):
        raise FormatError(f"{path}: manifest order contains duplicates")
    unknown = [sid for sid in order if sid not in bin_of]
    if unknown:
        raise FormatError(f"{path}: ordered ids missing from bin_of: {unknown[:5]}")
    return EpochPlan(
        epoch=epoch,
        visible_bins=max((bin_of[sid] for sid in order), default=1),
        ordered_ids=order,
        bin_of=bin_of,
    )


# ---------------------------------------------------------------- run config


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration, the on-disk face of one experiment."""

    bins_k: int = 5
    epochs_T: int = 10
    seed: int = 2
    lr: float = 0.1
    batch: int = 25
    hidden_d: int = 16
    max_len: int = 250
    task_kind: str = "multiclass"
    alignment_mode: str = "rank"
    delta_ordering: str = "magnitude"
    shuffle_within_epoch: bool = True

    def __post_init__(self):
        if self.bins_k < 1:
            raise FormatError("bins_k must be >= 1")
        if self.epochs_T < 1:
            raise FormatError("epochs_T must be >= 1")
        if self.seed < 0:
            raise FormatError("seed must be >= 0")
        if self.lr < 0:
            raise FormatError("lr must be >= 0")
        if self.batch < 1:
            raise FormatError("batch must be >= 1")
        if self.hidden_d < 1:
            raise FormatError("hidden_d must be >= 1")
        if self.max_len < 1:
            raise FormatError("max_len must be >= 1")
        if self.task_kind not in TASK_KINDS:
            raise FormatError(f"task_kind must be one of {TASK_KINDS}")
        if self.alignment_mode not in ALIGNMENT_MODES:
            raise FormatError(f"alignment_mode must be one of {ALIGNMENT_MODES}")
        if self.delta_ordering not in DELTA_ORDERINGS:
            raise FormatError(f"delta_ordering must be one of {DELTA_ORDERINGS}")

    def curriculum(self) -> CurriculumConfig:
        return CurriculumConfig(
            bins_k=self.bins_k,
            total_epochs_T=self.epochs_T,
            shuffle_seed=self.seed,
            alignment_mode=self.alignment_mode,
            delta_ordering=self.delta_ordering,
            shuffle_within_epoch=self.shuffle_within_epoch,
        )


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise FormatError(f"{path}: unknown config keys {sorted(unknown)}")
    try:
        return RunConfig(**raw)
    except TypeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_run_config(path, config: RunConfig) -> None:
    write_json_atomic(path, asdict(config))


# -------------------------------------------------------------- run reports


def epoch_report_payload(stats, report: EvalReport) -> dict:
    """Merge TrainStats and EvalReport into one per-epoch JSON payload.

    Wall time stays in-memory only: persisted reports must be byte-identical
    across reruns of the same seeded configuration.
    """
    payload = {
        "epoch": stats.epoch,
        "mean_loss": stats.mean_loss,
        "samples_seen": stats.samples_seen,
    }
    payload.update(asdict(report))
    return payload


def _norm_stats(norms: Sequence[float]) -> dict:
    xs = np.asarray(norms, dtype=np.float64)
    q1, median, q3 = (float(v) for v in np.percentile(xs, [25.0, 50.0, 75.0], method="linear"))
    return {
        "count": int(xs.size),
        "mean": float(xs.mean()),
        "min": float(xs.min()),
        "q1": q1,
        "median": median,
        "q3": q3,
        "max": float(xs.max()),
    }


def _epoch_paths(run_dir: Path, epoch: int) -> dict[str, Path]:
    stem = f"epoch{epoch:03d}"
    return {
        "scores": run_dir / f"{stem}.scores.jsonl",
        "manifest": run_dir / f"{stem}.manifest.jsonl",
        "report": run_dir / f"{stem}.report.json",
    }


def _collect_run(run_dir: Path) -> dict:
    config_path = run_dir / "run_config.json"
    missing = [] if config_path.exists() else [str(config_path)]
    epochs = []
    config = load_run_config(config_path) if config_path.exists() else None
    total = config.epochs_T if config else 0
    for epoch in range(1, total + 1):
        paths = _epoch_paths(run_dir, epoch)
        absent = [str(p) for p in paths.values() if not p.exists()]
        if absent:
            missing.extend(absent)
            continue
        with open(paths["report"], "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        _, norms = read_scores(paths["scores"])
        payload["norm_stats"] = _norm_stats(list(norms.values()))
        epochs.append(payload)
    if missing:
        raise FormatError(f"incomplete run in {run_dir}: missing {', '.join(sorted(missing))}")
    return {"config": asdict(config), "epochs": epochs}


_CSV_METRICS = (
    "mean_loss",
    "micro_f1",
    "macro_f1",
    "hamming_loss",
    "subset_accuracy",
    "matthews_corr",
    "binary_f1",
)


def build_report(run_dir, baseline_dir=None) -> dict:
    """Aggregate a run directory into one report document.

    Per epoch: training stats, evaluation metrics, and the distribution of
    raw nuclear norms (mean plus quartiles, i.e. box-plot data).  When a
    baseline directory is supplied its epochs are included and a final-epoch
    metric delta table is added.
    """
    report = _collect_run(Path(run_dir))
    report["norm_trajectory"] = [e["norm_stats"]["mean"] for e in report["epochs"]]
    if baseline_dir is not None:
        base = _collect_run(Path(baseline_dir))
        report["baseline"] = base
        last, base_last = report["epochs"][-1], base["epochs"][-1]
        report["delta_vs_baseline"] = {
            key: last[key] - base_last[key]
            for key in _CSV_METRICS
            if isinstance(last.get(key), (int, float)) and isinstance(base_last.get(key), (int, float))
        }
    return report


def report_csv_rows(report: dict) -> list[str]:
    """Plot-ready CSV: one row per epoch with metrics and norm stats."""
    header = ["epoch", *_CSV_METRICS, "norm_mean", "norm_q1", "norm_median", "norm_q3"]
    rows = [",".join(header)]
    for e in report["epochs"]:
        cells = [str(e["epoch"])]
        for key in _CSV_METRICS:
            value = e.get(key)
            cells.append("" if value is None else repr(float(value)))
        ns = e["norm_stats"]
        cells.extend(repr(float(ns[k])) for k in ("mean", "q1", "median", "q3"))
        rows.append(",".join(cells))
    return rows
