"""Minimal deterministic text classifier driving the curriculum loop.

Learned embedding table -> mean pooling -> linear head, trained with plain
SGD.  Small enough to run desk-scale experiments in seconds, yet it exposes
exactly the surface the difficulty engine needs: after every epoch the
per-sample token-embedding matrices are dumped and re-scored, and the next
epoch trains on the widened visible set.

Everything is a pure function of (data, config, seeds): no optimizer state,
no global RNG, batches never cross the visible-set boundary, and the final
short batch is kept.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from spdcl import io as spdcl_io
from spdcl.difficulty import DifficultyHistory, delta_scores, dump_norms, initial_scores
from spdcl.metrics import EvalReport, evaluate, label_frequency_groups
from spdcl.nucnorm import EmbeddingMatrix
from spdcl.scheduler import CurriculumConfig, EpochPlan, build_epoch_plan, epoch_rng

PAD_INDEX = 0
UNK_INDEX = 1

TASK_KINDS = ("multiclass", "multilabel")


@dataclass(frozen=True)
class Vocabulary:
    """Whitespace-token vocabulary with PAD=0 and UNK=1 reserved."""

    index_of: dict[str, int]
    max_len: int

    def __post_init__(self):
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")

    @property
    def size(self) -> int:
        return len(self.index_of) + 2

    def tokens_in_order(self) -> list[str]:
        return sorted(self.index_of, key=self.index_of.get)


def build_vocabulary(texts: Sequence[str], max_len: int = 250) -> Vocabulary:
    """Vocabulary from the training split only.

    Tokens get dense indices from 2 upward, ordered by descending corpus
    frequency with ties broken alphabetically, so the mapping is a pure
    function of the corpus.
    """
    counts: dict[str, int] = {}
    for text in texts:
        for tok in text.lower().split():
            counts[tok] = counts.get(tok, 0) + 1
    ordered = sorted(counts, key=lambda t: (-counts[t], t))
    return Vocabulary(index_of={t: i + 2 for i, t in enumerate(ordered)}, max_len=max_len)


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Lowercase, whitespace-split, map with UNK fallback, truncate.

    Total function: empty text maps to a single UNK token.
    """
    ids = [vocab.index_of.get(tok, UNK_INDEX) for tok in text.lower().split()]
    if not ids:
        return [UNK_INDEX]
    return ids[: vocab.max_len]


@dataclass(frozen=True)
class ModelParams:
    embedding_table: np.ndarray  # (V, d)
    head_weights: np.ndarray  # (d, L)
    head_bias: np.ndarray  # (L,)
    task_kind: str

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ValueError(f"task_kind must be one of {TASK_KINDS}")
        for name in ("embedding_table", "head_weights", "head_bias"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        v, d = self.embedding_table.shape
        d_w, n = self.head_weights.shape
        if d < 1 or n < 1:
            raise ValueError("hidden size and label count must be >= 1")
        if d_w != d or self.head_bias.shape != (n,):
            raise ValueError(
                f"inconsistent parameter shapes: table {v}x{d}, head {d_w}x{n}, "
                f"bias {self.head_bias.shape}"
            )

    @property
    def hidden(self) -> int:
        return self.embedding_table.shape[1]

    @property
    def n_labels(self) -> int:
        return self.head_bias.shape[0]

    def copy(self) -> "ModelParams":
        return ModelParams(
            embedding_table=self.embedding_table.copy(),
            head_weights=self.head_weights.copy(),
            head_bias=self.head_bias.copy(),
            task_kind=self.task_kind,
        )


@dataclass(frozen=True)
class Gradients:
    embedding_table: np.ndarray
    head_weights: np.ndarray
    head_bias: np.ndarray


@dataclass(frozen=True)
class TrainStats:
    epoch: int
    mean_loss: float
    samples_seen: int
    wall_time: float


def init_params(
    vocab_size: int, hidden: int, n_labels: int, task_kind: str, seed: int
) -> ModelParams:
    if hidden < 1 or n_labels < 1:
        raise ValueError("hidden and n_labels must be >= 1")
    rng = np.random.default_rng((seed & (2**64 - 1), 0))
    scale = 1.0 / np.sqrt(hidden)
    return ModelParams(
        embedding_table=rng.normal(0.0, scale, size=(vocab_size, hidden)),
        head_weights=rng.normal(0.0, scale, size=(hidden, n_labels)),
        head_bias=np.zeros(n_labels),
        task_kind=task_kind,
    )


def embed_sample(params: ModelParams, ids: Sequence[int], sample_id: str = "") -> EmbeddingMatrix:
    """Token-embedding rows for one sample: the toy model's "last layer"."""
    if len(ids) == 0:
        raise ValueError("token-id sequence is empty")
    idx = np.asarray(ids, dtype=np.int64)
    if idx.min() < 0 or idx.max() >= params.embedding_table.shape[0]:
        raise ValueError(f"token id out of range for vocabulary of size {params.embedding_table.shape[0]}")
    return EmbeddingMatrix(sample_id=sample_id, values=params.embedding_table[idx])


def forward(params: ModelParams, ids: Sequence[int]) -> np.ndarray:
    """Logits: mean-pooled token embeddings through the linear head."""
    pooled = embed_sample(params, ids).values.mean(axis=0)
    return pooled @ params.head_weights + params.head_bias


def _check_target(params: ModelParams, target):
    if params.task_kind == "multiclass":
        t = int(target)
        if not 0 <= t < params.n_labels:
            raise ValueError(f"class index {t} out of range for {params.n_labels} labels")
        return t
    vec = np.asarray(target)
    if vec.shape != (params.n_labels,) or not np.isin(vec, (0, 1)).all():
        raise ValueError(f"multilabel target must be a 0/1 vector of length {params.n_labels}")
    return vec.astype(np.float64)


def loss_and_grad(params: ModelParams, ids: Sequence[int], target) -> tuple[float, Gradients]:
    """Loss and exact analytic gradients for one sample.

    Multiclass: softmax cross-entropy on the class index.  Multilabel: mean
    sigmoid binary cross-entropy over the label vector.
    """
    target = _check_target(params, target)
    idx = np.asarray(ids, dtype=np.int64)
    rows = params.embedding_table[idx]
    pooled = rows.mean(axis=0)
    logits = pooled @ params.head_weights + params.head_bias

    if params.task_kind == "multiclass":
        shifted = logits - logits.max()
        log_z = np.log(np.exp(shifted).sum())
        loss = float(log_z - shifted[target])
        probs = np.exp(shifted - log_z)
        dlogits = probs.copy()
        dlogits[target] -= 1.0
    else:
        # per-label: y*softplus(-z) + (1-y)*softplus(z), averaged over labels
        loss = float(
            np.mean(target * np.logaddexp(0.0, -logits) + (1.0 - target) * np.logaddexp(0.0, logits))
        )
        sigm = 1.0 / (1.0 + np.exp(-logits))
        dlogits = (sigm - target) / params.n_labels

    dbias = dlogits
    dweights = np.outer(pooled, dlogits)
    dpooled = params.head_weights @ dlogits
    dembed = np.zeros_like(params.embedding_table)
    np.add.at(dembed, idx, dpooled / len(idx))
    return loss, Gradients(embedding_table=dembed, head_weights=dweights, head_bias=dbias)


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 0.1
    batch_size: int = 25
    hidden: int = 16
    max_len: int = 250
    seed: int = 2
    threshold: float = 0.5  # multilabel decision threshold on sigmoid outputs

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EncodedDataset:
    """Tokenized samples with targets, ready for training or scoring."""

    sample_ids: list[str]
    token_ids: dict[str, list[int]]
    targets: dict[str, object]
    vocab: Vocabulary
    label_names: list[str]
    task_kind: str

    def truth(self) -> np.ndarray:
        return np.array([self.targets[s] for s in self.sample_ids], dtype=np.int64)


def encode_datasets(
    train: Sequence[spdcl_io.TextSample],
    valid: Sequence[spdcl_io.TextSample],
    task_kind: str,
    max_len: int = 250,
) -> tuple[EncodedDataset, EncodedDataset]:
    """Tokenize both splits with a vocabulary built from the training split.

    The label space also comes from the training split; a validation label
    never seen in training is rejected.
    """
    if task_kind not in TASK_KINDS:
        raise ValueError(f"task_kind must be one of {TASK_KINDS}")
    vocab = build_vocabulary([s.text for s in train], max_len=max_len)
    label_names = sorted({lab for s in train for lab in s.labels})
    label_index = {lab: i for i, lab in enumerate(label_names)}

    def encode(samples, split_name):
        token_ids = {}
        targets = {}
        for s in samples:
            unseen = [lab for lab in s.labels if lab not in label_index]
            if unseen:
                raise ValueError(f"{split_name} sample {s.sample_id!r} has labels unseen in training: {unseen}")
            token_ids[s.sample_id] = tokenize(s.text, vocab)
            if task_kind == "multiclass":
                if len(s.labels) != 1:
                    raise ValueError(f"multiclass sample {s.sample_id!r} must have exactly one label")
                targets[s.sample_id] = label_index[s.labels[0]]
            else:
                vec = np.zeros(len(label_names), dtype=np.int64)
                for lab in s.labels:
                    vec[label_index[lab]] = 1
                targets[s.sample_id] = vec
        return EncodedDataset(
            sample_ids=[s.sample_id for s in samples],
            token_ids=token_ids,
            targets=targets,
            vocab=vocab,
            label_names=label_names,
            task_kind=task_kind,
        )

    return encode(train, "train"), encode(valid, "valid")


def train_epoch(
    params: ModelParams,
    plan: EpochPlan,
    data: EncodedDataset,
    lr: float,
    batch_size: int,
) -> tuple[ModelParams, TrainStats]:
    """One pass over the plan's ordered ids with mini-batch SGD.

    Deterministic given (params, plan, lr, batch_size); the input params are
    left untouched and a fresh ModelParams is returned.
    """
    missing = [sid for sid in plan.ordered_ids if sid not in data.token_ids]
    if missing:
        raise ValueError(f"plan references samples missing from dataset: {missing[:5]}")
    out = params.copy()
    started = time.perf_counter()
    total_loss = 0.0
    n = len(plan.ordered_ids)
    for start in range(0, n, batch_size):
        chunk = plan.ordered_ids[start : start + batch_size]
        acc_emb = np.zeros_like(out.embedding_table)
        acc_w = np.zeros_like(out.head_weights)
        acc_b = np.zeros_like(out.head_bias)
        for sid in chunk:
            loss, grads = loss_and_grad(out, data.token_ids[sid], data.targets[sid])
            total_loss += loss
            acc_emb += grads.embedding_table
            acc_w += grads.head_weights
            acc_b += grads.head_bias
        scale = lr / len(chunk)
        out = ModelParams(
            embedding_table=out.embedding_table - scale * acc_emb,
            head_weights=out.head_weights - scale * acc_w,
            head_bias=out.head_bias - scale * acc_b,
            task_kind=out.task_kind,
        )
    stats = TrainStats(
        epoch=plan.epoch,
        mean_loss=total_loss / n if n else 0.0,
        samples_seen=n,
        wall_time=time.perf_counter() - started,
    )
    return out, stats


def predict(params: ModelParams, data: EncodedDataset, threshold: float = 0.5) -> np.ndarray:
    """Predicted class indices (multiclass) or a 0/1 matrix (multilabel)."""
    logits = np.stack([forward(params, data.token_ids[sid]) for sid in data.sample_ids])
    if params.task_kind == "multiclass":
        return logits.argmax(axis=1)
    return (1.0 / (1.0 + np.exp(-logits)) >= threshold).astype(np.int64)


@dataclass
class RunResult:
    params: ModelParams
    stats: list[TrainStats]
    reports: list[EvalReport]
    plans: list[EpochPlan]
    history: DifficultyHistory | None


def _dump_embeddings(params: ModelParams, data: EncodedDataset) -> list[EmbeddingMatrix]:
    return [
        spdcl_io.f32_roundtrip(embed_sample(params, data.token_ids[sid], sid))
        for sid in sorted(data.sample_ids)
    ]


def _frequency_groups(train: EncodedDataset) -> np.ndarray:
    n_labels = len(train.label_names)
    if n_labels == 1:
        return np.zeros(1, dtype=np.int64)
    return label_frequency_groups(train.truth(), n_groups=min(4, n_labels))


def _eval_epoch(params, valid, groups, threshold) -> EvalReport:
    preds = predict(params, valid, threshold=threshold)
    return evaluate(valid.truth(), preds, n_labels=len(valid.label_names), groups=groups)


def _persist_epoch(out_dir, epoch, dump, records, norms, plan, stats, report):
    if out_dir is None:
        return
    out = Path(out_dir)
    spdcl_io.write_embedding_dump(out / f"epoch{epoch:03d}.embeddings.bin", dump)
    spdcl_io.write_scores(out / f"epoch{epoch:03d}.scores.jsonl", records, norms)
    spdcl_io.write_manifest(out / f"epoch{epoch:03d}.manifest.jsonl", plan)
    spdcl_io.write_json_atomic(
        out / f"epoch{epoch:03d}.report.json", spdcl_io.epoch_report_payload(stats, report)
    )


def _run_loop(train, valid, config, hyper, out_dir, make_plan) -> RunResult:
    # Shared epoch loop: dump (pre-training params), score, plan via
    # make_plan(records, epoch), train, evaluate, persist.
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    params = init_params(
        train.vocab.size, hyper.hidden, len(train.label_names), train.task_kind, hyper.seed
    )
    groups = _frequency_groups(train)
    history = DifficultyHistory()
    stats_log: list[TrainStats] = []
    reports: list[EvalReport] = []
    plans: list[EpochPlan] = []
    for epoch in range(1, config.total_epochs_T + 1):
        dump = _dump_embeddings(params, train)
        if epoch == 1:
            records = initial_scores(dump, history)
        else:
            records = delta_scores(
                dump_norms(dump), history, mode=config.alignment_mode, ordering=config.delta_ordering
            )
        norms = dict(history.table(epoch))
        plan = make_plan(records, epoch)
        params, stats = train_epoch(params, plan, train, hyper.lr, hyper.batch_size)
        report = _eval_epoch(params, valid, groups, hyper.threshold)
        _persist_epoch(out_dir, epoch, dump, records, norms, plan, stats, report)
        stats_log.append(stats)
        reports.append(report)
        plans.append(plan)
    return RunResult(params=params, stats=stats_log, reports=reports, plans=plans, history=history)


def run_spdcl(
    train: EncodedDataset,
    valid: EncodedDataset,
    config: CurriculumConfig,
    hyper: TrainHyper,
    out_dir: str | Path | None = None,
) -> RunResult:
    """The full self-paced dynamic curriculum loop.

    Epoch 1 scores the freshly initialized embedding dump by raw nuclear
    norm and trains on bin 1 only.  Every later epoch re-dumps embeddings
    (before training, so the dump reflects the previous epoch's parameters),
    re-scores by norm deltas, re-bins, and trains on the widened visible
    set.  Scoring always reads the float32-quantized embeddings, exactly
    what the dump files store, so rescoring a dump from disk reproduces the
    run's scores bit for bit.
    """

    def make_plan(records, epoch):
        return build_epoch_plan(records, config, epoch)

    return _run_loop(train, valid, config, hyper, out_dir, make_plan)


def run_baseline(
    train: EncodedDataset,
    valid: EncodedDataset,
    config: CurriculumConfig,
    hyper: TrainHyper,
    out_dir: str | Path | None = None,
) -> RunResult:
    """Plain full-data training, the no-curriculum comparison run.

    Every epoch shuffles the whole training set with the same
    (seed, epoch)-keyed generator the scheduler uses, so a curriculum run
    with bins_k=1 matches this loop exactly.  Embeddings are still dumped
    and scored each epoch, purely so the nuclear-norm trajectory is
    observable; the scores never influence the training order.
    """
    all_ids = sorted(train.sample_ids)

    def make_plan(records, epoch):
        perm = epoch_rng(config.shuffle_seed, epoch).permutation(len(all_ids))
        return EpochPlan(
            epoch=epoch,
            visible_bins=1,
            ordered_ids=[all_ids[i] for i in perm],
            bin_of={sid: 1 for sid in all_ids},
        )

    return _run_loop(train, valid, config, hyper, out_dir, make_plan)
