import json
import struct

import numpy as np
import pytest

from spdcl.difficulty import DifficultyRecord
from spdcl.io import (
    DUMP_MAGIC,
    FormatError,
    RunConfig,
    TextSample,
    f32_roundtrip,
    load_run_config,
    read_dataset,
    read_embedding_dump,
    read_manifest,
    read_scores,
    write_dataset,
    write_embedding_dump,
    write_json_atomic,
    write_manifest,
    write_run_config,
    write_scores,
)
from spdcl.nucnorm import EmbeddingMatrix
from spdcl.scheduler import EpochPlan


# ------------------------------------------------------------ dataset files


def test_dataset_round_trip(tmp_path):
    samples = [
        TextSample("a", "hello world", ("x",)),
        TextSample("b", "unicode tøkens", ("x", "y")),
    ]
    path = tmp_path / "data.jsonl"
    write_dataset(path, samples)
    assert read_dataset(path) == samples
    # single-label records serialize the label as a bare string
    first = json.loads(path.read_text().splitlines()[0])
    assert first["labels"] == "x"


def test_dataset_rejects_duplicates_and_empty_labels(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id":"a","text":"t","labels":"x"}\n{"id":"a","text":"t","labels":"y"}\n')
    with pytest.raises(FormatError, match="duplicate"):
        read_dataset(path)
    path.write_text('{"id":"a","text":"t","labels":[]}\n')
    with pytest.raises(FormatError, match="label"):
        read_dataset(path)
    path.write_text("not json\n")
    with pytest.raises(FormatError, match="not valid JSON"):
        read_dataset(path)


# ---------------------------------------------------------- embedding dumps


def sample_dump():
    rng = np.random.default_rng(0)
    return [
        f32_roundtrip(EmbeddingMatrix(f"s{i}", rng.normal(size=(i + 1, 3))))
        for i in range(4)
    ]


def test_dump_round_trip_byte_identical(tmp_path):
    dump = sample_dump()
    first = tmp_path / "a.bin"
    second = tmp_path / "b.bin"
    write_embedding_dump(first, dump)
    write_embedding_dump(second, read_embedding_dump(first))
    assert first.read_bytes() == second.read_bytes()


def test_dump_values_survive_exactly(tmp_path):
    dump = sample_dump()
    path = tmp_path / "dump.bin"
    write_embedding_dump(path, dump)
    loaded = read_embedding_dump(path)
    assert [e.sample_id for e in loaded] == [e.sample_id for e in dump]
    for got, want in zip(loaded, dump):
        assert np.array_equal(got.values, want.values)


def test_dump_header_layout(tmp_path):
    path = tmp_path / "dump.bin"
    write_embedding_dump(path, [EmbeddingMatrix("ab", [[1.0, 2.0]])])
    blob = path.read_bytes()
    assert blob[:8] == DUMP_MAGIC
    version, count = struct.unpack("<IQ", blob[8:20])
    assert (version, count) == (1, 1)
    (id_len,) = struct.unpack("<I", blob[20:24])
    assert blob[24 : 24 + id_len] == b"ab"
    rows, cols = struct.unpack("<II", blob[24 + id_len : 32 + id_len])
    assert (rows, cols) == (1, 2)
    floats = np.frombuffer(blob[32 + id_len :], dtype="<f4")
    assert floats.tolist() == [1.0, 2.0]


def test_dump_rejects_corruption(tmp_path):
    path = tmp_path / "dump.bin"
    write_embedding_dump(path, sample_dump())
    blob = path.read_bytes()
    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXXXXXX" + blob[8:])
    with pytest.raises(FormatError, match="magic"):
        read_embedding_dump(bad_magic)
    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(blob[:-5])
    with pytest.raises(FormatError, match="truncated"):
        read_embedding_dump(truncated)
    trailing = tmp_path / "trail.bin"
    trailing.write_bytes(blob + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        read_embedding_dump(trailing)


def test_dump_rejects_duplicate_ids(tmp_path):
    with pytest.raises(FormatError, match="duplicate"):
        write_embedding_dump(
            tmp_path / "dup.bin",
            [EmbeddingMatrix("a", [[1.0]]), EmbeddingMatrix("a", [[2.0]])],
        )


# --------------------------------------------------------------- score files


def test_scores_round_trip(tmp_path):
    records = [
        DifficultyRecord("b", 2, -1.5, 0),
        DifficultyRecord("a", 2, 0.25, 1),
    ]
    norms = {"a": 3.5, "b": 1.25}
    path = tmp_path / "scores.jsonl"
    write_scores(path, records, norms)
    got_records, got_norms = read_scores(path)
    assert got_records == records
    assert got_norms == norms
    # parse-and-rewrite is byte-identical
    again = tmp_path / "again.jsonl"
    write_scores(again, got_records, got_norms)
    assert path.read_bytes() == again.read_bytes()


def test_scores_validation(tmp_path):
    path = tmp_path / "scores.jsonl"
    path.write_text('{"id":"a","epoch":1,"score":1.0,"rank":0,"norm":1.0}\n'
                    '{"id":"b","epoch":2,"score":1.0,"rank":1,"norm":1.0}\n')
    with pytest.raises(FormatError, match="mixes epochs"):
        read_scores(path)
    path.write_text('{"id":"a","epoch":1,"score":1.0,"rank":5,"norm":1.0}\n')
    with pytest.raises(FormatError, match="permutation"):
        read_scores(path)
    path.write_text('{"id":"a","epoch":1,"score":1.0}\n')
    with pytest.raises(FormatError, match="score record"):
        read_scores(path)


# ------------------------------------------------------------ manifest files


def test_manifest_round_trip(tmp_path):
    plan = EpochPlan(
        epoch=3,
        visible_bins=2,
        ordered_ids=["c", "a", "b"],
        bin_of={"a": 1, "b": 2, "c": 1, "d": 3},
    )
    path = tmp_path / "manifest.jsonl"
    write_manifest(path, plan)
    loaded = read_manifest(path)
    assert loaded.ordered_ids == plan.ordered_ids
    assert loaded.bin_of == plan.bin_of
    assert loaded.epoch == 3
    again = tmp_path / "again.jsonl"
    write_manifest(again, loaded)
    assert path.read_bytes() == again.read_bytes()


def test_manifest_rejects_duplicates(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text('{"epoch":1,"order":["a","a"],"bin_of":{"a":1}}\n')
    with pytest.raises(FormatError, match="duplicates"):
        read_manifest(path)


# ----------------------------------------------------------------- run config


def test_run_config_round_trip(tmp_path):
    config = RunConfig(bins_k=3, epochs_T=7, seed=11, task_kind="multilabel")
    path = tmp_path / "config.json"
    write_run_config(path, config)
    assert load_run_config(path) == config


def test_run_config_validation(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"bins_k": 0}')
    with pytest.raises(FormatError, match="bins_k"):
        load_run_config(path)
    path.write_text('{"mystery_knob": 3}')
    with pytest.raises(FormatError, match="unknown config keys"):
        load_run_config(path)
    path.write_text('{"task_kind": "regression"}')
    with pytest.raises(FormatError, match="task_kind"):
        load_run_config(path)
    path.write_text("{")
    with pytest.raises(FormatError, match="not valid JSON"):
        load_run_config(path)


def test_run_config_defaults_follow_reference_settings():
    config = RunConfig()
    assert config.seed == 2
    assert config.batch == 25
    assert config.max_len == 250


# ------------------------------------------------------------ atomic writes


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "out.json"
    write_json_atomic(target, {"x": 1})
    write_json_atomic(target, {"x": 2})
    assert json.loads(target.read_text()) == {"x": 2}
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


def test_f32_roundtrip_is_idempotent():
    rng = np.random.default_rng(1)
    emb = EmbeddingMatrix("s", rng.normal(size=(3, 4)))
    once = f32_roundtrip(emb)
    twice = f32_roundtrip(once)
    assert np.array_equal(once.values, twice.values)
