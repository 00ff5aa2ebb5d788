"""Model files: round trips are bit-exact, headers survive, junk is rejected."""

import json

import numpy as np
import pytest

from nnshield.models import (MODEL_FORMAT_VERSION, NONNEGATIVE, OVA_MODE,
                             LinearModel, build_tinyconv, linear_scores,
                             load_model, model_from_doc, model_to_doc,
                             probs_multiclass, save_model, tinyconv_scores,
                             train_multiclass)
from nnshield.nn import NONNEG, SgdConfig

DESK = dict(embed_dim=4, filters=8, width=8, stride=4, pad_len=256)


def sample_linear(seed=0):
    rng = np.random.default_rng(seed)
    return LinearModel(w=rng.uniform(0.0, 2.0, 12), b=-1.25, mode=NONNEGATIVE,
                       feature_space_id="a" * 64)


def sample_multiclass(seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, (40, 5))
    y = rng.integers(0, 3, 40)
    cfg = SgdConfig(learning_rate=0.3, epochs=2, batch_size=16, seed=seed)
    return train_multiclass(x, y, 3, OVA_MODE, cfg, hidden_dims=(8,))


def test_linear_round_trip_bit_exact(tmp_path):
    model = sample_linear()
    path = tmp_path / "linear.model"
    save_model(path, model)
    loaded = load_model(path)
    assert loaded.mode == model.mode
    assert loaded.lasso_lambda == model.lasso_lambda
    assert loaded.feature_space_id == model.feature_space_id
    assert loaded.b == model.b
    x = np.random.default_rng(1).uniform(0.0, 1.0, (100, 12))
    assert np.array_equal(linear_scores(loaded, x), linear_scores(model, x))


def test_tinyconv_round_trip_bit_exact(tmp_path):
    model = build_tinyconv(**DESK, constraint=NONNEG, eof_row_zeroed=True, seed=2)
    path = tmp_path / "conv.model"
    save_model(path, model)
    loaded = load_model(path)
    assert loaded.pad_len == model.pad_len
    assert loaded.constraint == NONNEG
    assert loaded.eof_row_zeroed is True
    seqs = np.random.default_rng(3).integers(0, 257, (100, model.pad_len))
    assert np.array_equal(tinyconv_scores(loaded, seqs), tinyconv_scores(model, seqs))


def test_multiclass_round_trip_bit_exact(tmp_path):
    model = sample_multiclass()
    path = tmp_path / "heads.model"
    save_model(path, model)
    loaded = load_model(path)
    assert loaded.k == 3
    assert loaded.mode == OVA_MODE
    assert loaded.trunk_frozen == model.trunk_frozen
    assert len(loaded.trunk) == len(model.trunk)
    x = np.random.default_rng(4).uniform(0.0, 1.0, (100, 5))
    assert np.array_equal(probs_multiclass(loaded, x), probs_multiclass(model, x))


def test_saved_bytes_are_stable(tmp_path):
    model = sample_linear(seed=5)
    a, b = tmp_path / "a.model", tmp_path / "b.model"
    save_model(a, model)
    save_model(b, model)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().endswith(b"\n")


def test_header_fields_present():
    doc = model_to_doc(sample_linear())
    assert doc["format_version"] == MODEL_FORMAT_VERSION
    header = doc["header"]
    assert header["model_kind"] == "linear"
    assert header["feature_space_id"] == "a" * 64
    # unused slots stay in the header so every kind shares one shape
    assert header["k"] is None
    assert header["head_mode"] is None


def test_unknown_kind_rejected():
    doc = model_to_doc(sample_linear())
    doc["header"]["model_kind"] = "forest"
    with pytest.raises(ValueError, match="model_kind"):
        model_from_doc(doc)


def test_future_format_version_rejected():
    doc = model_to_doc(sample_linear())
    doc["format_version"] = 99
    with pytest.raises(ValueError, match="format_version"):
        model_from_doc(doc)


def test_unsupported_object_rejected():
    with pytest.raises(TypeError, match="dict"):
        model_to_doc({"w": [1.0]})


def test_file_is_plain_json(tmp_path):
    path = tmp_path / "m.model"
    save_model(path, sample_linear())
    doc = json.loads(path.read_text())
    assert set(doc) == {"format_version", "header", "net"}
