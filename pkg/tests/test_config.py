"""Config loading: validation, override precedence, budget extraction."""

import json

import pytest

from nnshield.attacks import AttackBudget
from nnshield.config import (SEED_ENV_VAR, ConfigError, attack_budget,
                             config_from_doc, load_config, resolved_doc)

BASE = {
    "task": "ngram_malware",
    "seed": 5,
    "output_dir": "runs/x",
    "dataset": {"n_samples": 20, "n_features": 8},
    "model": {"name": "m", "mode": "nonneg"},
    "attack": {"kind": "additive", "model": "m", "budgets": [1, 2]},
}


def write(tmp_path, doc):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(doc), encoding="utf-8")
    return p


def test_load_round_trip(tmp_path):
    cfg = load_config(write(tmp_path, BASE), env={})
    assert cfg.task == "ngram_malware"
    assert cfg.seed == 5
    assert str(cfg.output_dir) == "runs/x"
    assert resolved_doc(cfg)["attack"]["budgets"] == [1, 2]


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.json", env={})


def test_invalid_json(tmp_path):
    p = tmp_path / "run.json"
    p.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(p, env={})


def test_unknown_task():
    with pytest.raises(ConfigError, match="unknown task"):
        config_from_doc({**BASE, "task": "surprise"})


def test_unknown_top_key():
    with pytest.raises(ConfigError, match="top-level"):
        config_from_doc({**BASE, "extra": 1})


def test_unknown_section_key_names_task():
    doc = {**BASE, "dataset": {"n_samples": 20, "gram_len": 4}}
    config_from_doc(doc)  # legal for ngram
    doc["task"] = "spam"
    with pytest.raises(ConfigError, match="spam.*gram_len"):
        config_from_doc(doc)


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="missing required"):
        config_from_doc({"task": "spam"})


@pytest.mark.parametrize("seed", [-1, 1.5, "7", True])
def test_bad_seed_rejected(seed):
    with pytest.raises(ConfigError, match="seed"):
        config_from_doc({**BASE, "seed": seed})


def test_env_seed_overrides_file(tmp_path):
    cfg = load_config(write(tmp_path, BASE), env={SEED_ENV_VAR: "99"})
    assert cfg.seed == 99


def test_env_seed_must_be_int(tmp_path):
    with pytest.raises(ConfigError, match=SEED_ENV_VAR):
        load_config(write(tmp_path, BASE), env={SEED_ENV_VAR: "soon"})


def test_explicit_override_beats_env_seed(tmp_path):
    cfg = load_config(write(tmp_path, BASE), env={SEED_ENV_VAR: "99"},
                      overrides={"seed": 3})
    assert cfg.seed == 3


def test_dotted_override_reaches_sections(tmp_path):
    cfg = load_config(write(tmp_path, BASE), env={},
                      overrides={"model.mode": "lasso",
                                 "attack.budgets": [5],
                                 "dataset.noise_rate": 0.2})
    assert cfg.model["mode"] == "lasso"
    assert cfg.attack["budgets"] == [5]
    assert cfg.dataset["noise_rate"] == 0.2


def test_dotted_override_through_scalar_fails(tmp_path):
    with pytest.raises(ConfigError, match="not an object"):
        load_config(write(tmp_path, BASE), env={},
                    overrides={"seed.inner": 1})


def test_attack_budget_picks_budget_keys():
    b = attack_budget({"kind": "iga", "model": "m", "epsilon": 0.02,
                       "max_iters": 7, "l1_threshold": 50.0})
    assert b == AttackBudget(epsilon=0.02, max_iters=7, l1_threshold=50.0)
    # non-budget keys are ignored, absent keys keep defaults
    assert attack_budget({"kind": "iga"}) == AttackBudget()


def test_attack_budget_validates():
    with pytest.raises(ConfigError, match="bad attack budget"):
        attack_budget({"epsilon": -1.0})
