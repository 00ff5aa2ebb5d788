"""Run configuration: one JSON document drives every command.

A config names a task, a seed, an output directory, and three sections
(dataset, model, attack) whose legal keys depend on the task. Flags are
overrides of config fields; the resolved document is what lands in the run
manifest, so reproducing a run never needs the original command line.

Seed precedence: config file < NNSHIELD_SEED env var < explicit override.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .attacks import AttackBudget

NGRAM_TASK = "ngram_malware"
SPAM_TASK = "spam"
TINYCONV_TASK = "tinyconv_malware"
IMAGE_TASK = "image_multiclass"

TASKS = (NGRAM_TASK, SPAM_TASK, TINYCONV_TASK, IMAGE_TASK)

SEED_ENV_VAR = "NNSHIELD_SEED"

_TOP_KEYS = {"task", "seed", "output_dir", "dataset", "model", "attack"}

_SYNTH_KEYS = {"n_samples", "n_features", "planted_positive_tokens",
               "planted_negative_tokens", "noise_rate", "gram_len",
               "pos_len_range", "neg_len_range"}

_DATASET_KEYS = {
    NGRAM_TASK: _SYNTH_KEYS,
    SPAM_TASK: (_SYNTH_KEYS - {"gram_len", "pos_len_range", "neg_len_range"})
               | {"index_path"},
    TINYCONV_TASK: _SYNTH_KEYS,
    IMAGE_TASK: {"source", "test_fraction", "images_path", "labels_path",
                 "test_images_path", "test_labels_path"},
}

_SGD_KEYS = {"learning_rate", "momentum", "epochs", "batch_size"}

_MODEL_KEYS = {
    NGRAM_TASK: {"name", "mode", "lasso_lambda", "top_m"} | _SGD_KEYS,
    SPAM_TASK: {"name", "mode", "lasso_lambda", "top_words"} | _SGD_KEYS,
    TINYCONV_TASK: {"name", "constraint", "eof_row_zeroed", "embed_dim",
                    "filters", "width", "stride", "pad_len"} | _SGD_KEYS,
    IMAGE_TASK: {"name", "head", "warm_start", "hidden_dims"} | _SGD_KEYS,
}

_BUDGET_KEYS = {"max_insertions", "epsilon", "max_iters", "l1_threshold",
                "target_confidence"}

_ATTACK_KEYS = {
    NGRAM_TASK: {"kind", "model", "budgets"} | _BUDGET_KEYS,
    SPAM_TASK: {"kind", "model", "budgets"} | _BUDGET_KEYS,
    TINYCONV_TASK: {"kind", "model", "section_pcts"} | _BUDGET_KEYS,
    IMAGE_TASK: {"kind", "model", "source", "pairing", "p_values",
                 "n_images"} | _BUDGET_KEYS,
}


class ConfigError(ValueError):
    """Unusable run configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    task: str
    seed: int
    output_dir: Path
    dataset: dict
    model: dict
    attack: dict

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for section, known in (("dataset", _DATASET_KEYS[self.task]),
                               ("model", _MODEL_KEYS[self.task]),
                               ("attack", _ATTACK_KEYS[self.task])):
            value = getattr(self, section)
            if not isinstance(value, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            unknown = sorted(set(value) - known)
            if unknown:
                raise ConfigError(f"unknown {section} key(s) for task "
                                  f"{self.task!r}: {unknown}")


def _set_dotted(doc: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    node = doc
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {dotted!r}: {part!r} is not an object")
    node[parts[-1]] = value


def config_from_doc(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level config key(s): {unknown}")
    missing = sorted(k for k in ("task", "seed", "output_dir") if k not in doc)
    if missing:
        raise ConfigError(f"config is missing required key(s): {missing}")
    if not isinstance(doc["output_dir"], str) or not doc["output_dir"]:
        raise ConfigError("output_dir must be a non-empty string")
    return RunConfig(task=doc["task"], seed=doc["seed"],
                     output_dir=Path(doc["output_dir"]),
                     dataset=dict(doc.get("dataset", {})),
                     model=dict(doc.get("model", {})),
                     attack=dict(doc.get("attack", {})))


def load_config(path, *, overrides: dict | None = None,
                env: dict | None = None) -> RunConfig:
    """Read a config file, then apply the env seed and explicit overrides.

    overrides maps dotted paths to values, e.g. {"model.mode": "lasso"}.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc

    env = os.environ if env is None else env
    if SEED_ENV_VAR in env:
        raw = env[SEED_ENV_VAR]
        try:
            doc["seed"] = int(raw)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None
    for dotted, value in (overrides or {}).items():
        _set_dotted(doc, dotted, value)
    return config_from_doc(doc)


def resolved_doc(cfg: RunConfig) -> dict:
    """The fully resolved configuration as plain JSON (manifest payload)."""
    return {"task": cfg.task, "seed": cfg.seed,
            "output_dir": str(cfg.output_dir), "dataset": dict(cfg.dataset),
            "model": dict(cfg.model), "attack": dict(cfg.attack)}


def attack_budget(attack: dict) -> AttackBudget:
    """Build the budget from whichever budget keys the attack section sets."""
    kwargs = {k: attack[k] for k in _BUDGET_KEYS if attack.get(k) is not None}
    try:
        return AttackBudget(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"bad attack budget: {exc}") from exc
