"""Pipeline commands behind the CLI: generate, train, attack, report, inspect.

Every command reads a RunConfig and works inside cfg.output_dir:

    dataset/                 written by generate (corpus, labels, ground truth,
                             split); ingested datasets only get the split file
    space.json               feature space shared by every model of a run
    model-<name>.json        one file per trained model variant
    metrics-<name>.csv|json  clean test metrics (CSV for binary tasks)
    roc-<name>.csv           ROC curve (binary tasks)
    attack-<name>-<kind>/    outcomes, evasion/control curves, attacked
                             artifacts, compliance table
    report/comparison.json   consolidated accuracy-vs-defense table
    manifest.json            per-step resolved config + input/output hashes
    timings.json             wall-clock seconds per step

Rerunning any command with the same config rewrites byte-identical files;
timings.json is the single deliberate exception (wall time is not
reproducible), so it is not part of manifest hashing either.

The comparison table is emitted as JSON: the pinned CSV schemas cover
metrics, ROC, and evasion curves only, and comparison rows carry nested
curve data that does not flatten into a fixed column set.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import (additive_attack, fgsm_append_with_control,
                      targeted_confidence_sweep, transfer_attack)
from .binfmt import content_equal_except_unused, parse, serialize
from .config import (IMAGE_TASK, NGRAM_TASK, SPAM_TASK, TINYCONV_TASK,
                     ConfigError, RunConfig, attack_budget, resolved_doc)
from .features import (BYTES, TOYEXE, WORDS, ImageSample, SynthSpec,
                       build_ngram_space, build_word_space, featurize_bytes,
                       featurize_text, generate_synthetic, load_idx_images,
                       load_mail_index, save_idx, space_from_doc,
                       space_to_doc, stack_dense, write_mail_corpus)
from .ioutil import canonical_dumps, sha256_hex, write_bytes_atomic, write_text_atomic
from .metrics import (ComparisonEntry, EvasionCurve, compute_metrics,
                      defense_comparison, emit_report, roc_curve)
from .models import (LINEAR_KIND, MULTICLASS_KIND, NONNEGATIVE, OVA_MODE,
                     SOFTMAX_MODE, TINYCONV_KIND, build_tinyconv,
                     exes_to_sequences, linear_scores, load_model,
                     predict_linear, predict_multiclass, save_model,
                     tinyconv_scores, train_linear, train_multiclass,
                     train_tinyconv)
from .nn import NONNEG, UNCONSTRAINED, SgdConfig

MANIFEST_NAME = "manifest.json"
TIMINGS_NAME = "timings.json"

DIGITS_SOURCE = "sklearn_digits"

ADDITIVE_KIND = "additive"
APPEND_KIND = "append_fgsm"
IGA_KIND = "iga"
FGSM_KIND = "fgsm"
TRANSFER_KIND = "transfer"

OUTCOMES_CSV_HEADER = ("x,sample,success,perturbation_size,"
                       "achieved_confidence,iterations_used,failure_reason")
COMPLIANCE_CSV_HEADER = "x,sample,ok"

_SPLIT_STREAM = 101  # rng stream tag so the split never aliases training draws


class AuditError(RuntimeError):
    """A trained model violates its declared constraint; maps to exit 1."""


class ComplianceError(RuntimeError):
    """An attack artifact broke the additions-only threat model; exit 1."""


# --------------------------------------------------------------------------
# small shared helpers

def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _fmt6(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.6g" % value


def _csv_text(header: str, rows) -> str:
    return "\n".join([header, *rows]) + "\n"


def _sha256_file(path: Path) -> str:
    return sha256_hex(path.read_bytes())


def _model_name(model_cfg: dict) -> str:
    name = model_cfg.get("name")
    if not isinstance(name, str) or not name or "/" in name:
        raise ConfigError(f"model.name must be a plain non-empty string, got {name!r}")
    return name


def _sgd_config(model_cfg: dict, seed: int, *, learning_rate: float,
                momentum: float = 0.9, epochs: int, batch_size: int = 32) -> SgdConfig:
    return SgdConfig(learning_rate=model_cfg.get("learning_rate", learning_rate),
                     momentum=model_cfg.get("momentum", momentum),
                     epochs=model_cfg.get("epochs", epochs),
                     batch_size=model_cfg.get("batch_size", batch_size),
                     seed=seed)


def _audit_net(net, *, extra=()) -> None:
    """Independent post-train check: constrained weights must be >= 0."""
    for li, layer in enumerate(net):
        if layer.constraint != NONNEG:
            continue
        for p, pname, is_weight in zip(layer.params(), layer.param_names(),
                                       layer.weight_flags()):
            if is_weight and p.size and float(p.min()) < 0.0:
                raise AuditError(
                    f"layer {li} ({layer.kind}) parameter {pname} has negative "
                    f"entries (min {p.min():.6g})")
    for what, arr in extra:
        if arr.size and float(arr.min()) < 0.0:
            raise AuditError(f"{what} has negative entries (min {arr.min():.6g})")


# --------------------------------------------------------------------------
# manifest and timing bookkeeping

def _rel_or_abs(path: Path, output_dir: Path) -> str:
    path = Path(path)
    try:
        return path.resolve().relative_to(output_dir.resolve()).as_posix()
    except ValueError:
        return path.resolve().as_posix()


def _update_json(path: Path, mutate) -> None:
    doc = json.loads(path.read_text(encoding="utf-8")) if path.is_file() else {}
    mutate(doc)
    write_text_atomic(path, canonical_dumps(doc))


def _record_step(cfg: RunConfig, step: str, inputs, outputs, seconds: float) -> None:
    out = cfg.output_dir

    def hashes(paths):
        return {_rel_or_abs(Path(p), out): _sha256_file(Path(p)) for p in paths}

    def mutate_manifest(doc):
        doc["version"] = __version__
        doc.setdefault("steps", {})[step] = {
            "config": resolved_doc(cfg),
            "inputs": hashes(inputs),
            "outputs": hashes(outputs),
        }

    def mutate_timings(doc):
        doc.setdefault("steps", {})[step] = {"seconds": seconds}

    _update_json(out / MANIFEST_NAME, mutate_manifest)
    _update_json(out / TIMINGS_NAME, mutate_timings)


def verify_manifest(output_dir) -> list[str]:
    """Re-hash every file the manifest mentions; returns mismatch messages."""
    output_dir = Path(output_dir)
    manifest_path = _require_file(output_dir / MANIFEST_NAME, "manifest")
    doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    problems = []
    for step, record in sorted(doc.get("steps", {}).items()):
        for role in ("inputs", "outputs"):
            for rel, digest in sorted(record.get(role, {}).items()):
                path = Path(rel) if Path(rel).is_absolute() else output_dir / rel
                if not path.is_file():
                    problems.append(f"{step}: missing {role[:-1]} {rel}")
                elif _sha256_file(path) != digest:
                    problems.append(f"{step}: hash mismatch for {rel}")
    return problems


# --------------------------------------------------------------------------
# dataset plumbing

@dataclass(frozen=True)
class LoadedCorpus:
    """A labeled sample corpus plus its frozen train/test split."""

    names: list
    samples: list            # bytes, text, or ToyExe depending on the task
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray

    def train_samples(self):
        return [self.samples[i] for i in self.train_idx]


def _stratified_split(labels: np.ndarray, test_fraction: float, seed: int):
    """Per-class shuffle, first test_fraction of each class to the test side."""
    rng = np.random.default_rng([seed, _SPLIT_STREAM])
    test = []
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        perm = idx[rng.permutation(len(idx))]
        n_test = max(1, int(round(test_fraction * len(idx))))
        test.extend(perm[:n_test].tolist())
    test_set = set(test)
    train = [i for i in range(len(labels)) if i not in test_set]
    return np.array(train, dtype=np.int64), np.array(sorted(test), dtype=np.int64)


def _split_path(cfg: RunConfig) -> Path:
    return cfg.output_dir / "dataset" / "split.json"


def _write_split(cfg: RunConfig, names, labels) -> Path:
    train_idx, test_idx = _stratified_split(labels, 0.25, cfg.seed)
    doc = {"train": [names[i] for i in train_idx],
           "test": [names[i] for i in test_idx]}
    path = _split_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_text_atomic(path, canonical_dumps(doc))
    return path


def _apply_split(cfg: RunConfig, names, samples, labels) -> LoadedCorpus:
    if not _split_path(cfg).is_file():
        _write_split(cfg, names, labels)  # ingested corpora split lazily
    doc = json.loads(_split_path(cfg).read_text(encoding="utf-8"))
    by_name = {name: i for i, name in enumerate(names)}
    try:
        train = np.array([by_name[n] for n in doc["train"]], dtype=np.int64)
        test = np.array([by_name[n] for n in doc["test"]], dtype=np.int64)
    except KeyError as exc:
        raise ConfigError(f"split file names unknown sample {exc.args[0]!r}; "
                          f"regenerate the dataset") from None
    return LoadedCorpus(names, samples, labels, train, test)


def _synth_spec(cfg: RunConfig) -> SynthSpec:
    mode = {NGRAM_TASK: BYTES, SPAM_TASK: WORDS, TINYCONV_TASK: TOYEXE}[cfg.task]
    d = cfg.dataset
    try:
        return SynthSpec(
            mode=mode,
            n_samples=d["n_samples"],
            n_features=d["n_features"],
            planted_positive_tokens=tuple(d["planted_positive_tokens"]),
            planted_negative_tokens=tuple(d["planted_negative_tokens"]),
            noise_rate=d["noise_rate"],
            seed=cfg.seed,
            gram_len=d.get("gram_len", 6),
            pos_len_range=tuple(d["pos_len_range"]) if d.get("pos_len_range") else None,
            neg_len_range=tuple(d["neg_len_range"]) if d.get("neg_len_range") else None,
        )
    except KeyError as exc:
        raise ConfigError(f"dataset section is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"bad dataset section: {exc}") from exc


def _labels_csv_text(names, labels) -> str:
    rows = [f"{name},{int(label)}" for name, label in zip(names, labels)]
    return _csv_text("file,label", rows)


def _read_labels_csv(path: Path):
    lines = _require_file(path, "labels file").read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "file,label":
        raise ConfigError(f"{path} does not start with a 'file,label' header")
    names, labels = [], []
    for line in lines[1:]:
        name, label = line.rsplit(",", 1)
        names.append(name)
        labels.append(int(label))
    return names, np.array(labels, dtype=np.int64)


def _printable_token(token) -> str:
    if isinstance(token, bytes):
        text = token.decode("latin-1")
        return text if text.isascii() and text.isprintable() else f"0x{token.hex()}"
    return token


def _load_corpus(cfg: RunConfig) -> LoadedCorpus:
    dataset_dir = cfg.output_dir / "dataset"
    if cfg.task == SPAM_TASK and cfg.dataset.get("index_path"):
        index = _require_file(Path(cfg.dataset["index_path"]), "mail index")
        texts, labels = load_mail_index(index)
        names = [f"mail_{i:05d}" for i in range(len(texts))]
        return _apply_split(cfg, names, texts, labels)

    if cfg.task == SPAM_TASK:
        index = _require_file(dataset_dir / "mail" / "index.txt", "dataset index")
        texts, labels = load_mail_index(index)
        names = [line.split(maxsplit=1)[1]
                 for line in index.read_text(encoding="utf-8").splitlines() if line]
        return _apply_split(cfg, names, texts, labels)

    names, labels = _read_labels_csv(dataset_dir / "labels.csv")
    corpus_dir = dataset_dir / "corpus"
    raws = [_require_file(corpus_dir / name, "corpus file").read_bytes()
            for name in names]
    samples = [parse(raw) for raw in raws] if cfg.task == TINYCONV_TASK else raws
    return _apply_split(cfg, names, samples, labels)


def _digits_arrays():
    from sklearn.datasets import load_digits

    bunch = load_digits()
    pixels = np.round(bunch.images * (255.0 / 16.0)).astype(np.uint8)
    return pixels, bunch.target.astype(np.int64)


def _load_images(cfg: RunConfig) -> tuple[list, list]:
    d = cfg.dataset
    if d.get("images_path"):
        needed = ("images_path", "labels_path", "test_images_path", "test_labels_path")
        missing = sorted(k for k in needed if not d.get(k))
        if missing:
            raise ConfigError(f"ingested image dataset needs key(s): {missing}")
        train = load_idx_images(_require_file(Path(d["images_path"]), "images file"),
                                _require_file(Path(d["labels_path"]), "labels file"))
        test = load_idx_images(
            _require_file(Path(d["test_images_path"]), "test images file"),
            _require_file(Path(d["test_labels_path"]), "test labels file"))
        return train, test
    dataset_dir = cfg.output_dir / "dataset"
    train = load_idx_images(_require_file(dataset_dir / "train-images.idx", "dataset"),
                            _require_file(dataset_dir / "train-labels.idx", "dataset"))
    test = load_idx_images(_require_file(dataset_dir / "test-images.idx", "dataset"),
                           _require_file(dataset_dir / "test-labels.idx", "dataset"))
    return train, test


def _flatten_images(images) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([img.pixels.reshape(-1) for img in images])
    y = np.array([img.label for img in images], dtype=np.int64)
    return x, y


# --------------------------------------------------------------------------
# generate

def cmd_generate(cfg: RunConfig) -> list[Path]:
    started = time.perf_counter()
    dataset_dir = cfg.output_dir / "dataset"
    dataset_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if cfg.task == IMAGE_TASK:
        source = cfg.dataset.get("source")
        if cfg.dataset.get("images_path"):
            raise ConfigError("nothing to generate: the config ingests IDX paths")
        if source != DIGITS_SOURCE:
            raise ConfigError(f"unknown image dataset source {source!r}; "
                              f"expected {DIGITS_SOURCE!r}")
        fraction = cfg.dataset.get("test_fraction", 0.25)
        if not 0.0 < fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {fraction}")
        pixels, labels = _digits_arrays()
        train_idx, test_idx = _stratified_split(labels, fraction, cfg.seed)
        for stem, idx in (("train", train_idx), ("test", test_idx)):
            images_path = dataset_dir / f"{stem}-images.idx"
            labels_path = dataset_dir / f"{stem}-labels.idx"
            save_idx(images_path, labels_path, pixels[idx], labels[idx])
            written += [images_path, labels_path]
    else:
        if cfg.dataset.get("index_path"):
            raise ConfigError("nothing to generate: the config ingests a "
                              "mail index")
        corpus = generate_synthetic(_synth_spec(cfg))
        if cfg.task == SPAM_TASK:
            index = write_mail_corpus(dataset_dir / "mail", corpus.samples,
                                      corpus.labels)
            names = [line.split(maxsplit=1)[1]
                     for line in index.read_text(encoding="utf-8").splitlines()]
            written += sorted((dataset_dir / "mail").iterdir())
        else:
            suffix = ".exe" if cfg.task == TINYCONV_TASK else ".bin"
            corpus_dir = dataset_dir / "corpus"
            corpus_dir.mkdir(exist_ok=True)
            names = []
            for i, sample in enumerate(corpus.samples):
                name = f"sample_{i:05d}{suffix}"
                data = serialize(sample) if cfg.task == TINYCONV_TASK else sample
                write_bytes_atomic(corpus_dir / name, data)
                names.append(name)
                written.append(corpus_dir / name)
            labels_path = dataset_dir / "labels.csv"
            write_text_atomic(labels_path, _labels_csv_text(names, corpus.labels))
            written.append(labels_path)
        truth = {"planted_positive": [_printable_token(t)
                                      for t in corpus.planted_positive],
                 "planted_negative": [_printable_token(t)
                                      for t in corpus.planted_negative]}
        truth_path = dataset_dir / "ground_truth.json"
        write_text_atomic(truth_path, canonical_dumps(truth))
        written.append(truth_path)
        written.append(_write_split(cfg, names, corpus.labels))

    _record_step(cfg, "generate", inputs=[], outputs=written,
                 seconds=time.perf_counter() - started)
    return written


# --------------------------------------------------------------------------
# train

def _train_linear_task(cfg: RunConfig):
    corpus = _load_corpus(cfg)
    model_cfg = cfg.model
    if cfg.task == NGRAM_TASK:
        space = build_ngram_space(corpus.train_samples(),
                                  n=cfg.dataset.get("gram_len", 6),
                                  top_m=model_cfg.get("top_m", 200))
        vectors = [featurize_bytes(space, s) for s in corpus.samples]
    else:
        space = build_word_space(corpus.train_samples(),
                                 top_k=model_cfg.get("top_words", 500))
        vectors = [featurize_text(space, s) for s in corpus.samples]
    x = stack_dense(vectors)
    mode = model_cfg.get("mode", NONNEGATIVE)
    if mode == "nonneg":  # CLI shorthand for the constrained mode
        mode = NONNEGATIVE
    sgd = _sgd_config(model_cfg, cfg.seed, learning_rate=0.5, epochs=40)
    model = train_linear(x[corpus.train_idx], corpus.labels[corpus.train_idx],
                         mode, sgd,
                         lasso_lambda=model_cfg.get("lasso_lambda", 0.0),
                         feature_space_id=space.space_id)
    if mode == NONNEGATIVE and model.w.size and float(model.w.min()) < 0.0:
        raise AuditError(f"linear coefficient vector w has negative entries "
                         f"(min {model.w.min():.6g})")
    scores = linear_scores(model, x[corpus.test_idx])
    return model, space, scores, corpus.labels[corpus.test_idx]


def _tinyconv_constraint(model_cfg: dict) -> str:
    raw = model_cfg.get("constraint", "nonneg")
    mapping = {"nonneg": NONNEG, "none": UNCONSTRAINED}
    if raw not in mapping:
        raise ConfigError(f"model.constraint must be one of {sorted(mapping)}, "
                          f"got {raw!r}")
    return mapping[raw]


def _train_tinyconv_task(cfg: RunConfig):
    corpus = _load_corpus(cfg)
    model_cfg = cfg.model
    net = build_tinyconv(embed_dim=model_cfg.get("embed_dim", 4),
                         filters=model_cfg.get("filters", 8),
                         width=model_cfg.get("width", 8),
                         stride=model_cfg.get("stride", 4),
                         pad_len=model_cfg.get("pad_len", 4096),
                         constraint=_tinyconv_constraint(model_cfg),
                         eof_row_zeroed=bool(model_cfg.get("eof_row_zeroed", False)),
                         seed=cfg.seed)
    seqs = exes_to_sequences(corpus.samples, net.pad_len)
    sgd = _sgd_config(model_cfg, cfg.seed, learning_rate=0.1, epochs=8)
    model = train_tinyconv(net, seqs[corpus.train_idx],
                           corpus.labels[corpus.train_idx], sgd)
    if model.constraint == NONNEG:
        _audit_net(model.net, extra=[("gated conv response bias bf",
                                      model.net[1].bf)])
    scores = tinyconv_scores(model, seqs[corpus.test_idx])
    return model, scores, corpus.labels[corpus.test_idx]


def _train_image_task(cfg: RunConfig):
    train, test = _load_images(cfg)
    x_train, y_train = _flatten_images(train)
    x_test, y_test = _flatten_images(test)
    model_cfg = cfg.model
    head = model_cfg.get("head", SOFTMAX_MODE)
    if head not in (SOFTMAX_MODE, "ova"):
        raise ConfigError(f"model.head must be 'softmax' or 'ova', got {head!r}")
    mode = OVA_MODE if head == "ova" else SOFTMAX_MODE
    sgd = _sgd_config(model_cfg, cfg.seed, learning_rate=0.1, epochs=40)

    warm = None
    warm_path = model_cfg.get("warm_start")
    if warm_path is not None:
        path = Path(warm_path)
        if not path.is_absolute():
            path = cfg.output_dir / path
        warm = load_model(_require_file(path, "warm-start model"))
        if not hasattr(warm, "trunk"):
            raise ConfigError(f"warm-start model {path} is not a multiclass head")

    k = int(max(y_train.max(), y_test.max())) + 1
    model = train_multiclass(x_train, y_train, k, mode, sgd,
                             hidden_dims=tuple(model_cfg.get("hidden_dims", [32])),
                             warm_start=warm)
    if mode == OVA_MODE:
        _audit_net([model.out])
    predicted = np.array([predict_multiclass(model, x).predicted_class
                          for x in x_test])
    accuracy = float(np.mean(predicted == y_test))
    return model, accuracy, len(y_test)


def cmd_train(cfg: RunConfig) -> Path:
    started = time.perf_counter()
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    name = _model_name(cfg.model)
    model_path = cfg.output_dir / f"model-{name}.json"
    outputs = [model_path]

    if cfg.task == IMAGE_TASK:
        model, accuracy, n_test = _train_image_task(cfg)
        save_model(model_path, model)
        metrics_path = cfg.output_dir / f"metrics-{name}.json"
        write_text_atomic(metrics_path, canonical_dumps(
            {"model": name, "accuracy": accuracy, "n_test": n_test}))
        outputs.append(metrics_path)
    else:
        if cfg.task == TINYCONV_TASK:
            model, scores, test_labels = _train_tinyconv_task(cfg)
        else:
            model, space, scores, test_labels = _train_linear_task(cfg)
            space_path = cfg.output_dir / "space.json"
            write_text_atomic(space_path, canonical_dumps(space_to_doc(space)))
            outputs.append(space_path)
        save_model(model_path, model)
        metrics_path = cfg.output_dir / f"metrics-{name}.csv"
        emit_report(compute_metrics(scores, test_labels), metrics_path,
                    "csv", label=name)
        roc_path = cfg.output_dir / f"roc-{name}.csv"
        emit_report(roc_curve(scores, test_labels), roc_path, "csv")
        outputs += [metrics_path, roc_path]

    inputs = _train_inputs(cfg)
    _record_step(cfg, f"train-{name}", inputs=inputs, outputs=outputs,
                 seconds=time.perf_counter() - started)
    return model_path


def _train_inputs(cfg: RunConfig) -> list[Path]:
    dataset_dir = cfg.output_dir / "dataset"
    if cfg.task == IMAGE_TASK:
        d = cfg.dataset
        warm = []
        if cfg.model.get("warm_start"):
            path = Path(cfg.model["warm_start"])
            warm = [path if path.is_absolute() else cfg.output_dir / path]
        if d.get("images_path"):
            return [Path(d[k]) for k in ("images_path", "labels_path",
                                         "test_images_path",
                                         "test_labels_path")] + warm
        return [dataset_dir / f"{stem}-{part}.idx"
                for stem in ("train", "test")
                for part in ("images", "labels")] + warm
    if cfg.task == SPAM_TASK:
        if cfg.dataset.get("index_path"):
            return [Path(cfg.dataset["index_path"]), _split_path(cfg)]
        return sorted((dataset_dir / "mail").iterdir()) + [_split_path(cfg)]
    names, _ = _read_labels_csv(dataset_dir / "labels.csv")
    return ([dataset_dir / "corpus" / n for n in names]
            + [dataset_dir / "labels.csv", _split_path(cfg)])


# --------------------------------------------------------------------------
# attack

def _attack_dir(cfg: RunConfig, name: str, kind: str) -> Path:
    path = cfg.output_dir / f"attack-{name}-{kind}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_named_model(cfg: RunConfig, name: str):
    return load_model(_require_file(cfg.output_dir / f"model-{name}.json",
                                    f"model {name!r}"))


def _outcome_row(x, sample, outcome, extra: str = "") -> str:
    reason = outcome.failure_reason or ""
    row = (f"{_fmt6(x)},{sample},{int(outcome.success)},"
           f"{_fmt6(outcome.perturbation_size)},"
           f"{_fmt6(outcome.achieved_confidence)},{outcome.iterations_used},"
           f"{reason}")
    return row + extra


def _additive_attack_cmd(cfg: RunConfig, name: str, attack_dir: Path):
    model = _load_named_model(cfg, name)
    space_doc = json.loads(_require_file(cfg.output_dir / "space.json",
                                         "feature space").read_text("utf-8"))
    space = space_from_doc(space_doc)
    if model.feature_space_id != space.space_id:
        raise ConfigError(
            f"model {name!r} was trained on feature space "
            f"{model.feature_space_id}, dataset has {space.space_id}")
    budgets = cfg.attack.get("budgets")
    if not budgets or list(budgets) != sorted(set(int(b) for b in budgets)):
        raise ConfigError("attack.budgets must be a strictly increasing list "
                          "of insertion counts")

    corpus = _load_corpus(cfg)
    featurize = featurize_bytes if cfg.task == NGRAM_TASK else featurize_text
    targets = []
    for i in corpus.test_idx:
        if corpus.labels[i] != 1:
            continue
        vec = featurize(space, corpus.samples[i])
        decision, _ = predict_linear(model, vec.dense())
        if decision:
            targets.append((corpus.names[i], vec))
    if not targets:
        raise ConfigError("no test positives are classified positive; "
                          "nothing to attack")

    outcome_rows, compliance_rows, additions, points = [], [], {}, []
    violations = 0
    for b in budgets:
        wins = 0
        added_at_b = {}
        for sample_name, vec in targets:
            outcome, attacked = additive_attack(
                model, vec, _budget_with(cfg.attack, max_insertions=int(b)))
            wins += int(outcome.success)
            ok = set(vec.set_indices) <= set(attacked.set_indices)
            violations += int(not ok)
            outcome_rows.append(_outcome_row(b, sample_name, outcome))
            compliance_rows.append(f"{_fmt6(b)},{sample_name},{int(ok)}")
            added = sorted(set(attacked.set_indices) - set(vec.set_indices))
            added_at_b[sample_name] = {
                "indices": added,
                "tokens": [_printable_token(space.vocabulary[i]) for i in added]}
        additions[str(b)] = added_at_b
        points.append((float(b), wins / len(targets), len(targets)))

    curve = EvasionCurve(axis_name="max_insertions", points=tuple(points))
    emit_report(curve, attack_dir / "evasion.csv", "csv")
    write_text_atomic(attack_dir / "outcomes.csv",
                      _csv_text(OUTCOMES_CSV_HEADER, outcome_rows))
    write_text_atomic(attack_dir / "compliance.csv",
                      _csv_text(COMPLIANCE_CSV_HEADER, compliance_rows))
    write_text_atomic(attack_dir / "additions.json", canonical_dumps(additions))
    outputs = [attack_dir / "evasion.csv", attack_dir / "outcomes.csv",
               attack_dir / "compliance.csv", attack_dir / "additions.json"]
    if violations:
        raise ComplianceError(
            f"{violations} attacked vector(s) dropped features; see "
            f"{attack_dir / 'compliance.csv'}")
    return outputs


def _budget_with(attack_cfg: dict, **forced):
    merged = {k: attack_cfg.get(k) for k in
              ("max_insertions", "epsilon", "max_iters", "l1_threshold",
               "target_confidence")}
    merged.update(forced)
    return attack_budget({k: v for k, v in merged.items() if v is not None})


def _append_attack_cmd(cfg: RunConfig, name: str, attack_dir: Path):
    model = _load_named_model(cfg, name)
    if not hasattr(model, "pad_len"):
        raise ConfigError(f"model {name!r} is not a byte convnet")
    pcts = cfg.attack.get("section_pcts")
    if not pcts or any(p <= 0 for p in pcts) or list(pcts) != sorted(pcts):
        raise ConfigError("attack.section_pcts must be an ascending list of "
                          "positive fractions")
    budget = _budget_with(cfg.attack)

    corpus = _load_corpus(cfg)
    positive_idx = [i for i in corpus.test_idx if corpus.labels[i] == 1]
    seqs = exes_to_sequences([corpus.samples[i] for i in positive_idx],
                             model.pad_len)
    scores = tinyconv_scores(model, seqs)
    targets = [(corpus.names[i], corpus.samples[i])
               for i, s in zip(positive_idx, scores) if s >= 0.5]
    if not targets:
        raise ConfigError("no test positives are classified malicious; "
                          "nothing to attack")

    outcome_rows, compliance_rows = [], []
    grad_points, control_points = [], []
    outputs = []
    violations = 0
    for j, pct in enumerate(pcts):
        wins = control_wins = 0
        pct_dir = attack_dir / "attacked" / f"pct-{pct:g}"
        pct_dir.mkdir(parents=True, exist_ok=True)
        for i, (sample_name, exe) in enumerate(targets):
            rng = np.random.default_rng([cfg.seed, i, j])
            outcome, attacked, control = fgsm_append_with_control(
                model, exe, pct, budget, rng)
            wins += int(outcome.success)
            control_wins += int(control)
            artifact = pct_dir / sample_name
            write_bytes_atomic(artifact, serialize(attacked))
            outputs.append(artifact)
            ok = content_equal_except_unused(exe, parse(artifact.read_bytes()))
            violations += int(not ok)
            outcome_rows.append(_outcome_row(pct, sample_name, outcome,
                                             extra=f",{int(control)}"))
            compliance_rows.append(f"{_fmt6(pct)},{sample_name},{int(ok)}")
        grad_points.append((pct, wins / len(targets), len(targets)))
        control_points.append((pct, control_wins / len(targets), len(targets)))

    emit_report(EvasionCurve(axis_name="section_pct", points=tuple(grad_points)),
                attack_dir / "evasion.csv", "csv")
    emit_report(EvasionCurve(axis_name="section_pct", points=tuple(control_points)),
                attack_dir / "control.csv", "csv")
    write_text_atomic(attack_dir / "outcomes.csv",
                      _csv_text(OUTCOMES_CSV_HEADER + ",control_success",
                                outcome_rows))
    write_text_atomic(attack_dir / "compliance.csv",
                      _csv_text(COMPLIANCE_CSV_HEADER, compliance_rows))
    outputs += [attack_dir / "evasion.csv", attack_dir / "control.csv",
                attack_dir / "outcomes.csv", attack_dir / "compliance.csv"]
    if violations:
        raise ComplianceError(
            f"{violations} attacked file(s) modified pre-existing content; "
            f"see {attack_dir / 'compliance.csv'}")
    return outputs


def _image_attack_samples(cfg: RunConfig) -> list[ImageSample]:
    _, test = _load_images(cfg)
    n = cfg.attack.get("n_images", 100)
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"attack.n_images must be a positive integer, got {n!r}")
    return test[:n]


def _sweep_attack_cmd(cfg: RunConfig, name: str, kind: str, attack_dir: Path):
    model = _load_named_model(cfg, name)
    p_values = cfg.attack.get("p_values")
    if not p_values:
        raise ConfigError("attack.p_values must list the target confidences")
    images = _image_attack_samples(cfg)
    curve = targeted_confidence_sweep(
        model, images, [float(p) for p in p_values], attack=kind,
        pairing=cfg.attack.get("pairing", "all_pairs"),
        budget=_budget_with(cfg.attack), seed=cfg.seed)
    emit_report(curve, attack_dir / "evasion.csv", "csv")
    return [attack_dir / "evasion.csv"]


def _transfer_attack_cmd(cfg: RunConfig, victim_name: str, attack_dir: Path):
    source_name = cfg.attack.get("source")
    if not source_name:
        raise ConfigError("attack.source must name the substitute model")
    source = _load_named_model(cfg, source_name)
    victim = _load_named_model(cfg, victim_name)
    images = _image_attack_samples(cfg)
    rate = transfer_attack(source, victim, images, _budget_with(cfg.attack),
                           seed=cfg.seed)
    path = attack_dir / "transfer.json"
    write_text_atomic(path, canonical_dumps(
        {"source": source_name, "victim": victim_name, "rate": rate,
         "n_images": len(images)}))
    return [path]


def cmd_attack(cfg: RunConfig) -> Path:
    started = time.perf_counter()
    name = cfg.attack.get("model")
    if not name:
        raise ConfigError("attack.model must name a trained model")
    kind = cfg.attack.get("kind")
    task_kinds = {
        NGRAM_TASK: (ADDITIVE_KIND,),
        SPAM_TASK: (ADDITIVE_KIND,),
        TINYCONV_TASK: (APPEND_KIND,),
        IMAGE_TASK: (IGA_KIND, FGSM_KIND, TRANSFER_KIND),
    }[cfg.task]
    if kind not in task_kinds:
        raise ConfigError(f"attack.kind for task {cfg.task!r} must be one of "
                          f"{sorted(task_kinds)}, got {kind!r}")

    attack_dir = _attack_dir(cfg, name, kind)
    if kind == ADDITIVE_KIND:
        outputs = _additive_attack_cmd(cfg, name, attack_dir)
    elif kind == APPEND_KIND:
        outputs = _append_attack_cmd(cfg, name, attack_dir)
    elif kind == TRANSFER_KIND:
        outputs = _transfer_attack_cmd(cfg, name, attack_dir)
    else:
        outputs = _sweep_attack_cmd(cfg, name, kind, attack_dir)

    inputs = [cfg.output_dir / f"model-{name}.json"]
    _record_step(cfg, f"attack-{name}-{kind}", inputs=inputs, outputs=outputs,
                 seconds=time.perf_counter() - started)
    return attack_dir


# --------------------------------------------------------------------------
# report

def _read_curve_csv(path: Path) -> list[tuple[float, float, int]]:
    lines = path.read_text(encoding="utf-8").splitlines()
    return [(float(x), float(rate), int(n))
            for x, rate, n in (line.split(",") for line in lines[1:])]


def _model_names(cfg: RunConfig) -> list[str]:
    names = sorted(p.name[len("model-"):-len(".json")]
                   for p in cfg.output_dir.glob("model-*.json"))
    if not names:
        raise ConfigError(f"no model-*.json files under {cfg.output_dir}; "
                          f"run train first")
    return names


def _attack_curves(cfg: RunConfig, name: str):
    """The model's evasion curve plus the control curve when one exists."""
    for kind in (ADDITIVE_KIND, APPEND_KIND, IGA_KIND, FGSM_KIND):
        evasion = cfg.output_dir / f"attack-{name}-{kind}" / "evasion.csv"
        if evasion.is_file():
            control = evasion.with_name("control.csv")
            return (kind, _read_curve_csv(evasion),
                    _read_curve_csv(control) if control.is_file() else None)
    return None


def _is_immune(header: dict) -> bool:
    """Provable append/additive immunity, not an empirical claim."""
    if header["model_kind"] == LINEAR_KIND:
        return header["mode"] == NONNEGATIVE
    if header["model_kind"] == TINYCONV_KIND:
        return header["constraint"] == NONNEG and header["eof_row_zeroed"]
    return False


def _binary_report(cfg: RunConfig) -> dict:
    corpus = _load_corpus(cfg)
    test_labels = corpus.labels[corpus.test_idx]
    space = None
    if cfg.task != TINYCONV_TASK:
        space = space_from_doc(json.loads(_require_file(
            cfg.output_dir / "space.json", "feature space").read_text("utf-8")))
        featurize = featurize_bytes if cfg.task == NGRAM_TASK else featurize_text
        x_test = stack_dense([featurize(space, corpus.samples[i])
                              for i in corpus.test_idx])

    entries, missing, extras = [], [], {}
    for name in _model_names(cfg):
        model = _load_named_model(cfg, name)
        header = json.loads((cfg.output_dir / f"model-{name}.json")
                            .read_text("ascii"))["header"]
        if cfg.task == TINYCONV_TASK:
            seqs = exes_to_sequences([corpus.samples[i] for i in corpus.test_idx],
                                     model.pad_len)
            scores = tinyconv_scores(model, seqs)
        else:
            scores = linear_scores(model, x_test)
        found = _attack_curves(cfg, name)
        if found is None:
            missing.append(f"attack-{name}-*/evasion.csv")
            continue
        kind, curve, control = found
        entries.append(ComparisonEntry(
            name=name, scores=scores, evasion_rate=curve[-1][1],
            n_attempts=curve[-1][2], immune=_is_immune(header)))
        extras[name] = {"attack_kind": kind,
                        "evasion_curve": [list(p) for p in curve]}
        if control is not None:
            extras[name]["control_evasion_rate"] = control[-1][1]
            extras[name]["control_curve"] = [list(p) for p in control]
    if missing:
        raise ConfigError("missing attack outputs: " + ", ".join(missing))

    rows = defense_comparison(entries, test_labels)
    for row in rows:
        row.update(extras[row["model"]])
    return {"task": cfg.task, "rows": rows}


def _image_report(cfg: RunConfig) -> dict:
    rows, missing = [], []
    for name in _model_names(cfg):
        metrics_path = cfg.output_dir / f"metrics-{name}.json"
        if not metrics_path.is_file():
            missing.append(metrics_path.name)
            continue
        metrics = json.loads(metrics_path.read_text("utf-8"))
        row = {"model": name, "accuracy": metrics["accuracy"],
               "n_test": metrics["n_test"], "immune": False}
        found = _attack_curves(cfg, name)
        if found is None:
            missing.append(f"attack-{name}-*/evasion.csv")
            continue
        kind, curve, _ = found
        row["attack_kind"] = kind
        row["evasion_curve"] = [list(p) for p in curve]
        row["evasion_rate"] = curve[-1][1]
        row["n_attempts"] = curve[-1][2]
        transfer_path = (cfg.output_dir / f"attack-{name}-{TRANSFER_KIND}"
                         / "transfer.json")
        if transfer_path.is_file():
            row["transfer"] = json.loads(transfer_path.read_text("utf-8"))
        rows.append(row)
    if missing:
        raise ConfigError("missing report inputs: " + ", ".join(missing))
    return {"task": cfg.task, "rows": rows}


def cmd_report(cfg: RunConfig) -> Path:
    started = time.perf_counter()
    report = (_image_report(cfg) if cfg.task == IMAGE_TASK
              else _binary_report(cfg))
    report_dir = cfg.output_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    path = report_dir / "comparison.json"
    write_text_atomic(path, canonical_dumps(report))

    inputs = sorted(cfg.output_dir.glob("model-*.json"))
    _record_step(cfg, "report", inputs=inputs, outputs=[path],
                 seconds=time.perf_counter() - started)
    return path


# --------------------------------------------------------------------------
# inspect

def inspect_model_text(model_path, top_k: int = 10, space_path=None) -> str:
    """Top-k most positive and most negative final-layer coefficients.

    This is the attacker's shopping list: the most negative entries are the
    features an additive adversary inserts first.
    """
    model_path = _require_file(Path(model_path), "model file")
    doc = json.loads(model_path.read_text(encoding="ascii"))
    header = doc["header"]
    kind = header["model_kind"]
    model = load_model(model_path)

    if kind == LINEAR_KIND:
        weights = model.w
        if space_path is None and (model_path.parent / "space.json").is_file():
            space_path = model_path.parent / "space.json"
        if space_path is not None:
            space = space_from_doc(json.loads(Path(space_path).read_text("utf-8")))
            if space.space_id != model.feature_space_id:
                raise ConfigError(f"feature space {space_path} does not match "
                                  f"the model's feature_space_id")
            labels = [_printable_token(t) for t in space.vocabulary]
        else:
            labels = [f"feature_{i}" for i in range(len(weights))]
        title = f"linear model ({header['mode']})"
    elif kind == TINYCONV_KIND:
        weights = model.dense.w[0]
        labels = [f"filter_{i}" for i in range(len(weights))]
        title = f"byte convnet ({header['constraint']})"
    elif kind == MULTICLASS_KIND:
        weights = model.out.w.reshape(-1)
        k, h = model.out.w.shape
        labels = [f"class_{c}/unit_{u}" for c in range(k) for u in range(h)]
        title = f"multiclass head ({header['head_mode']})"
    else:
        raise ConfigError(f"cannot inspect model kind {kind!r}")

    order = np.argsort(weights, kind="stable")
    lines = [f"{title}: {len(weights)} coefficients, bias not shown"]
    lines.append(f"top {top_k} most positive:")
    for rank, i in enumerate(order[::-1][:top_k], 1):
        lines.append(f"  {rank:2d}. {weights[i]:+.6g}  {labels[i]}")
    lines.append(f"top {top_k} most negative:")
    for rank, i in enumerate(order[:top_k], 1):
        lines.append(f"  {rank:2d}. {weights[i]:+.6g}  {labels[i]}")
    return "\n".join(lines) + "\n"
