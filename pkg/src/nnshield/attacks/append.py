"""Embedding-space FGSM over an appended unused section of a toy executable.

The adversary appends a section, embeds the padded byte sequence, ascends the
loss gradient w.r.t. the embedding inside the writable region only, and maps
each perturbed position back to the nearest byte's embedding row. The
random-bytes initial state doubles as the control experiment: any evasion it
already achieves is not a property of the gradient steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..binfmt import ToyExe, append_unused_section
from ..metrics import EvasionCurve
from ..models import (EOF_ROW, TinyConv, embed_tokens, exes_to_sequences,
                      scores_from_embedding, tinyconv_scores)
from ..nn import backward, binary_cross_entropy
from .budget import (BUDGET_EXHAUSTED, DEFAULT_EMBED_EPSILON,
                     DEFAULT_EMBED_ITERS, ZERO_GRADIENT, AttackBudget,
                     AttackOutcome)

DEFAULT_SECTION_PCTS = (0.02, 0.05, 0.10, 0.25, 0.50)


@dataclass(frozen=True)
class EmbeddingPerturbation:
    """Per-position embedding offsets, zero everywhere the attacker may not write."""

    delta: np.ndarray       # (pad_len, embed_dim)
    region_mask: np.ndarray  # (pad_len,) bool

    def __post_init__(self):
        if self.delta.shape[0] != self.region_mask.shape[0]:
            raise ValueError("delta and region_mask cover different lengths")
        if np.any(self.delta[~self.region_mask] != 0.0):
            raise ValueError("delta must be zero outside the writable region")


def nearest_byte_decode(table: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Nearest embedding row per position by Euclidean distance.

    Row 256 (EOF) is excluded: it is not a byte an attacker can write.
    Ties resolve to the lowest byte value via first-minimum argmin.
    """
    rows = table[:EOF_ROW]
    d2 = (np.sum(z * z, axis=1, keepdims=True)
          - 2.0 * (z @ rows.T)
          + np.sum(rows * rows, axis=1))
    return np.argmin(d2, axis=1)


def _replace_span(exe: ToyExe, start: int, content: bytes) -> ToyExe:
    payload = exe.payload[:start] + content + exe.payload[start + len(content):]
    return ToyExe(exe.sections, payload)


def _fgsm_append_run(model: TinyConv, exe: ToyExe, section_pct: float,
                     budget: AttackBudget, rng: np.random.Generator):
    """Returns (outcome, attacked exe, control_success).

    control_success is the random-bytes result: whether the freshly appended
    uniform-random section alone already flips the prediction, before any
    gradient step.
    """
    if section_pct <= 0.0:
        raise ValueError(f"section_pct must be positive, got {section_pct}")
    base = float(tinyconv_scores(model, exes_to_sequences([exe], model.pad_len))[0])
    if base < 0.5:
        raise ValueError("input is not classified malicious; nothing to evade")

    epsilon = DEFAULT_EMBED_EPSILON if budget.epsilon is None else budget.epsilon
    max_iters = DEFAULT_EMBED_ITERS if budget.max_iters is None else budget.max_iters
    size = math.ceil(section_pct * len(exe.payload))
    init = rng.integers(0, 256, size, dtype=np.int64).astype(np.uint8).tobytes()
    current = append_unused_section(exe, init)

    # attackable positions: the appended span clipped to the model's window
    r0 = min(len(exe.payload), model.pad_len)
    r1 = min(len(current.payload), model.pad_len)
    mask = np.zeros(model.pad_len, dtype=bool)
    mask[r0:r1] = True

    control_success = None
    score = base
    for it in range(max_iters + 1):
        seqs = exes_to_sequences([current], model.pad_len)
        z = embed_tokens(model, seqs)
        scores, tape = scores_from_embedding(model, z)
        score = float(scores[0])
        if it == 0:
            control_success = score < 0.5
        if score < 0.5:
            outcome = AttackOutcome(success=True, perturbation_size=size,
                                    achieved_confidence=1.0 - score,
                                    iterations_used=it)
            return outcome, current, control_success
        if it == max_iters:
            break

        # gradient of the true-label loss w.r.t. the embedded sequence
        _, dpred = binary_cross_entropy(scores, np.ones(1))
        dloss = np.zeros(tape.output.shape)
        dloss[:, 0] = dpred
        gz = backward(tape, dloss).input_grad[0]
        region_grad = gz[r0:r1]
        if not np.any(region_grad):
            # saturated sigmoid (or a section entirely past the window)
            # kills the gradient exactly
            outcome = AttackOutcome(success=False, perturbation_size=size,
                                    achieved_confidence=1.0 - score,
                                    iterations_used=it,
                                    failure_reason=ZERO_GRADIENT)
            return outcome, current, control_success

        delta = np.zeros_like(gz)
        delta[r0:r1] = epsilon * np.sign(region_grad)
        perturbation = EmbeddingPerturbation(delta=delta, region_mask=mask)
        z_tilde = z[0] + perturbation.delta
        decoded = nearest_byte_decode(model.embedding.table, z_tilde[r0:r1])
        current = _replace_span(current, r0, decoded.astype(np.uint8).tobytes())

    outcome = AttackOutcome(success=False, perturbation_size=size,
                            achieved_confidence=1.0 - score,
                            iterations_used=max_iters,
                            failure_reason=BUDGET_EXHAUSTED)
    return outcome, current, control_success


def embedding_fgsm_append(model: TinyConv, exe: ToyExe, section_pct: float,
                          budget: AttackBudget,
                          rng: np.random.Generator) -> tuple[AttackOutcome, ToyExe]:
    outcome, attacked, _ = _fgsm_append_run(model, exe, section_pct, budget, rng)
    return outcome, attacked


def fgsm_append_with_control(model: TinyConv, exe: ToyExe, section_pct: float,
                             budget: AttackBudget, rng: np.random.Generator):
    """Gradient attack plus the paired random-bytes control.

    Both views share one appended section, so a control success means the
    gradient-free random fill alone evades; the gradient attack's extra
    successes are the ones attributable to the attack itself.
    """
    return _fgsm_append_run(model, exe, section_pct, budget, rng)


def random_bytes_control(model: TinyConv, exe: ToyExe, section_pct: float,
                         rng: np.random.Generator) -> tuple[AttackOutcome, ToyExe]:
    """Append a uniform-random section and evaluate once, no gradient steps."""
    if section_pct <= 0.0:
        raise ValueError(f"section_pct must be positive, got {section_pct}")
    size = math.ceil(section_pct * len(exe.payload))
    init = rng.integers(0, 256, size, dtype=np.int64).astype(np.uint8).tobytes()
    grown = append_unused_section(exe, init)
    score = float(tinyconv_scores(model, exes_to_sequences([grown], model.pad_len))[0])
    success = score < 0.5
    outcome = AttackOutcome(success=success, perturbation_size=size,
                            achieved_confidence=1.0 - score, iterations_used=0,
                            failure_reason=None if success else BUDGET_EXHAUSTED)
    return outcome, grown


def malconv_append_sweep(model: TinyConv, exes, section_pcts=DEFAULT_SECTION_PCTS,
                         budget: AttackBudget | None = None,
                         seed: int = 0) -> tuple[EvasionCurve, EvasionCurve]:
    """Evasion rate per appended-section size, plus the control curve.

    Every (file, size) cell draws its own generator from (seed, indices), so
    results are independent of evaluation order.
    """
    budget = budget if budget is not None else AttackBudget()
    exes = list(exes)
    scores = tinyconv_scores(model, exes_to_sequences(exes, model.pad_len))
    benign = np.nonzero(scores < 0.5)[0]
    if benign.size:
        raise ValueError(f"files at indices {benign.tolist()} are not "
                         f"classified malicious")
    grad_points, control_points = [], []
    for j, pct in enumerate(section_pcts):
        wins = 0
        control_wins = 0
        for i, exe in enumerate(exes):
            rng = np.random.default_rng([seed, i, j])
            outcome, _, control = _fgsm_append_run(model, exe, pct, budget, rng)
            wins += int(outcome.success)
            control_wins += int(control)
        grad_points.append((pct, wins / len(exes), len(exes)))
        control_points.append((pct, control_wins / len(exes), len(exes)))
    return (EvasionCurve(axis_name="section_pct", points=tuple(grad_points)),
            EvasionCurve(axis_name="section_pct", points=tuple(control_points)))
