"""Targeted gradient attacks on image classifiers, sweeps, and transfer runs.

All attacks descend the cross-entropy toward a chosen target class in the
model's native head coupling (softmax CE for softmax heads, summed per-head
BCE for one-vs-all heads) and clip pixels back into [0, 1] after every step.
L1 distances are measured on the 0-255 pixel scale, the same unit the budget
threshold uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import ImageSample
from ..metrics import EvasionCurve
from ..models import SOFTMAX_MODE, MulticlassHead, predict_multiclass
from ..nn import backward, forward, sigmoid, softmax
from .budget import (BUDGET_EXHAUSTED, DEFAULT_L1_THRESHOLD,
                     DEFAULT_PIXEL_EPSILON, DEFAULT_PIXEL_ITERS, L1_EXCEEDED,
                     AttackBudget, AttackOutcome)

FGSM_ATTACK = "fgsm"
IGA_ATTACK = "iga"
ATTACK_KINDS = (FGSM_ATTACK, IGA_ATTACK)

ALL_PAIRS = "all_pairs"
RANDOM_TARGET = "random_target"
PAIRINGS = (ALL_PAIRS, RANDOM_TARGET)

PIXEL_SCALE = 255.0


@dataclass(frozen=True)
class _RunRecord:
    outcome: AttackOutcome
    pixels: np.ndarray   # flat, final applied state
    best_confidence: float  # highest target confidence seen at a valid state


def _l1_255(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).sum() * PIXEL_SCALE)


def _gradient_step(model: MulticlassHead, x: np.ndarray, target: int,
                   epsilon: float) -> np.ndarray:
    logits, tape = forward(model.net, x[None, :])
    act = softmax(logits) if model.mode == SOFTMAX_MODE else sigmoid(logits)
    dlogits = act.copy()
    dlogits[0, target] -= 1.0
    grad = backward(tape, dlogits).input_grad[0]
    return np.clip(x - epsilon * np.sign(grad), 0.0, 1.0)


def _confidence(model: MulticlassHead, x: np.ndarray, target: int):
    pred = predict_multiclass(model, x)
    return pred.predicted_class, float(pred.class_probabilities[target])


def _iga_run(model: MulticlassHead, pixels: np.ndarray, target: int, *,
             epsilon: float, max_iters: int, l1_threshold: float,
             min_confidence: float | None) -> _RunRecord:
    x0 = np.asarray(pixels, dtype=np.float64).reshape(-1)
    cls0, _ = _confidence(model, x0, target)
    if cls0 == target:
        raise ValueError(f"sample already predicted as class {target}")

    x = x0
    best = 0.0
    target_conf = 0.0
    for it in range(1, max_iters + 1):
        x_next = _gradient_step(model, x, target, epsilon)
        if _l1_255(x_next, x0) >= l1_threshold:
            outcome = AttackOutcome(success=False,
                                    perturbation_size=_l1_255(x, x0),
                                    achieved_confidence=target_conf,
                                    iterations_used=it,
                                    failure_reason=L1_EXCEEDED)
            return _RunRecord(outcome, x, best)
        x = x_next
        cls, target_conf = _confidence(model, x, target)
        if cls == target:
            best = max(best, target_conf)
            if min_confidence is None or target_conf >= min_confidence:
                outcome = AttackOutcome(success=True,
                                        perturbation_size=_l1_255(x, x0),
                                        achieved_confidence=target_conf,
                                        iterations_used=it)
                return _RunRecord(outcome, x, best)
    outcome = AttackOutcome(success=False, perturbation_size=_l1_255(x, x0),
                            achieved_confidence=target_conf,
                            iterations_used=max_iters,
                            failure_reason=BUDGET_EXHAUSTED)
    return _RunRecord(outcome, x, best)


def _budget_fields(budget: AttackBudget, max_iters_default: int):
    epsilon = DEFAULT_PIXEL_EPSILON if budget.epsilon is None else budget.epsilon
    iters = max_iters_default if budget.max_iters is None else budget.max_iters
    l1 = DEFAULT_L1_THRESHOLD if budget.l1_threshold is None else budget.l1_threshold
    return epsilon, iters, l1


def _attacked_image(img: ImageSample, flat: np.ndarray) -> ImageSample:
    return ImageSample(pixels=flat.reshape(img.pixels.shape), label=img.label)


def pixel_fgsm(model: MulticlassHead, img: ImageSample, target_class: int,
               budget: AttackBudget) -> tuple[AttackOutcome, ImageSample]:
    """One signed-gradient step toward the target class."""
    epsilon, _, l1 = _budget_fields(budget, 1)
    record = _iga_run(model, img.pixels, target_class, epsilon=epsilon,
                      max_iters=1, l1_threshold=l1,
                      min_confidence=budget.target_confidence)
    return record.outcome, _attacked_image(img, record.pixels)


def pixel_iga(model: MulticlassHead, img: ImageSample, target_class: int,
              budget: AttackBudget) -> tuple[AttackOutcome, ImageSample]:
    """Iterated FGSM with early stop; max_iters=1 reproduces pixel_fgsm."""
    epsilon, iters, l1 = _budget_fields(budget, DEFAULT_PIXEL_ITERS)
    record = _iga_run(model, img.pixels, target_class, epsilon=epsilon,
                      max_iters=iters, l1_threshold=l1,
                      min_confidence=budget.target_confidence)
    return record.outcome, _attacked_image(img, record.pixels)


def _attempts(model: MulticlassHead, images, pairing: str, seed: int):
    """(image index, flat pixels, target) triples; targets never equal the
    model's current prediction."""
    if pairing not in PAIRINGS:
        raise ValueError(f"unknown pairing {pairing!r}")
    rng = np.random.default_rng(seed)
    out = []
    for i, img in enumerate(images):
        flat = np.asarray(img.pixels, dtype=np.float64).reshape(-1)
        current = predict_multiclass(model, flat).predicted_class
        others = [c for c in range(model.k) if c != current]
        if pairing == ALL_PAIRS:
            targets = others
        else:
            targets = [others[int(rng.integers(0, len(others)))]]
        out.extend((i, flat, t) for t in targets)
    return out


def targeted_confidence_sweep(model: MulticlassHead, images, p_values,
                              attack: str = IGA_ATTACK,
                              pairing: str = ALL_PAIRS,
                              budget: AttackBudget | None = None,
                              seed: int = 0) -> EvasionCurve:
    """Evasion rate at each minimum target confidence p.

    Each attempt runs once and records the best target-class confidence it
    reaches inside the L1 budget; the curve thresholds that record at every
    p, so it is non-increasing by construction.
    """
    p_values = [float(p) for p in p_values]
    if sorted(p_values) != p_values:
        raise ValueError("p_values must be sorted ascending")
    if any(not 0.0 < p <= 1.0 for p in p_values):
        raise ValueError("p values must lie in (0, 1]")
    if attack not in ATTACK_KINDS:
        raise ValueError(f"unknown attack kind {attack!r}")
    budget = budget if budget is not None else AttackBudget()
    epsilon, iters, l1 = _budget_fields(
        budget, 1 if attack == FGSM_ATTACK else DEFAULT_PIXEL_ITERS)
    if attack == FGSM_ATTACK:
        iters = 1

    # push every attempt to the highest p so one run serves the whole curve
    stop_conf = max(p_values)
    best = []
    for _, flat, target in _attempts(model, images, pairing, seed):
        record = _iga_run(model, flat, target, epsilon=epsilon, max_iters=iters,
                          l1_threshold=l1, min_confidence=stop_conf)
        best.append(record.best_confidence)
    best_arr = np.asarray(best)
    points = tuple((p, float(np.mean(best_arr >= p)), len(best)) for p in p_values)
    return EvasionCurve(axis_name="target_confidence", points=points)


def transfer_attack(source: MulticlassHead, victim: MulticlassHead, images,
                    budget: AttackBudget | None = None, *,
                    seed: int = 0) -> float:
    """Attack the source model, score the perturbed images on the victim.

    Success uses the same rule as the direct attack (target class reached at
    the budget's confidence within the L1 threshold), so attacking a model
    with itself reproduces the direct evasion rate exactly.
    """
    budget = budget if budget is not None else AttackBudget()
    epsilon, iters, l1 = _budget_fields(budget, DEFAULT_PIXEL_ITERS)
    attempts = _attempts(source, images, RANDOM_TARGET, seed)
    if not attempts:
        return 0.0
    wins = 0
    for _, flat, target in attempts:
        record = _iga_run(source, flat, target, epsilon=epsilon,
                          max_iters=iters, l1_threshold=l1,
                          min_confidence=budget.target_confidence)
        if _l1_255(record.pixels, flat) >= l1:
            continue
        cls, conf = _confidence(victim, record.pixels, target)
        if cls != target:
            continue
        if budget.target_confidence is not None and conf < budget.target_confidence:
            continue
        wins += 1
    return wins / len(attempts)
