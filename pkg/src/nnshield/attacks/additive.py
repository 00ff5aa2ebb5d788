"""Greedy benign-feature insertion against linear scores.

The strongest single-pass white-box move for a linear model: add the absent
feature with the most negative coefficient, repeat until the decision flips
or nothing useful is left. Against a non-negative model the candidate list
is empty and the attack cannot start.
"""

from __future__ import annotations

import numpy as np

from ..features import BooleanVector
from ..models import LinearModel
from ..nn import sigmoid
from .budget import BUDGET_EXHAUSTED, AttackBudget, AttackOutcome


def additive_attack(model: LinearModel, x: BooleanVector,
                    budget: AttackBudget) -> tuple[AttackOutcome, BooleanVector]:
    """Insert negative-coefficient features, most negative first.

    Returns the outcome and the attacked vector, always a superset of the
    input: the threat model only ever adds features. achieved_confidence is
    the benign-class confidence 1 - sigma(margin).
    """
    if x.dims != model.w.shape[0]:
        raise ValueError(f"vector dims {x.dims} != model features {model.w.shape[0]}")
    w = model.w
    present = set(x.set_indices)
    margin = float(w[list(x.set_indices)].sum() + model.b)
    if margin < 0.0:
        raise ValueError("sample is not classified positive; nothing to evade")

    negative = np.nonzero(w < 0.0)[0]
    order = negative[np.lexsort((negative, w[negative]))]
    limit = budget.max_insertions if budget.max_insertions is not None else len(order)

    attacked = x
    inserted = 0
    for idx in order:
        if margin < 0.0 or inserted >= limit:
            break
        idx = int(idx)
        if idx in present:
            continue
        attacked = attacked.with_added((idx,))
        present.add(idx)
        margin += float(w[idx])
        inserted += 1

    success = margin < 0.0
    outcome = AttackOutcome(
        success=success,
        perturbation_size=inserted,
        achieved_confidence=float(1.0 - sigmoid(np.array(margin))),
        iterations_used=inserted,
        failure_reason=None if success else BUDGET_EXHAUSTED)
    return outcome, attacked
