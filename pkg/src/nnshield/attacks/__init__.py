"""Adversaries: feature insertion, append-section FGSM, pixel FGSM/IGA, transfer."""

from .additive import additive_attack
from .append import (DEFAULT_SECTION_PCTS, EmbeddingPerturbation,
                     embedding_fgsm_append, fgsm_append_with_control,
                     malconv_append_sweep, nearest_byte_decode,
                     random_bytes_control)
from .budget import (BUDGET_EXHAUSTED, DEFAULT_EMBED_EPSILON,
                     DEFAULT_EMBED_ITERS, DEFAULT_L1_THRESHOLD,
                     DEFAULT_PIXEL_EPSILON, DEFAULT_PIXEL_ITERS,
                     FAILURE_REASONS, L1_EXCEEDED, ZERO_GRADIENT, AttackBudget,
                     AttackOutcome)
from .pixel import (ALL_PAIRS, ATTACK_KINDS, FGSM_ATTACK, IGA_ATTACK,
                    PAIRINGS, PIXEL_SCALE, RANDOM_TARGET, pixel_fgsm,
                    pixel_iga, targeted_confidence_sweep, transfer_attack)

__all__ = [
    "ALL_PAIRS", "ATTACK_KINDS", "BUDGET_EXHAUSTED", "DEFAULT_EMBED_EPSILON",
    "DEFAULT_EMBED_ITERS", "DEFAULT_L1_THRESHOLD", "DEFAULT_PIXEL_EPSILON",
    "DEFAULT_PIXEL_ITERS", "DEFAULT_SECTION_PCTS", "FAILURE_REASONS",
    "FGSM_ATTACK", "IGA_ATTACK", "L1_EXCEEDED", "PAIRINGS", "PIXEL_SCALE",
    "RANDOM_TARGET", "ZERO_GRADIENT", "AttackBudget", "AttackOutcome",
    "EmbeddingPerturbation", "additive_attack", "embedding_fgsm_append",
    "fgsm_append_with_control", "malconv_append_sweep", "nearest_byte_decode",
    "pixel_fgsm", "pixel_iga", "random_bytes_control",
    "targeted_confidence_sweep", "transfer_attack",
]
