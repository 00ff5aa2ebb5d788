"""Attack budgets, outcomes, and the failure taxonomy shared by all adversaries."""

from __future__ import annotations

from dataclasses import dataclass

BUDGET_EXHAUSTED = "budget_exhausted"
L1_EXCEEDED = "l1_exceeded"
ZERO_GRADIENT = "zero_gradient"

FAILURE_REASONS = (BUDGET_EXHAUSTED, L1_EXCEEDED, ZERO_GRADIENT)

# gradient-attack parameters are not pinned anywhere authoritative; these
# defaults are sized so desk corpora finish in seconds, and run configs
# override them
DEFAULT_EMBED_EPSILON = 0.1
DEFAULT_EMBED_ITERS = 20
DEFAULT_PIXEL_EPSILON = 0.01
DEFAULT_PIXEL_ITERS = 100
DEFAULT_L1_THRESHOLD = 60.0  # L1 distance measured on the 0-255 pixel scale


@dataclass(frozen=True)
class AttackBudget:
    """Limits an adversary agreed to; unset fields fall back to per-attack
    defaults. epsilon may be zero (the identity perturbation); the counting
    fields must be positive when given."""

    max_insertions: int | None = None
    epsilon: float | None = None
    max_iters: int | None = None
    l1_threshold: float | None = None
    target_confidence: float | None = None

    def __post_init__(self):
        if self.max_insertions is not None and self.max_insertions < 1:
            raise ValueError(f"max_insertions must be >= 1, got {self.max_insertions}")
        if self.epsilon is not None and self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.l1_threshold is not None and self.l1_threshold <= 0.0:
            raise ValueError(f"l1_threshold must be positive, got {self.l1_threshold}")
        if self.target_confidence is not None and not 0.0 < self.target_confidence < 1.0:
            raise ValueError(f"target_confidence must lie in (0, 1), got {self.target_confidence}")


@dataclass(frozen=True)
class AttackOutcome:
    success: bool
    perturbation_size: float  # insertion count, appended bytes, or L1 distance
    achieved_confidence: float
    iterations_used: int
    failure_reason: str | None = None

    def __post_init__(self):
        if self.success and self.failure_reason is not None:
            raise ValueError("a successful outcome cannot carry a failure_reason")
        if not self.success and self.failure_reason is None:
            raise ValueError("failed outcomes must state a failure_reason")
        if self.failure_reason is not None and self.failure_reason not in FAILURE_REASONS:
            raise ValueError(f"unknown failure_reason {self.failure_reason!r}")
