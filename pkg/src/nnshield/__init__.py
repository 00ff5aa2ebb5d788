"""nnshield: non-negative linear and convolutional classifiers hardened
against additive evasion, plus the attack tooling to measure that hardening."""

__version__ = "0.1.0"
