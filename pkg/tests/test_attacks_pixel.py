"""Pixel-space FGSM/IGA, confidence sweeps, and transfer scoring."""

import numpy as np
import pytest

from nnshield.attacks import (ALL_PAIRS, BUDGET_EXHAUSTED, FGSM_ATTACK,
                              IGA_ATTACK, L1_EXCEEDED, RANDOM_TARGET,
                              AttackBudget, pixel_fgsm, pixel_iga,
                              targeted_confidence_sweep, transfer_attack)
from nnshield.features import ImageSample
from nnshield.models import (OVA_MODE, SOFTMAX_MODE, MulticlassHead,
                             predict_multiclass)
from nnshield.nn import Dense


def diag_model(k, scale, mode):
    """Logits are scale * pixels, one pixel per class; fully predictable."""
    out = Dense(k, k, rng=np.random.default_rng(0))
    out.w[:] = 0.0
    for i in range(k):
        out.w[i, i] = scale
    out.b[:] = 0.0
    return MulticlassHead(k=k, mode=mode, trunk=[], out=out)


def image(values, label=0):
    arr = np.asarray(values, dtype=np.float64)[:, None, None]
    return ImageSample(pixels=arr, label=label)


def test_fgsm_one_step_flips_a_boundary_sample():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    img = image([0.505, 0.495])
    budget = AttackBudget(epsilon=0.01, target_confidence=0.8)
    outcome, attacked = pixel_fgsm(model, img, 1, budget)
    assert outcome.success
    assert outcome.iterations_used == 1
    assert outcome.perturbation_size == pytest.approx(0.02 * 255.0)
    pred = predict_multiclass(model, attacked.pixels.reshape(-1))
    assert pred.predicted_class == 1
    assert pred.confidence >= 0.8
    assert np.allclose(attacked.pixels.reshape(-1), [0.495, 0.505])


def test_fgsm_epsilon_zero_is_identity():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    img = image([0.505, 0.495])
    outcome, attacked = pixel_fgsm(model, img, 1, AttackBudget(epsilon=0.0))
    assert not outcome.success
    assert outcome.failure_reason == BUDGET_EXHAUSTED
    assert outcome.perturbation_size == 0.0
    assert np.array_equal(attacked.pixels, img.pixels)


def test_success_always_lands_inside_the_l1_budget():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    budget = AttackBudget(epsilon=0.01, l1_threshold=60.0)
    outcome, attacked = pixel_fgsm(model, image([0.505, 0.495]), 1, budget)
    assert outcome.success
    assert outcome.perturbation_size < 60.0


def test_l1_threshold_crossing_stops_the_run():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    img = image([0.53, 0.47])
    budget = AttackBudget(epsilon=0.01, max_iters=10, l1_threshold=4.0)
    outcome, attacked = pixel_iga(model, img, 1, budget)
    assert not outcome.success
    assert outcome.failure_reason == L1_EXCEEDED
    assert outcome.perturbation_size == 0.0  # the crossing step is not applied
    assert np.array_equal(attacked.pixels, img.pixels)


def test_iga_with_one_iteration_equals_fgsm():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    img = image([0.505, 0.495])
    budget = AttackBudget(epsilon=0.01, max_iters=1, target_confidence=0.8)
    a, img_a = pixel_fgsm(model, img, 1, budget)
    b, img_b = pixel_iga(model, img, 1, budget)
    assert a == b
    assert np.array_equal(img_a.pixels, img_b.pixels)


def test_iga_succeeds_where_single_step_fails():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    img = image([0.53, 0.47])
    budget = AttackBudget(epsilon=0.01, max_iters=10, target_confidence=0.8)
    fgsm_outcome, _ = pixel_fgsm(model, img, 1, budget)
    iga_outcome, attacked = pixel_iga(model, img, 1, budget)
    assert not fgsm_outcome.success
    assert iga_outcome.success
    assert iga_outcome.iterations_used == 4
    pred = predict_multiclass(model, attacked.pixels.reshape(-1))
    assert pred.predicted_class == 1


def test_ova_heads_are_attackable_too():
    model = diag_model(2, 8.0, OVA_MODE)
    img = image([0.55, 0.45])
    budget = AttackBudget(epsilon=0.01, max_iters=20)
    outcome, attacked = pixel_iga(model, img, 1, budget)
    assert outcome.success
    pred = predict_multiclass(model, attacked.pixels.reshape(-1))
    assert pred.predicted_class == 1


def test_target_equal_to_prediction_rejected():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    with pytest.raises(ValueError, match="already"):
        pixel_fgsm(model, image([0.505, 0.495]), 0, AttackBudget(epsilon=0.01))


def test_pixels_stay_clipped_to_unit_range():
    model = diag_model(2, 200.0, SOFTMAX_MODE)
    img = image([0.99, 0.01])
    budget = AttackBudget(epsilon=0.5, max_iters=4, l1_threshold=10_000.0)
    _, attacked = pixel_iga(model, img, 1, budget)
    assert attacked.pixels.min() >= 0.0
    assert attacked.pixels.max() <= 1.0


def sweep_fixture():
    # scale 20 keeps softmax confidence strictly below 1.0 in float64
    model = diag_model(3, 20.0, SOFTMAX_MODE)
    images = [image([0.8, 0.1, 0.1]), image([0.75, 0.15, 0.1]),
              image([0.1, 0.8, 0.1], label=1), image([0.15, 0.7, 0.15], label=1),
              image([0.1, 0.1, 0.8], label=2)]
    budget = AttackBudget(epsilon=0.01, max_iters=80, l1_threshold=2000.0)
    return model, images, budget


def test_sweep_all_pairs_counts_and_monotonicity():
    model, images, budget = sweep_fixture()
    p_values = [0.5, 0.7, 0.9, 1.0]
    curve = targeted_confidence_sweep(model, images, p_values,
                                      attack=IGA_ATTACK, pairing=ALL_PAIRS,
                                      budget=budget, seed=0)
    assert curve.axis_name == "target_confidence"
    assert [p[0] for p in curve.points] == p_values
    assert all(p[2] == len(images) * 2 for p in curve.points)
    rates = [p[1] for p in curve.points]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[0] > 0.0
    assert rates[-1] == 0.0  # p = 1.0 is unreachable through normalization


def test_sweep_random_target_attempts_once_per_sample():
    model, images, budget = sweep_fixture()
    curve = targeted_confidence_sweep(model, images, [0.5, 0.9],
                                      attack=IGA_ATTACK, pairing=RANDOM_TARGET,
                                      budget=budget, seed=3)
    assert all(p[2] == len(images) for p in curve.points)
    again = targeted_confidence_sweep(model, images, [0.5, 0.9],
                                      attack=IGA_ATTACK, pairing=RANDOM_TARGET,
                                      budget=budget, seed=3)
    assert again.points == curve.points


def test_sweep_fgsm_never_beats_iga():
    model, images, budget = sweep_fixture()
    p_values = [0.5, 0.7]
    fgsm = targeted_confidence_sweep(model, images, p_values, attack=FGSM_ATTACK,
                                     pairing=ALL_PAIRS, budget=budget, seed=0)
    iga = targeted_confidence_sweep(model, images, p_values, attack=IGA_ATTACK,
                                    pairing=ALL_PAIRS, budget=budget, seed=0)
    for (pa, ra, _), (pb, rb, _) in zip(fgsm.points, iga.points):
        assert pa == pb
        assert ra <= rb


def test_sweep_validates_p_values():
    model, images, budget = sweep_fixture()
    with pytest.raises(ValueError, match="ascending"):
        targeted_confidence_sweep(model, images, [0.9, 0.5], budget=budget)
    with pytest.raises(ValueError, match="p values"):
        targeted_confidence_sweep(model, images, [0.0, 0.5], budget=budget)
    with pytest.raises(ValueError, match="attack"):
        targeted_confidence_sweep(model, images, [0.5], attack="pgd", budget=budget)
    with pytest.raises(ValueError, match="pairing"):
        targeted_confidence_sweep(model, images, [0.5], pairing="fixed", budget=budget)


def test_transfer_to_itself_equals_direct_attack():
    model, images, budget = sweep_fixture()
    budget = AttackBudget(epsilon=0.01, max_iters=40, l1_threshold=2000.0,
                          target_confidence=0.6)
    rate = transfer_attack(model, model, images, budget, seed=5)

    # replay the same seeded target pairing and attack directly
    rng = np.random.default_rng(5)
    wins = 0
    for img in images:
        flat = img.pixels.reshape(-1)
        current = predict_multiclass(model, flat).predicted_class
        others = [c for c in range(model.k) if c != current]
        target = others[int(rng.integers(0, len(others)))]
        outcome, _ = pixel_iga(model, img, target, budget)
        wins += int(outcome.success)
    assert rate == wins / len(images)
    assert rate > 0.0


def test_unperturbable_model_transfers_nothing():
    # victim ignores its input entirely, so adversarial images cannot retarget it
    source = diag_model(3, 20.0, SOFTMAX_MODE)
    victim = diag_model(3, 0.0, SOFTMAX_MODE)
    _, images, budget = sweep_fixture()
    budget = AttackBudget(epsilon=0.01, max_iters=20, l1_threshold=2000.0,
                          target_confidence=0.6)
    assert transfer_attack(source, victim, images, budget, seed=1) == 0.0
