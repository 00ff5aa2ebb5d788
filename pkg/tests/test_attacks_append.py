"""Append-section FGSM: decoding, gradients, compliance, and the defense."""

import numpy as np
import pytest

from nnshield.attacks import (BUDGET_EXHAUSTED, ZERO_GRADIENT, AttackBudget,
                              EmbeddingPerturbation, embedding_fgsm_append,
                              fgsm_append_with_control, malconv_append_sweep,
                              nearest_byte_decode, random_bytes_control)
from nnshield.binfmt import (FLAG_EXEC, FLAG_UNUSED, content_equal_except_unused,
                             make_exe)
from nnshield.features import SynthSpec, generate_synthetic
from nnshield.models import (build_tinyconv, exes_to_sequences,
                             tinyconv_scores, train_tinyconv)
from nnshield.nn import NONNEG, SgdConfig

DESK = dict(embed_dim=4, filters=8, width=8, stride=4, pad_len=512)


def desk_corpus(seed=7):
    spec = SynthSpec(mode="toyexe", n_samples=60, n_features=12,
                     planted_positive_tokens=("EVILOP", "BADSIG"),
                     planted_negative_tokens=("GOODOP",),
                     noise_rate=0.15, seed=seed,
                     pos_len_range=(80, 200), neg_len_range=(80, 200))
    return generate_synthetic(spec)


def trained(corpus, constrained, seed=11):
    if constrained:
        model = build_tinyconv(**DESK, constraint=NONNEG, eof_row_zeroed=True,
                               seed=seed)
        cfg = SgdConfig(learning_rate=0.2, momentum=0.9, epochs=4,
                        batch_size=16, seed=2)
    else:
        model = build_tinyconv(**DESK, seed=seed)
        cfg = SgdConfig(learning_rate=0.1, momentum=0.9, epochs=8,
                        batch_size=16, seed=3)
    seqs = exes_to_sequences(corpus.samples, model.pad_len)
    train_tinyconv(model, seqs, corpus.labels, cfg)
    return model


def classified_malicious(model, corpus):
    scores = tinyconv_scores(model, exes_to_sequences(corpus.samples, model.pad_len))
    return [e for e, label, s in zip(corpus.samples, corpus.labels, scores)
            if label == 1 and s >= 0.5]


def brute_force_decode(table, z):
    out = []
    for row in z:
        dists = [float(np.linalg.norm(row - table[b])) for b in range(256)]
        out.append(int(np.argmin(dists)))
    return np.array(out)


def test_decode_matches_brute_force_oracle():
    rng = np.random.default_rng(0)
    table = rng.normal(0.0, 1.0, (257, 4))
    z = rng.normal(0.0, 1.0, (60, 4))
    assert np.array_equal(nearest_byte_decode(table, z), brute_force_decode(table, z))


def test_decode_of_exact_rows_is_identity():
    rng = np.random.default_rng(1)
    table = rng.normal(0.0, 1.0, (257, 3))
    values = np.arange(256)
    decoded = nearest_byte_decode(table, table[values])
    assert np.array_equal(decoded, values)


def test_decode_never_returns_eof_row():
    # row 256 sits exactly at the query point, yet only bytes are writable
    table = np.ones((257, 2))
    table[256] = 0.0
    table[42] = 0.0
    decoded = nearest_byte_decode(table, np.zeros((1, 2)))
    assert decoded[0] == 42


def test_decode_tie_breaks_to_lowest_byte():
    table = np.full((257, 2), 50.0)
    table[3] = [1.0, 0.0]
    table[7] = [-1.0, 0.0]
    decoded = nearest_byte_decode(table, np.zeros((1, 2)))
    assert decoded[0] == 3


def test_perturbation_confined_to_region():
    mask = np.zeros(8, dtype=bool)
    mask[5:] = True
    delta = np.zeros((8, 2))
    delta[5] = 0.1
    EmbeddingPerturbation(delta=delta, region_mask=mask)  # fine
    delta[1] = 0.1
    with pytest.raises(ValueError, match="region"):
        EmbeddingPerturbation(delta=delta, region_mask=mask)
    with pytest.raises(ValueError, match="length"):
        EmbeddingPerturbation(delta=np.zeros((4, 2)), region_mask=mask)


def test_epsilon_zero_leaves_section_bytes_unchanged():
    corpus = desk_corpus()
    model = trained(corpus, constrained=False)
    exe = classified_malicious(model, corpus)[0]
    budget = AttackBudget(epsilon=0.0, max_iters=3)
    outcome, attacked = embedding_fgsm_append(model, exe, 0.25, budget,
                                              np.random.default_rng(5))
    assert not outcome.success
    assert outcome.failure_reason == BUDGET_EXHAUSTED
    assert outcome.iterations_used == 3
    # replay the generator: the appended bytes are exactly the random init
    twin = np.random.default_rng(5)
    size = -(-len(exe.payload) // 4)  # ceil(0.25 * len)
    init = twin.integers(0, 256, size, dtype=np.int64).astype(np.uint8).tobytes()
    assert attacked.payload == exe.payload + init
    assert attacked.sections[:-1] == exe.sections
    assert attacked.sections[-1].flags == FLAG_UNUSED


def test_saturated_output_reports_zero_gradient():
    model = build_tinyconv(**DESK, seed=4)
    model.dense.b[0] = 60.0  # sigmoid(60) == 1.0 in float64
    exe = make_exe([("main", FLAG_EXEC, bytes(range(100)))])
    outcome, attacked = embedding_fgsm_append(model, exe, 0.5,
                                              AttackBudget(max_iters=5),
                                              np.random.default_rng(6))
    assert not outcome.success
    assert outcome.failure_reason == ZERO_GRADIENT
    assert outcome.iterations_used == 0
    assert content_equal_except_unused(exe, attacked)


def test_section_past_the_window_has_no_gradient():
    model = build_tinyconv(**DESK, seed=7)
    model.dense.b[0] = 0.5  # score > 0.5 without saturating the sigmoid
    exe = make_exe([("main", FLAG_EXEC, bytes([1, 2, 3, 4]) * 150)])  # 600 > pad_len
    assert tinyconv_scores(model, exes_to_sequences([exe], model.pad_len))[0] >= 0.5
    outcome, _ = embedding_fgsm_append(model, exe, 0.1, AttackBudget(max_iters=5),
                                       np.random.default_rng(8))
    assert not outcome.success
    assert outcome.failure_reason == ZERO_GRADIENT


def test_unconstrained_model_is_evadable_and_outputs_comply():
    corpus = desk_corpus()
    model = trained(corpus, constrained=False)
    mal = classified_malicious(model, corpus)
    assert len(mal) >= 12
    budget = AttackBudget(epsilon=0.1, max_iters=20)
    wins = 0
    for i, exe in enumerate(mal[:12]):
        outcome, attacked = embedding_fgsm_append(model, exe, 0.5, budget,
                                                  np.random.default_rng([13, i]))
        assert content_equal_except_unused(exe, attacked)
        assert attacked.payload[:len(exe.payload)] == exe.payload
        extras = attacked.sections[len(exe.sections):]
        assert all(s.flags == FLAG_UNUSED for s in extras)
        if outcome.success:
            score = tinyconv_scores(model, exes_to_sequences([attacked],
                                                             model.pad_len))[0]
            assert score < 0.5
            wins += 1
    assert wins >= 6


def test_constrained_zeroed_model_is_never_evaded():
    corpus = desk_corpus()
    model = trained(corpus, constrained=True)
    mal = classified_malicious(model, corpus)
    assert len(mal) >= 15
    budget = AttackBudget(epsilon=0.1, max_iters=10)
    for pct in (0.25, 0.5):
        for i, exe in enumerate(mal[:15]):
            outcome, attacked = embedding_fgsm_append(
                model, exe, pct, budget, np.random.default_rng([17, i]))
            assert not outcome.success
            assert content_equal_except_unused(exe, attacked)


def test_random_bytes_control_runs_without_gradients():
    corpus = desk_corpus()
    model = trained(corpus, constrained=True)
    exe = classified_malicious(model, corpus)[0]
    outcome, grown = random_bytes_control(model, exe, 0.25, np.random.default_rng(9))
    assert outcome.iterations_used == 0
    assert not outcome.success
    assert len(grown.payload) > len(exe.payload)


def test_control_pairing_shares_the_appended_section():
    corpus = desk_corpus()
    model = trained(corpus, constrained=False)
    exe = classified_malicious(model, corpus)[0]
    budget = AttackBudget(epsilon=0.1, max_iters=4)
    _, _, control = fgsm_append_with_control(model, exe, 0.25, budget,
                                             np.random.default_rng(10))
    ctrl_outcome, _ = random_bytes_control(model, exe, 0.25,
                                           np.random.default_rng(10))
    assert control == ctrl_outcome.success


def test_attack_is_deterministic():
    corpus = desk_corpus()
    model = trained(corpus, constrained=False)
    exe = classified_malicious(model, corpus)[0]
    budget = AttackBudget(epsilon=0.1, max_iters=8)
    a, exe_a = embedding_fgsm_append(model, exe, 0.5, budget,
                                     np.random.default_rng(12))
    b, exe_b = embedding_fgsm_append(model, exe, 0.5, budget,
                                     np.random.default_rng(12))
    assert a == b
    assert exe_a.payload == exe_b.payload


def test_sweep_emits_paired_curves_and_is_deterministic():
    corpus = desk_corpus()
    model = trained(corpus, constrained=True)
    files = classified_malicious(model, corpus)[:6]
    budget = AttackBudget(epsilon=0.1, max_iters=4)
    curve, control = malconv_append_sweep(model, files, (0.05, 0.25),
                                          budget, seed=21)
    assert curve.axis_name == "section_pct"
    assert [p[0] for p in curve.points] == [0.05, 0.25]
    assert all(p[1] == 0.0 for p in curve.points)  # the defense holds
    assert all(p[2] == 6 for p in curve.points)
    assert len(control.points) == 2
    again, control_again = malconv_append_sweep(model, files, (0.05, 0.25),
                                                budget, seed=21)
    assert again.points == curve.points
    assert control_again.points == control.points


def test_sweep_rejects_files_classified_benign():
    corpus = desk_corpus()
    model = trained(corpus, constrained=True)
    scores = tinyconv_scores(model, exes_to_sequences(corpus.samples, model.pad_len))
    benign = [e for e, s in zip(corpus.samples, scores) if s < 0.5]
    with pytest.raises(ValueError, match="malicious"):
        malconv_append_sweep(model, [benign[0]], (0.25,),
                             AttackBudget(max_iters=2), seed=0)


def test_benign_classified_input_rejected():
    corpus = desk_corpus()
    model = trained(corpus, constrained=True)
    scores = tinyconv_scores(model, exes_to_sequences(corpus.samples, model.pad_len))
    benign = [e for e, s in zip(corpus.samples, scores) if s < 0.5][0]
    with pytest.raises(ValueError, match="malicious"):
        embedding_fgsm_append(model, benign, 0.25, AttackBudget(max_iters=2),
                              np.random.default_rng(0))


def test_nonpositive_section_pct_rejected():
    corpus = desk_corpus()
    model = trained(corpus, constrained=True)
    exe = classified_malicious(model, corpus)[0]
    with pytest.raises(ValueError, match="section_pct"):
        embedding_fgsm_append(model, exe, 0.0, AttackBudget(max_iters=2),
                              np.random.default_rng(0))
