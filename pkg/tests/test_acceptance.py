"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see them
inline). Tolerances and runtime budgets are fixed here, not configurable.
"""

import random
import time

import numpy as np

from evalaudit.lexicon import audit_themes, default_lexicon
from evalaudit.predictor import PredictionSet
from evalaudit.records import write_jsonl
from evalaudit.report import AuditConfig, run_audit
from evalaudit.residuals import compare_all, compute_residuals, group_residuals
from evalaudit.stats import (
    ContingencyTable2x2,
    fisher_exact_two_sided,
    holm_bonferroni,
    krippendorff_alpha,
    odds_ratio,
)
from evalaudit.synth import SynthConfig, generate, power_experiment

from .oracles import alpha_pairwise, fisher_two_sided_exact, holm_stepdown
from .test_stats import TOY_MATRIX


def report_line(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {number} ({name}): {detail}")
    assert ok, f"criterion {number} ({name}): {detail}"


def test_criterion_1_fisher_odds_fixture():
    started = time.perf_counter()
    table = ContingencyTable2x2(146, 1621, 257, 1138)
    odds = odds_ratio(table)
    raw_p = fisher_exact_two_sided(table)
    adjusted = holm_bonferroni([raw_p] + [0.5] * 15)
    corrected = adjusted[0]
    elapsed = time.perf_counter() - started

    odds_ok = abs(odds.value - 0.401) <= 0.01
    target = 5.88e-16
    p_ok = target / 10 <= corrected <= target * 10
    minimal_ok = corrected == min(adjusted)
    ok = odds_ok and p_ok and minimal_ok and elapsed < 1.0
    report_line(
        1,
        "fisher/odds fixture",
        ok,
        f"OR={odds.value:.4f} (0.401±0.01), holm p={corrected:.3g} "
        f"(within 10x of 5.88e-16), {elapsed:.2f}s < 1s",
    )


def test_criterion_2_fisher_enumeration_oracle():
    started = time.perf_counter()
    rng = random.Random(424242)
    checked = 0
    worst = 0.0
    while checked < 1000:
        n = rng.randint(1, 24)
        r1 = rng.randint(0, n)
        c1 = rng.randint(0, n)
        a = rng.randint(max(0, c1 - (n - r1)), min(r1, c1))
        table = ContingencyTable2x2(a, r1 - a, c1 - a, (n - r1) - (c1 - a))
        if sum(table.cells) == 0:
            continue
        got = fisher_exact_two_sided(table)
        expected = fisher_two_sided_exact(*table.cells)
        worst = max(worst, abs(got - expected))
        checked += 1
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-10 and elapsed < 10.0
    report_line(
        2,
        "exact-test oracle",
        ok,
        f"1000 tables (n<=24), max |diff|={worst:.2e} <= 1e-10, {elapsed:.2f}s < 10s",
    )


def test_criterion_3_holm_oracle():
    started = time.perf_counter()
    rng = random.Random(31337)
    worst = 0.0
    for _ in range(1000):
        m = rng.randint(1, 20)
        ps = [rng.random() for _ in range(m)]
        if rng.random() < 0.3:  # force ties sometimes
            ps[rng.randrange(m)] = ps[0]
        got = holm_bonferroni(ps)
        expected = holm_stepdown(ps)
        worst = max(worst, max(abs(g - e) for g, e in zip(got, expected)))
        assert all(adj >= raw for adj, raw in zip(got, ps))
        order = sorted(range(m), key=lambda i: ps[i])
        ordered = [got[i] for i in order]
        assert all(x <= y for x, y in zip(ordered, ordered[1:]))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-12 and elapsed < 5.0
    report_line(
        3,
        "holm oracle",
        ok,
        f"1000 vectors (len<=20), max |diff|={worst:.2e}, dominance and "
        f"monotonicity hold, {elapsed:.2f}s < 5s",
    )


def test_criterion_4_null_calibration():
    started = time.perf_counter()
    config = SynthConfig(n=3000, seed=20260808)
    result = power_experiment(config, n_seeds=200, alpha=0.05)
    elapsed = time.perf_counter() - started
    ok = 0.02 <= result.rate <= 0.09 and elapsed < 600.0
    report_line(
        4,
        "null calibration",
        ok,
        f"rejection rate {result.rate:.3f} ({result.n_rejections}/200) in "
        f"[0.02, 0.09] at alpha=0.05, {elapsed:.0f}s < 600s",
    )


def test_criterion_5_power():
    started = time.perf_counter()
    config = SynthConfig(n=3000, seed=904, score_bias=0.3, biased_label="F")
    result = power_experiment(config, n_seeds=100, alpha=0.01)
    elapsed = time.perf_counter() - started
    # bias raises F scores, so the M-minus-F residual mean difference is negative
    signs_ok = all(d < 0 for d in result.mean_differences)
    ok = result.rate >= 0.90 and signs_ok and elapsed < 300.0
    report_line(
        5,
        "power",
        ok,
        f"rejection rate {result.rate:.2f} >= 0.90 at alpha=0.01, "
        f"sign matches injection in 100/100, {elapsed:.0f}s < 300s",
    )


def test_criterion_6_theme_recovery():
    started = time.perf_counter()
    lexicon = default_lexicon()
    seeds = np.random.SeedSequence(606).generate_state(50)
    odds_values = []
    unique_hits = 0
    for seed in seeds:
        config = SynthConfig(
            n=3162,
            seed=int(seed),
            female_student_share=1395 / 3162,
            theme_rates=(("F", 0.184), ("M", 0.0826)),
        )
        dataset, _ = generate(config)
        results = audit_themes(list(dataset), lexicon, dimension="student")
        social = next(t for t in results if t.theme == "Social-communal")
        odds_values.append(social.odds.value)
        significant = [t.theme for t in results if t.p_corrected < 0.05]
        if significant == ["Social-communal"]:
            unique_hits += 1
    elapsed = time.perf_counter() - started
    mean_or = float(np.mean(odds_values))
    ok = abs(mean_or - 0.401) <= 0.05 and unique_hits >= 0.95 * 50 and elapsed < 120.0
    report_line(
        6,
        "theme recovery",
        ok,
        f"mean OR {mean_or:.4f} (0.401±0.05), unique-significant {unique_hits}/50 "
        f">= 95%, {elapsed:.0f}s < 120s",
    )


def test_criterion_7_residual_identity_and_invariance():
    dataset, _ = generate(SynthConfig(n=400, seed=55))
    perfect = PredictionSet(
        y_hat={r.id: float(r.global_score) for r in dataset}, model_tag="oracle"
    )
    deltas = compute_residuals(dataset, perfect)
    all_zero = all(d == 0.0 for d in deltas.values())
    grouped = group_residuals(deltas, dataset, ["student"])
    identity_report = compare_all(grouped.sets)
    degenerate_ok = identity_report.pairwise[0].test.degenerate

    base = PredictionSet(
        y_hat={r.id: 0.9 * r.global_score + 0.2 for r in dataset}, model_tag="base"
    )
    shifted = PredictionSet(
        y_hat={k: v + 0.5 for k, v in base.y_hat.items()}, model_tag="shifted"
    )
    rep_base = compare_all(
        group_residuals(compute_residuals(dataset, base), dataset, ["student"]).sets
    )
    rep_shift = compare_all(
        group_residuals(compute_residuals(dataset, shifted), dataset, ["student"]).sets
    )
    t_deltas = [
        abs(a.test.statistic - b.test.statistic)
        for a, b in zip(rep_base.pairwise, rep_shift.pairwise)
    ]
    invariance_ok = max(t_deltas) <= 1e-12

    ok = all_zero and degenerate_ok and invariance_ok
    report_line(
        7,
        "residual identity/invariance",
        ok,
        f"perfect predictor gives all-zero residuals ({all_zero}) and a degenerate "
        f"test ({degenerate_ok}); +0.5 shift moves t by {max(t_deltas):.2e} <= 1e-12",
    )


def test_criterion_8_determinism(tmp_path):
    dataset, _ = generate(SynthConfig(n=300, seed=61))
    path = tmp_path / "corpus.jsonl"
    write_jsonl(dataset, path)
    config = AuditConfig(seed=14)
    first = run_audit(path, config).to_json()
    second = run_audit(path, config).to_json()
    ok = first.encode() == second.encode()
    report_line(
        8,
        "determinism",
        ok,
        f"two runs produced byte-identical JSON reports ({len(first)} bytes)",
    )


def test_criterion_9_agreement_kernel():
    perfect = [[0, 0, 0], [2, 2, 2], [3, 3, 3], [1, 1, 1]]
    perfect_alpha = krippendorff_alpha(perfect, metric="interval")
    exact_one = perfect_alpha.value == 1.0

    toy = krippendorff_alpha(TOY_MATRIX, metric="interval")
    toy_expected = alpha_pairwise(TOY_MATRIX, "interval")
    toy_ok = abs(toy.value - toy_expected) <= 1e-10 and abs(toy.value - 21 / 26) <= 1e-12

    metric_values = {}
    for metric in ("interval", "nominal", "ordinal"):
        result = krippendorff_alpha(TOY_MATRIX, metric=metric)
        oracle = alpha_pairwise(TOY_MATRIX, metric)
        metric_values[metric] = (result.value, abs(result.value - oracle) <= 1e-10)
    metrics_ok = all(match for _, match in metric_values.values())

    ok = exact_one and toy_ok and metrics_ok
    report_line(
        9,
        "agreement kernel",
        ok,
        f"perfect matrix alpha == 1.0 exactly ({exact_one}); toy matrix matches "
        f"coincidence oracle to 1e-10 under interval/nominal/ordinal "
        f"({[round(v, 4) for v, _ in metric_values.values()]})",
    )
