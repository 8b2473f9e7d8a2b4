"""Acceptance suite: one test per release criterion, each printing a
pass/fail line (run with ``pytest -s tests/test_acceptance.py`` to see them).

Criterion 6's full-scale reproduction needs externally published score files;
point ECUAS_TABLE1_DIR at a directory of posterior CSVs (see README) to run
it. Without them the committed synthetic golden fixtures are checked instead,
whose reference values were computed by the quadrature oracle and brute-force
re-implementations (tests/make_golden_fixtures.py).
"""

import json
import math
import os
import time

import numpy as np
import pytest

from ecuas.baselines import ScoredSample, aurc, selective_cost_identity, expected_cost_fixed_gamma
from ecuas.cli import main
from ecuas.core import (
    REJECT,
    CategoricalDistribution,
    ConfidenceOnly,
    CostMatrix,
    FullPosterior,
    PowerLaw,
    bayes_candidate,
    bayes_decision,
    c_n01,
    c_n01g,
    c_n_star,
    ecuas,
    u_max,
)
from ecuas.dataio import Dataset, read_report
from ecuas.experiments import DEFAULT_T_GRID, temperature_experiment
from ecuas.quadrature import QuadratureConfig, c_w_numeric

DATA = os.path.join(os.path.dirname(__file__), "data")

CUSTOM_A = CostMatrix.custom([[0.0, 3.0], [2.0, 0.0]])
CUSTOM_B = CostMatrix.custom(
    [[0.0, 1.0, 2.0, 0.3], [1.5, 0.0, 0.8, 0.3], [2.0, 1.0, 0.0, 0.3]]
)


def report(line):
    print(f"\n[PASS] {line}")


def test_criterion_1_closed_form_matches_oracle():
    mats = [CostMatrix.zero_one(k) for k in (2, 3, 5, 10, 100)] + [CUSTOM_A, CUSTOM_B]
    n_values = [0.0, 0.5, 1.0, 4.0, 32.0, 128.0]
    cfg = QuadratureConfig(subdivisions=16, tolerance=1e-10)
    rng = np.random.default_rng(2025)
    started = time.monotonic()
    worst = 0.0
    for i in range(10_000):
        c = mats[i % len(mats)]
        k = c.entries.shape[0]
        q = CategoricalDistribution(rng.dirichlet(np.ones(k)))
        y = int(rng.integers(k))
        n = n_values[i % len(n_values)]
        out = bayes_candidate(q, c)
        closed = c_n_star(y, out.candidate, out.uncertainty, n, c)
        numeric = c_w_numeric(y, out.candidate, out.uncertainty, PowerLaw(n), c, cfg)
        worst = max(worst, abs(closed - numeric))
    elapsed = time.monotonic() - started
    assert worst < 1e-8, f"worst |closed - oracle| = {worst}"
    assert elapsed < 30.0, f"criterion 1 took {elapsed:.1f} s"
    report(
        f"criterion 1: closed form vs quadrature oracle, 10,000 instances, "
        f"worst diff {worst:.2e} < 1e-8, {elapsed:.1f} s < 30 s"
    )


def test_criterion_2_scoring_rule_propriety():
    n_values = [0.0, 0.5, 1.0, 4.0, 128.0]
    ks = [2, 3, 5, 10]
    rng = np.random.default_rng(77)
    worst_violation = -math.inf
    pairs = 0
    for k in ks:
        c = CostMatrix.zero_one(k)
        for n in n_values:
            for _ in range(10_000 // (len(ks) * len(n_values))):
                pairs += 1
                p = CategoricalDistribution(rng.dirichlet(np.ones(k)))
                q = CategoricalDistribution(rng.dirichlet(np.ones(k)))

                def expected(evaluated):
                    out = bayes_candidate(evaluated, c)
                    return sum(
                        float(p.probs[y])
                        * c_n_star(y, out.candidate, out.uncertainty, n, c)
                        for y in range(k)
                    )

                violation = expected(p) - expected(q)
                worst_violation = max(worst_violation, violation)
    assert pairs == 10_000
    assert worst_violation <= 1e-10, f"propriety violated by {worst_violation}"
    report(
        f"criterion 2: truth-telling optimal on {pairs} random (p, q) pairs, "
        f"worst slack {worst_violation:.2e} <= 1e-10"
    )


def test_criterion_3_boundary_and_limit_suite():
    n_values = [0.0, 0.5, 1.0, 4.0, 128.0]
    # exact boundary cost at maximum uncertainty
    for c in [CostMatrix.zero_one(2), CostMatrix.zero_one(10), CUSTOM_A, CUSTOM_B]:
        top = u_max(c)
        for n in n_values:
            for y, cand in ((0, 0), (1, 0)):
                assert c_n_star(y, cand, top, n, c) == 1.0
    for n in n_values:
        for correct in (True, False):
            assert c_n01(correct, 0.5, n, 2) == 1.0
            assert c_n01g(correct, 0.0, n) == 1.0
    # sure and correct: zero up to the confidence clamp
    for n in n_values:
        for k in (2, 10, 1000):
            assert c_n01(True, 1.0, n, k) < 1e-5
        assert c_n01g(True, 1.0, n) < 1e-5
    # sharp-weight limit at n = 10^4
    for k in (2, 10, 100):
        q_min = 1.0 / k
        for q_e in np.linspace(q_min + 0.01, 0.99, 40):
            assert c_n01(True, float(q_e), 1e4, k) < 1e-3
            assert abs(c_n01(False, float(q_e), 1e4, k) - 1.0 / (1.0 - q_min)) < 1e-3
    # finite-K cost approaches the infinite-limit form
    worst = 0.0
    for n in n_values:
        for q_e in np.linspace(0.01, 0.99, 99):
            for correct in (True, False):
                worst = max(
                    worst,
                    abs(c_n01(correct, float(q_e), n, 10**6) - c_n01g(correct, float(q_e), n)),
                )
    assert worst < 1e-4
    report(
        f"criterion 3: boundary costs exact, clamp effects < 1e-5, n=1e4 limit "
        f"< 1e-3, K=1e6 agreement {worst:.2e} < 1e-4"
    )


def test_criterion_4_identity_and_bayes_optimality():
    rng = np.random.default_rng(99)
    # expected cost identity on 1,000 random datasets
    worst_gap = 0.0
    for _ in range(1_000):
        n_records = int(rng.integers(2, 30))
        kind = rng.integers(2)
        if kind == 0:
            records = [
                ConfidenceOnly(bool(rng.integers(2)), float(rng.uniform())) for _ in range(n_records)
            ]
            c = CostMatrix.generalized_zero_one(4)
        else:
            records = []
            for _ in range(n_records):
                q = rng.dirichlet(np.ones(3))
                records.append(FullPosterior(int(rng.integers(3)), CategoricalDistribution(q)))
            c = CostMatrix.zero_one(3)
        gamma = float(rng.uniform(0.0, 1.0))
        threshold = float(rng.uniform(0.0, 1.0))
        direct = expected_cost_fixed_gamma(records, c, gamma, threshold)
        _, _, combined = selective_cost_identity(records, c, gamma, threshold)
        worst_gap = max(worst_gap, abs(direct - combined))
    assert worst_gap < 1e-12

    # Bayes decisions beat every alternative on 1,000 random (q, gamma)
    mats = [CostMatrix.zero_one(2), CostMatrix.zero_one(5), CUSTOM_A, CUSTOM_B]
    for i in range(1_000):
        c = mats[i % len(mats)]
        k = c.entries.shape[0]
        q = rng.dirichlet(np.ones(k))
        gamma = float(rng.uniform(0.0, 1.3 * u_max(c)))
        decision = bayes_decision(CategoricalDistribution(q), c, gamma)
        achieved = gamma if decision is REJECT else float(q @ c.entries[:, decision])
        alternatives = list(q @ c.entries) + [gamma]
        assert achieved <= min(alternatives) + 1e-12
    report(
        f"criterion 4: selective-cost identity gap {worst_gap:.2e} < 1e-12 on 1,000 "
        f"datasets; Bayes decisions optimal on 1,000 (q, gamma) draws"
    )


def test_criterion_5_aurc_blind_where_aggregate_cost_sees():
    # miscalibrated synthetic dataset; cubing confidences preserves ranks
    rng = np.random.default_rng(5)
    records = []
    for _ in range(2_000):
        q_e = float(rng.uniform(0.25, 0.98))
        records.append(ConfidenceOnly(bool(rng.uniform() < 0.55 + 0.25 * q_e), q_e))
    transformed = [ConfidenceOnly(r.correct, r.q_e**3) for r in records]
    aurc_before = aurc([ScoredSample(r.q_e, r.correct) for r in records])
    aurc_after = aurc([ScoredSample(r.q_e, r.correct) for r in transformed])
    c = CostMatrix.generalized_zero_one_infinite()
    ecuas_before = ecuas(records, 0.0, c)
    ecuas_after = ecuas(transformed, 0.0, c)
    assert abs(aurc_before - aurc_after) < 1e-12
    delta = abs(ecuas_before - ecuas_after)
    assert delta > 1e-3
    report(
        f"criterion 5: cubing confidences moved AURC by "
        f"{abs(aurc_before - aurc_after):.1e} (< 1e-12) but ECUAS_0 by {delta:.3f} (> 0)"
    )


TABLE_1 = {
    # dataset, model -> {metric: (raw, cal)}
    ("cifar10", "resnet20"): {
        "n_er": (0.0822, 0.0839), "ece": (0.0382, 0.0070), "auc": (0.9216, 0.9233),
        "n_ce_qe": (0.7942, 0.6123), "n_bs_qe": (1.5977, 1.4360),
        "n_ce_q": (0.1223, 0.1011), "n_bs_q": (0.1319, 0.1243),
        "aurc": (0.0092, 0.0093),
        "n_ecuas_0": (0.2368, 0.1900), "n_ecuas_1": (0.1407, 0.1364),
        "n_ecuas_128": (0.0829, 0.0845),
    },
    ("cifar10", "vgg19"): {
        "n_er": (0.0677, 0.0683), "ece": (0.0504, 0.0128), "auc": (0.9209, 0.9184),
        "n_ce_qe": (1.2340, 0.6892), "n_bs_qe": (1.8889, 1.5651),
        "n_ce_q": (0.1528, 0.1033), "n_bs_q": (0.1237, 0.1103),
        "aurc": (0.0075, 0.0081),
        "n_ecuas_0": (0.3118, 0.1804), "n_ecuas_1": (0.1268, 0.1165),
        "n_ecuas_128": (0.0682, 0.0689),
    },
    ("cifar10", "repvgg"): {
        "n_er": (0.0526, 0.0528), "ece": (0.0318, 0.0084), "auc": (0.9217, 0.9146),
        "n_ce_qe": (0.8760, 0.6380), "n_bs_qe": (1.6854, 1.4953),
        "n_ce_q": (0.0921, 0.0736), "n_bs_q": (0.0889, 0.0824),
        "aurc": (0.0061, 0.0069),
        "n_ecuas_0": (0.1859, 0.1390), "n_ecuas_1": (0.0936, 0.0887),
        "n_ecuas_128": (0.0530, 0.0532),
    },
    ("cifar100", "resnet20"): {
        "n_er": (0.3148, 0.3167), "ece": (0.1033, 0.0163), "auc": (0.8360, 0.8423),
        "n_ce_qe": (0.8203, 0.7128), "n_bs_qe": (1.5483, 1.3798),
        "n_ce_q": (0.2661, 0.2434), "n_bs_q": (0.4497, 0.4299),
        "aurc": (0.1115, 0.1104),
        "n_ecuas_0": (0.6054, 0.5544), "n_ecuas_1": (0.4811, 0.4650),
        "n_ecuas_128": (0.3173, 0.3191),
    },
    ("cifar100", "vgg19"): {
        "n_er": (0.2639, 0.2657), "ece": (0.1968, 0.0439), "auc": (0.8671, 0.8570),
        "n_ce_qe": (1.6021, 0.7062), "n_bs_qe": (2.0075, 1.3265),
        "n_ce_q": (0.3919, 0.2475), "n_bs_q": (0.4494, 0.3746),
        "aurc": (0.0824, 0.0916),
        "n_ecuas_0": (0.9697, 0.5008), "n_ecuas_1": (0.4590, 0.3941),
        "n_ecuas_128": (0.2660, 0.2677),
    },
    ("cifar100", "repvgg"): {
        "n_er": (0.2273, 0.2277), "ece": (0.0558, 0.0478), "auc": (0.8741, 0.8722),
        "n_ce_qe": (0.7509, 0.7297), "n_bs_qe": (1.3781, 1.3690),
        "n_ce_q": (0.1999, 0.1982), "n_bs_q": (0.3269, 0.3262),
        "aurc": (0.0611, 0.0618),
        "n_ecuas_0": (0.4704, 0.4598), "n_ecuas_1": (0.3476, 0.3473),
        "n_ecuas_128": (0.2290, 0.2295),
    },
}


def _evaluate_to_metrics(tmp_path, input_path, tag):
    out = str(tmp_path / f"{tag}.json")
    rc = main(
        ["evaluate", "--input", input_path, "--kind", "posterior", "--normalize", "--out", out]
    )
    assert rc == 0
    return read_report(out).metrics


def test_criterion_6_offline_golden_reproduction(tmp_path):
    golden = json.load(open(os.path.join(DATA, "synthetic_posterior_golden.json")))
    metrics = _evaluate_to_metrics(tmp_path, os.path.join(DATA, "synthetic_posterior.csv"), "syn")
    worst = 0.0
    for name in ("er", "ece", "auc", "ce_qe", "bs_qe", "ce_q", "bs_q", "aurc",
                 "ecuas_0", "ecuas_1", "ecuas_128"):
        worst = max(worst, abs(metrics[name] - golden[name]))
        assert metrics[name] == pytest.approx(golden[name], abs=1e-8), name
    assert metrics["n_er"] == pytest.approx(golden["er"] / golden["naive_er"], abs=1e-8)
    for n in ("0", "1", "128"):
        assert metrics[f"n_ecuas_{n}"] == pytest.approx(
            golden[f"ecuas_{n}"] / golden["naive_ecuas"][n], abs=1e-8
        )
    report(
        f"criterion 6 (offline fallback): synthetic golden file reproduced, "
        f"worst raw-metric diff {worst:.2e} < 1e-8"
    )


@pytest.mark.skipif(
    not os.environ.get("ECUAS_TABLE1_DIR"),
    reason="published score files unavailable (set ECUAS_TABLE1_DIR; see README)",
)
def test_criterion_6_published_score_files(tmp_path):
    root = os.environ["ECUAS_TABLE1_DIR"]
    started = time.monotonic()
    checked = 0
    for (dataset, model), expected in TABLE_1.items():
        raw_path = os.path.join(root, f"{dataset}_{model}.csv")
        if not os.path.exists(raw_path):
            continue
        checked += 1
        raw_metrics = _evaluate_to_metrics(tmp_path, raw_path, f"{dataset}_{model}_raw")
        for name, (raw_target, _) in expected.items():
            tol = 0.02 if name == "ece" else 1e-3
            assert abs(raw_metrics[name] - raw_target) < tol, (dataset, model, name)
        cal_path = str(tmp_path / f"{dataset}_{model}_cal.csv")
        assert main(["calibrate", "--input", raw_path, "--out", cal_path]) == 0
        cal_metrics = _evaluate_to_metrics(tmp_path, cal_path, f"{dataset}_{model}_cal")
        for name, (_, cal_target) in expected.items():
            if name == "ece":
                continue  # binning convention and optimizer both unstated
            assert abs(cal_metrics[name] - cal_target) <= 0.05 * max(abs(cal_target), 1e-6), (
                dataset,
                model,
                name,
            )
    elapsed = time.monotonic() - started
    assert checked > 0, "ECUAS_TABLE1_DIR set but no recognized score files found"
    assert elapsed < 300.0
    report(f"criterion 6: {checked} published systems reproduced in {elapsed:.0f} s")


def test_criterion_7_generative_fixture(tmp_path):
    golden = json.load(open(os.path.join(DATA, "mini_generative_golden.json")))
    out_path = str(tmp_path / "mini_generative_report.json")
    rc = main(
        ["evaluate", "--input", os.path.join(DATA, "mini_generative.csv"), "--kind",
         "generative", "--cost", "zero-one-inf", "--out", out_path]
    )
    assert rc == 0
    metrics = read_report(out_path).metrics
    worst = 0.0
    for name, target in golden.items():
        worst = max(worst, abs(metrics[name] - target))
        assert metrics[name] == pytest.approx(target, abs=1e-8), name
    report(
        f"criterion 7: miniature generative fixture reproduced through the "
        f"confidence-record path, worst diff {worst:.2e} < 1e-8"
    )


def test_criterion_8_temperature_degradation():
    rng = np.random.default_rng(314)
    k, n_samples = 5, 10_000
    records = []
    for _ in range(n_samples):
        q = rng.dirichlet(np.full(k, 0.7))
        label = int(rng.choice(k, p=q))  # calibrated by construction
        records.append(FullPosterior(label, CategoricalDistribution(q)))
    dataset = Dataset("posterior", records, k=k)
    violations = 0
    cells = 0
    for seed in (0, 1, 2):
        rows = temperature_experiment(dataset, DEFAULT_T_GRID, (0.0, 1.0, 128.0), seed=seed)
        for n in (0.0, 1.0, 128.0):
            series = [r for r in rows if r["n"] == n]
            for prev, cur in zip(series, series[1:]):
                cells += 1
                drop = prev["ecuas"] - cur["ecuas"]
                allowance = math.hypot(prev["se"], cur["se"])
                assert drop <= allowance, (
                    f"seed={seed} n={n} t={cur['t']:.3g}: decrease {drop:.2e} "
                    f"exceeds 1 MC standard error {allowance:.2e}"
                )
                if drop > 0:
                    violations += 1
    report(
        f"criterion 8: degradation non-decreasing across {cells} grid steps "
        f"(3 seeds x 3 exponents); {violations} sub-SE dips allowed"
    )
