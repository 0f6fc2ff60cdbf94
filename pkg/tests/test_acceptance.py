"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected and repeated in the terminal summary at the end of
the run (see conftest.py).
"""

import csv
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from wearauth.augment import NoiseMix, augment_all, default_noise_bank, enumerate_specs, noise_components
from wearauth.authd import (ACCEPT, BELOW_THRESHOLD, NON_SEDENTARY, REVOKE, SEDENTARY, AuthContext, authenticate,
                            estimate_latency)
from wearauth.cli import main
from wearauth.evaluation import ConfusionCounts, eer, metrics, plan_folds, threshold_sweep
from wearauth.features import HR, HRB, HRG, STAT_NAMES, dct_matrix, frame_count, mfcc, stat_features
from wearauth.ingest import synth_dataset
from wearauth.learn.calibration import calibrate
from wearauth.learn.kernels import RBF, Kernel
from wearauth.learn.model import CLASSIFIERS, DEFAULT_PARAMS, RF
from wearauth.learn.svm import kkt_violation, ocsvm_train, smo_train
from wearauth.pipeline import build_tables, run_fold
from wearauth.segment import GAIT, HEART_RATE, BreathingEvent, Original, SampleWindow

from conftest import ACCEPTANCE_LINES, SR
from oracles import dual_objective, normal_cdf, qp_oracle, stat_oracle
from test_svm import random_problem


@contextmanager
def criterion(number, title, limit_s=None):
    start = time.perf_counter()
    notes = {}
    try:
        yield notes
        elapsed = time.perf_counter() - start
        if limit_s is not None:
            assert elapsed < limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
    except BaseException as exc:
        line = f"FAIL criterion {number}: {title} ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    detail = "; ".join(f"{k}={v}" for k, v in notes.items())
    line = f"PASS criterion {number}: {title} [{elapsed:.2f}s]" + (f" {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_metric_identities():
    with criterion(1, "metric identities and worked example", limit_s=1.0):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            c = ConfusionCounts(*(int(v) for v in rng.integers(0, 1000, 4)))
            if c.total == 0:
                continue
            r = metrics(c)
            assert abs(r.ACC - (1 - r.RMSE ** 2)) <= 1e-12
            assert abs(r.ACC - (c.TP + c.TN) / c.total) <= 1e-12
            if c.FP + c.TN:
                assert abs(r.FAR - c.FP / (c.FP + c.TN)) <= 1e-12
            if c.TP + c.FN:
                assert abs(r.FRR - c.FN / (c.TP + c.FN)) <= 1e-12
            if c.TP:
                precision, recall = c.TP / (c.TP + c.FP), c.TP / (c.TP + c.FN)
                assert abs(r.F1 - 2 * precision * recall / (precision + recall)) <= 1e-12
        r = metrics(ConfusionCounts(TP=47, FN=3, FP=5, TN=45))
        assert abs(r.ACC - 0.92) <= 1e-12 and abs(r.FAR - 0.10) <= 1e-12
        assert abs(r.FRR - 0.06) <= 1e-12 and abs(r.F1 - 94 / 102) <= 1e-12
        assert abs(round(r.F1, 4) - 0.9216) <= 1e-12


def _events(subject, count, seconds=0.25, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * SR)) / SR
    return [BreathingEvent(subject, 0.2 * np.sin(2 * np.pi * rng.uniform(300, 900) * t) + 0.02 * rng.normal(size=t.size),
                           SR, Original(subject, i)) for i in range(count)]


def test_criterion_02_augmentation_accounting():
    with criterion(2, "augmentation accounting and SNR", limit_s=30.0) as notes:
        specs = enumerate_specs()
        assert len(specs) == 102 and len(set(specs)) == 102
        bank = default_noise_bank()
        events = _events("S01", 6, seconds=1.4)
        variants = augment_all(events, bank)
        assert len(variants) == 612
        worst = 0.0
        for ev in events:
            for spec in specs:
                if isinstance(spec, NoiseMix):
                    clean, scaled = noise_components(ev.pcm, bank.clips[spec.noise_id], spec.snr)
                    achieved = np.mean(clean ** 2) / np.mean(scaled ** 2)
                    worst = max(worst, abs(achieved - spec.snr) / spec.snr)
        assert worst <= 1e-6
        notes["max_snr_rel_error"] = f"{worst:.1e}"


def test_criterion_03_smo_correctness():
    with criterion(3, "SMO against projected-gradient QP oracle", limit_s=60.0) as notes:
        rng = np.random.default_rng(0)
        worst_obj = worst_dec = 0.0
        for i in range(50):
            X, y, kernel, C = random_problem(rng, i)
            model, alpha = smo_train(X, y, kernel, C, tol=1e-10, return_dual=True)
            K = kernel(X, X)
            a_ref, obj_ref, b_ref = qp_oracle(K, y, C)
            worst_obj = max(worst_obj, abs(dual_objective(alpha, K, y) - obj_ref))
            probes = 2 * rng.normal(size=(20, 2))
            ref = kernel(probes, X) @ (a_ref * y) + b_ref
            worst_dec = max(worst_dec, float(np.max(np.abs(model.decision_function(probes) - ref))))
            assert np.all(alpha >= 0) and np.all(alpha <= C)
            assert abs(np.sum(alpha * y)) <= 1e-8
            G = (y[:, None] * y[None, :] * K) @ alpha - 1.0
            assert kkt_violation(alpha, G, y, C) <= 1e-10
        assert worst_obj <= 1e-6 and worst_dec <= 1e-4
        notes["max_objective_gap"] = f"{worst_obj:.1e}"
        notes["max_decision_gap"] = f"{worst_dec:.1e}"


def test_criterion_04_nu_property():
    with criterion(4, "one-class nu-property", limit_s=30.0) as notes:
        X = np.random.default_rng(4).normal(size=(100, 2))
        n = X.shape[0]
        for nu in (0.1, 0.5, 0.9):
            # a point counts as a margin error when it is outside by more than the solver tolerance
            model, alpha = ocsvm_train(X, nu, Kernel(RBF, gamma=0.5), tol=1e-6, return_dual=True)
            f = model.decision_function(X)
            errors = float(np.mean(f < -1e-6))
            svs = float(np.mean(alpha > 0))
            assert errors <= nu + 1 / n and nu <= svs + 1 / n
            assert np.all(alpha <= 1 / (nu * n) + 1e-12) and abs(alpha.sum() - 1) <= 1e-8
            notes[f"nu={nu}"] = f"errors {errors:.2f} sv {svs:.2f}"


@pytest.fixture(scope="module")
def provenance():
    """612 augmented variants for each of 10 synthetic subjects."""
    bank = default_noise_bank()
    variants = []
    for s in range(10):
        variants += augment_all(_events(f"S{s + 1:02d}", 6, seed=s), bank)
    return variants


def test_criterion_05_protocol_accounting(provenance):
    with criterion(5, "fold accounting and leakage scan", limit_s=10.0):
        variants = provenance
        subjects = np.array([v.subject for v in variants])
        groups = np.array([v.group for v in variants])
        plans = plan_folds(subjects, groups, seed=0)
        assert len(plans) == 60
        leaks = 0
        for p in plans:
            assert (p.train_valid.sum(), (~p.train_valid).sum()) == (510, 504)
            assert (p.test_valid.sum(), (~p.test_valid).sum()) == (102, 99)
            held_out = {v.origin.parent for v in (variants[i] for i in p.test_rows)}
            leaks += sum(variants[i].origin.parent in held_out for i in p.train_rows)
        assert leaks == 0


@pytest.fixture(scope="module")
def hr_table():
    return build_tables(synth_dataset(1), default_noise_bank(), (HR,))[HR]


def test_criterion_06_eer_machinery(hr_table):
    with criterion(6, "EER on Gaussian scores and sweep monotonicity", limit_s=30.0) as notes:
        rng = np.random.default_rng(6)
        raw = np.concatenate([rng.normal(1, 1, 10000), rng.normal(-1, 1, 10000)])
        valid = np.arange(20000) < 10000
        conf = calibrate(raw, valid)(raw)
        res = eer(threshold_sweep(conf, valid))
        assert not res.flagged and abs(res.rate - normal_cdf(-1)) <= 0.02
        notes["eer"] = f"{res.rate:.4f} vs {normal_cdf(-1):.4f}"
        plans = plan_folds(hr_table.subjects, hr_table.groups, seed=0)
        checked = 0
        for clf in CLASSIFIERS:
            for plan in plans[:1 if clf == RF else 6]:
                r = run_fold(plan, hr_table, HR, clf, DEFAULT_PARAMS[HR][clf], 20, 0, 1e-3, None)
                curve = threshold_sweep(r.confidence, r.valid)
                assert np.all(np.diff(curve.far) <= 0) and np.all(np.diff(curve.frr) >= 0)
                checked += 1
        notes["models_checked"] = checked


def _reports(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept")
    assert main(["--data-dir", str(root / "data"), "--seed", "1", "synth", "--subjects", "10"]) == 0
    return root


@pytest.mark.slow
def test_criterion_07_pipeline_end_to_end(synth_dir):
    with criterion(7, "synthetic pipeline HRB/HR/unary", limit_s=600.0) as notes:
        base = ["--data-dir", str(synth_dir / "data"), "--output-dir", str(synth_dir / "out7"), "--seed", "1"]
        means = {}
        for model, clf in (("hrb", "svm-rbf"), ("hr", "svm-rbf"), ("hrb", "ocsvm")):
            assert main([*base, "evaluate", "--model", model, "--classifier", clf]) == 0
            rows = _reports(synth_dir / "out7" / f"reports_{model}_{clf}.csv")
            assert len(rows) == 60
            means[model, clf] = {m: float(np.mean([float(r[m]) for r in rows])) for m in ("ACC", "F1")}
            with open(synth_dir / "out7" / f"scores_{model}_{clf}.csv", encoding="utf-8") as fh:
                scored = list(csv.DictReader(fh))
            for key in {(s["subject"], s["fold"]) for s in scored}:
                fold = [s for s in scored if (s["subject"], s["fold"]) == key]
                curve = threshold_sweep([float(s["confidence"]) for s in fold], [s["valid"] == "1" for s in fold])
                assert np.all(np.diff(curve.far) <= 0) and np.all(np.diff(curve.frr) >= 0)
        hrb, hr, unary = means["hrb", "svm-rbf"], means["hr", "svm-rbf"], means["hrb", "ocsvm"]
        notes["HRB_ACC"] = f"{hrb['ACC']:.3f}"
        notes["HRB_F1"] = f"{hrb['F1']:.3f}"
        notes["HR_ACC"] = f"{hr['ACC']:.3f}"
        notes["unary_HRB_ACC"] = f"{unary['ACC']:.3f}"
        assert hrb["ACC"] >= 0.90 and hrb["F1"] >= 0.90
        assert hrb["ACC"] > hr["ACC"]
        assert unary["ACC"] >= 0.65


def test_criterion_08_feature_oracle():
    with criterion(8, "statistical features, DCT and MFCC examples", limit_s=30.0):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            w = rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 10), int(rng.integers(2, 50)))
            ref = stat_oracle(w)
            got = dict(zip(STAT_NAMES, stat_features(w)))
            for name in STAT_NAMES:
                assert abs(got[name] - ref[name]) <= 1e-9 * max(1.0, abs(ref[name])), name
        M = dct_matrix(64)
        assert np.max(np.abs(M @ M.T - np.eye(64))) <= 1e-9
        assert frame_count(110250) == 212 == (110250 - 2048) // 512 + 1
        zero = mfcc(np.zeros(SR))
        assert abs(zero[0] - math.log(1e-10) * math.sqrt(64)) <= 1e-12 * abs(zero[0])
        assert np.all(np.abs(zero[1:]) <= 1e-9)


class _Fixed:
    def __init__(self, value):
        self.value = value

    def confidence(self, X):
        return np.full(len(X), self.value)


def test_criterion_09_router_latency():
    with criterion(9, "routing examples and latency substitutions", limit_s=1.0):
        hr_win = SampleWindow("S01", HEART_RATE, np.arange(60.0, 70.0)[None, :], 0)
        gait = SampleWindow("S01", GAIT, np.zeros((6, 10)), 0)
        event = BreathingEvent("S01", 0.1 * np.ones(SR), SR, Original("S01", 0))

        def run(hr, movement, hrg=0.5, hrb=0.5):
            ms = {HR: _Fixed(hr), HRG: _Fixed(hrg), HRB: _Fixed(hrb)}
            return authenticate(AuthContext(hr_win, movement, gait, event), ms, 0.52)

        d = run(0.9, SEDENTARY)
        assert (d.outcome, d.route) == (ACCEPT, HR)
        d = run(0.3, NON_SEDENTARY, hrg=0.8)
        assert (d.outcome, d.route) == (ACCEPT, HRG)
        d = run(0.3, SEDENTARY, hrb=0.4)
        assert (d.outcome, d.route, d.reason) == (REVOKE, HRB, BELOW_THRESHOLD)
        assert estimate_latency(60, HR) == 600
        assert estimate_latency(1, HRG) == 20
        assert abs(estimate_latency(0.1, HRB) - 2.4) <= 1e-12
        assert abs(estimate_latency(0.14, HRB) - 2.8) <= 1e-12
        assert abs(10 * 0.14 + 1.4 - 2.8) <= 1e-12


def test_criterion_10_determinism(synth_dir):
    with criterion(10, "repeated evaluate gives byte-identical reports"):
        outputs = []
        for run in ("a", "b"):
            out = synth_dir / f"out10{run}"
            args = ["--data-dir", str(synth_dir / "data"), "--output-dir", str(out), "--seed", "7"]
            assert main([*args, "evaluate", "--model", "hrg", "--classifier", "svm-rbf"]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        assert set(outputs[0]) == {"reports_hrg_svm-rbf.csv", "aggregate_hrg_svm-rbf.csv", "scores_hrg_svm-rbf.csv"}
        assert outputs[0] == outputs[1]
