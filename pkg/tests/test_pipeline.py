import numpy as np
import pytest

from wearauth.augment import default_noise_bank, enumerate_specs
from wearauth.authd import ACCEPT, REVOKE
from wearauth.errors import DataError
from wearauth.features import HR, HRB, HRG
from wearauth.ingest import synth_dataset
from wearauth.pipeline import balanced_rows, build_tables, evaluate_table, simulate_sessions, subject_parts

SPECS = enumerate_specs(pitch=False, noise=False)  # identity + 7 speed changes


@pytest.fixture(scope="module")
def data():
    return synth_dataset(2, subjects=3)


@pytest.fixture(scope="module")
def bank():
    return default_noise_bank()


@pytest.fixture(scope="module")
def tables(data, bank):
    return build_tables(data, bank, specs=SPECS)


def test_subject_parts_shapes(data, bank):
    parts = subject_parts(data["S01"], bank, specs=SPECS)
    n = 6 * len(SPECS)
    assert parts["hr"].shape == (n, 21) and parts["gait"].shape == (n, 126) and parts["mfcc"].shape == (n, 40)
    assert parts["groups"].tolist() == [g for g in range(6) for _ in SPECS]
    hr_only = subject_parts(data["S01"], bank, models=(HR,), specs=SPECS)
    assert set(hr_only) == {"hr", "groups"}
    assert np.array_equal(hr_only["hr"], parts["hr"])


def test_tables_layout(tables):
    n = 6 * len(SPECS)
    assert tables[HR].X.shape == (3 * n, 21)
    assert tables[HRG].X.shape == (3 * n, 147)
    assert tables[HRB].X.shape == (3 * n, 61)
    assert tables[HRB].subjects[n] == "S02"
    for model in (HRG, HRB):
        assert np.array_equal(tables[model].X[:, :21], tables[HR].X)


def test_too_few_events(data, bank):
    with pytest.raises(DataError, match="breathing events"):
        subject_parts(data["S01"], bank, events_per_subject=7, specs=SPECS)


def test_evaluate_table_parallel_matches_serial(tables):
    serial = evaluate_table(tables[HRG], HRG, "svm-rbf", seed=3)
    parallel = evaluate_table(tables[HRG], HRG, "svm-rbf", seed=3, jobs=2)
    assert len(serial) == 18
    for a, b in zip(serial, parallel):
        assert a.report == b.report and np.array_equal(a.confidence, b.confidence)


def test_evaluate_with_single_cell_grid(tables):
    results = evaluate_table(tables[HR], HR, "knn", grid={"k": [3]})
    fixed = evaluate_table(tables[HR], HR, "knn", params={"k": 3})
    assert [r.report for r in results] == [r.report for r in fixed]


def test_unary_auc_is_nan(tables):
    results = evaluate_table(tables[HRB], HRB, "ocsvm")
    assert all(np.isnan(r.report.AUC_ROC) for r in results)
    assert all(0 <= r.report.ACC <= 1 for r in results)


def test_balanced_rows():
    subjects = np.repeat(["A", "B", "C"], 10)
    rows, valid = balanced_rows(subjects, "B", seed=0)
    assert valid.sum() == 10 and (~valid).sum() == 10
    assert np.all(subjects[rows[valid]] == "B")
    with pytest.raises(DataError):
        balanced_rows(subjects, "Z")


def test_simulate_routes(data, bank):
    sessions = simulate_sessions(data, bank, "S02", sedentary_fraction=0.5, seed=0, specs=SPECS)
    assert len(sessions) == len(SPECS) + 2 * (len(SPECS) // 2)
    routes = {d.route for _, _, d in sessions}
    assert routes <= {HR, HRG, HRB}
    for sid, valid, d in sessions:
        assert d.outcome in (ACCEPT, REVOKE)
        assert valid == (sid == "S02")
