"""End-to-end glue: subject recordings -> feature tables -> per-fold models -> reports."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from wearauth.augment import apply, augment_all, enumerate_specs
from wearauth.authd import DEFAULT_TAU_MOVE, DEFAULT_THETA, AuthContext, authenticate
from wearauth.errors import DataError
from wearauth.evaluation import ConfusionCounts, metrics, plan_folds, roc_auc
from wearauth.features import HR, HRB, HRG, FeatureTable, feature_names, mfcc, stat_features_batch
from wearauth.learn.grid import grid_search
from wearauth.learn.model import DEFAULT_PARAMS, UNARY_CLASSIFIERS, train_model
from wearauth.segment import SampleWindow, extract_events, windowize
from wearauth.selection import Scaler, select_k

log = logging.getLogger(__name__)

EVENTS_PER_SUBJECT = 6


def subject_parts(item, bank, events_per_subject=EVENTS_PER_SUBJECT, window_len=10, step=5, models=(HR, HRG, HRB),
                  specs=None):
    """Per-instance feature blocks for one subject.

    Returns a dict with ``hr`` (n x 21), ``gait`` (n x 126), ``mfcc`` (n x 40)
    and ``groups`` (n,), where n = events_per_subject * 102. Only the blocks
    the requested models need are computed.
    """
    specs = enumerate_specs() if specs is None else specs
    per_event = len(specs)
    n = events_per_subject * per_event
    parts = {"groups": np.repeat(np.arange(events_per_subject), per_event)}

    hr_windows = windowize(item.hr, window_len, step)
    if len(hr_windows) < n:
        raise DataError(f"{item.subject}: {len(hr_windows)} heart-rate windows, need {n}")
    parts["hr"] = stat_features_batch(np.stack([w.channels[0] for w in hr_windows[:n]]))

    if HRG in models:
        gait_windows = windowize(item.gait, window_len, step)
        if len(gait_windows) < n:
            raise DataError(f"{item.subject}: {len(gait_windows)} gait windows, need {n}")
        chans = np.stack([w.channels for w in gait_windows[:n]])  # (n, 6, w)
        parts["gait"] = stat_features_batch(chans.reshape(-1, chans.shape[2])).reshape(n, -1)

    if HRB in models:
        events = extract_events(item.audio)
        if len(events) < events_per_subject:
            raise DataError(f"{item.subject}: found {len(events)} breathing events, need {events_per_subject}")
        variants = augment_all(events[:events_per_subject], bank, specs)
        parts["mfcc"] = np.stack([mfcc(v) for v in variants])
        parts["groups"] = np.array([v.group for v in variants])
    return parts


def build_tables(data, bank, models=(HR, HRG, HRB), events_per_subject=EVENTS_PER_SUBJECT,
                 window_len=10, step=5, specs=None):
    """Feature tables keyed by model kind, rows ordered by subject then instance."""
    blocks = {}
    for subject, item in data.items():
        log.info("featurizing %s", subject)
        blocks[subject] = subject_parts(item, bank, events_per_subject, window_len, step, models, specs)
    tables = {}
    for model in models:
        rows, subs, groups = [], [], []
        for subject, parts in blocks.items():
            cols = [parts["hr"]]
            if model == HRG:
                cols.append(parts["gait"])
            elif model == HRB:
                cols.append(parts["mfcc"])
            rows.append(np.hstack(cols))
            subs += [subject] * parts["hr"].shape[0]
            groups.append(parts["groups"])
        tables[model] = FeatureTable(feature_names(model), np.vstack(rows), np.array(subs), np.concatenate(groups))
    return tables


@dataclass(frozen=True)
class FoldResult:
    subject: str
    fold: int
    report: object
    confidence: np.ndarray
    valid: np.ndarray


def run_fold(plan, table, model_kind, classifier, params, k, seed, tol, grid):
    X = table.X
    y_train = np.where(plan.train_valid, 0, 1)
    if grid is not None and classifier not in UNARY_CLASSIFIERS:
        sel = select_k(X[plan.train_rows], y_train, k)
        Z = Scaler.fit(X[plan.train_rows][:, sel.kept]).transform(X[plan.train_rows][:, sel.kept])
        params, _ = grid_search(Z, y_train, classifier, grid, seed=seed)
    model = train_model(X[plan.train_rows], y_train, model_kind, classifier, params, table.names, k, seed, tol)
    X_test = X[plan.test_rows]
    conf = model.confidence(X_test)
    accepted = model.predict(X_test) == 0
    counts = ConfusionCounts.from_predictions(plan.test_valid, accepted)
    auc = float("nan") if model.unary else roc_auc(conf, plan.test_valid)
    return FoldResult(plan.subject, plan.held_out_group, metrics(counts, auc), conf, plan.test_valid.copy())


def evaluate_table(table, model_kind, classifier, params=None, k=20, seed=0, tol=1e-3, grid=None, jobs=1):
    """Run the leave-one-group-out protocol on ``table``; one FoldResult per fold.

    With a ``grid`` (e.g. ``DEFAULT_GRIDS[classifier]``) hyperparameters are
    searched separately inside every fold's training rows.
    """
    if params is None:
        params = DEFAULT_PARAMS[model_kind][classifier]
    plans = plan_folds(table.subjects, table.groups, seed)
    work = partial(run_fold, table=table, model_kind=model_kind, classifier=classifier,
                   params=params, k=k, seed=seed, tol=tol, grid=grid)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(work, plans))
    return [work(p) for p in plans]


def balanced_rows(subjects, target, seed=0):
    """All rows of ``target`` plus ``n_valid // n_imposters`` random rows per imposter."""
    subjects = np.asarray(subjects)
    ids = sorted(set(subjects.tolist()))
    if target not in ids:
        raise DataError(f"unknown subject {target!r}")
    own = np.flatnonzero(subjects == target)
    others = [o for o in ids if o != target]
    per = own.size // len(others)
    rng = np.random.default_rng([seed, ids.index(target)])
    picks = [np.sort(rng.choice(np.flatnonzero(subjects == o), per, replace=False)) for o in others]
    rows = np.concatenate([own, *picks])
    return rows, np.arange(rows.size) < own.size


def _still_window(like, rng):
    """A motionless gait window: gravity on z plus sensor noise."""
    values = rng.normal(0.0, 0.01, like.channels.shape)
    values[2] += 9.81
    return SampleWindow(like.subject, like.kind, values, like.index)


def simulate_sessions(data, bank, subject, classifier="svm-rbf", theta=DEFAULT_THETA, tau_move=DEFAULT_TAU_MOVE,
                      sedentary_fraction=0.5, seed=0, k=20, tol=1e-3, events_per_subject=EVENTS_PER_SUBJECT,
                      window_len=10, step=5, specs=None):
    """Train HR/HRG/HRB models for ``subject`` and replay held-out sessions through the authenticator.

    Models train on every group except the last; sessions are the last
    group's valid rows plus balanced imposter rows. A ``sedentary_fraction``
    of sessions swap in a motionless gait window so the HRB route is
    exercised. Returns ``[(session_subject, is_valid, AuthDecision), ...]``.
    """
    specs = enumerate_specs() if specs is None else specs
    tables = build_tables(data, bank, (HR, HRG, HRB), events_per_subject, window_len, step, specs)
    table = tables[HR]
    held_out = int(table.groups.max())
    plan = next(p for p in plan_folds(table.subjects, table.groups, seed)
                if p.subject == subject and p.held_out_group == held_out)
    y = np.where(plan.train_valid, 0, 1)
    models = {m: train_model(tables[m].X[plan.train_rows], y, m, classifier, None, tables[m].names, k, seed, tol)
              for m in (HR, HRG, HRB)}

    per_subject = events_per_subject * len(specs)
    order = list(data)
    cache = {}
    rng = np.random.default_rng([seed, 7])
    sessions = []
    for row, valid in zip(plan.test_rows, plan.test_valid):
        sid = table.subjects[row]
        i = int(row - order.index(sid) * per_subject)
        if sid not in cache:
            item = data[sid]
            cache[sid] = (windowize(item.hr, window_len, step), windowize(item.gait, window_len, step),
                          extract_events(item.audio))
        hr_w, gait_w, events = cache[sid]
        g = int(table.groups[row])
        breath = apply(events[g], specs[i - g * len(specs)], bank)
        gait = _still_window(gait_w[i], rng) if rng.random() < sedentary_fraction else gait_w[i]
        ctx = AuthContext.observe(hr_w[i], gait, breath, tau_move)
        sessions.append((sid, bool(valid), authenticate(ctx, models, theta)))
    return sessions
