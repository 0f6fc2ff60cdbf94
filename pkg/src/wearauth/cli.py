"""wearauth command line.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 non-convergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from wearauth.augment import augment_all, default_noise_bank, enumerate_specs, load_noise_bank, write_noise_bank
from wearauth.authd import ACCEPT, estimate_latency, session_record
from wearauth.config import ENV_VAR, describe, load_config, with_overrides
from wearauth.dsp import write_wav
from wearauth.errors import DataError, WearAuthError
from wearauth.evaluation import (SweepCurve, aggregate, eer, format_table, report_row, threshold_sweep,
                                 write_aggregate_csv, write_curve_csv, write_reports_csv)
from wearauth.features import MODEL_KINDS, read_feature_csv, write_feature_csv
from wearauth.ingest import load_audio, load_dataset, synth_dataset, write_dataset
from wearauth.learn.model import CLASSIFIERS, DEFAULT_PARAMS, OCSVM, train_model
from wearauth.pipeline import balanced_rows, build_tables, evaluate_table, simulate_sessions
from wearauth.plots import plot_error_curve, plot_metric_boxes
from wearauth.segment import BreathingEvent, Original, extract_events

log = logging.getLogger("wearauth")

MODEL_CHOICES = {m.lower(): m for m in MODEL_KINDS}


def _specs(cfg):
    return enumerate_specs(cfg.augment_pitch, cfg.augment_speed, cfg.augment_noise)


def _bank(cfg):
    """Noise bank from ``noise_dir``, else the data directory's ``noise/``, else the generated one."""
    if cfg.noise_dir:
        return load_noise_bank(cfg.noise_dir, cfg.sample_rate)
    shipped = Path(cfg.data_dir) / "noise"
    if shipped.is_dir():
        return load_noise_bank(shipped, cfg.sample_rate)
    return default_noise_bank(cfg.sample_rate)


def _params(cfg, model, classifier):
    params = dict(DEFAULT_PARAMS[model][classifier])
    if classifier == OCSVM:
        params["nu"] = cfg.nu
    return params


def _out(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _table(args, cfg, model):
    if getattr(args, "features", None):
        return read_feature_csv(args.features)
    data = load_dataset(cfg.data_dir, cfg.sample_rate)
    return build_tables(data, _bank(cfg), (model,), cfg.events_per_subject, cfg.window_len,
                        cfg.window_step, _specs(cfg))[model]


def cmd_synth(args, cfg):
    data = synth_dataset(cfg.seed, cfg.synth_subjects, cfg.synth_separation, sample_rate=cfg.sample_rate)
    write_dataset(cfg.data_dir, data)
    write_noise_bank(Path(cfg.data_dir) / "noise", default_noise_bank(cfg.sample_rate))
    print(f"wrote {len(data)} subjects to {cfg.data_dir}")


def cmd_augment(args, cfg):
    if args.clip:
        events = extract_events(load_audio(args.clip, Path(args.clip).stem, cfg.sample_rate), Path(args.clip).stem)
    else:
        paths = sorted(Path(args.events).glob("*.wav"))
        if not paths:
            raise DataError(f"{args.events}: no WAV files")
        events = []
        for i, p in enumerate(paths):
            clip = load_audio(p, p.stem, cfg.sample_rate)
            events.append(BreathingEvent(clip.subject, clip.pcm, clip.sample_rate, Original(p.stem, i)))
    variants = augment_all(events, _bank(cfg), _specs(cfg))
    out = _out(cfg) / "augmented"
    out.mkdir(parents=True, exist_ok=True)
    per = len(_specs(cfg))
    for n, v in enumerate(variants):
        parent = v.origin.parent
        write_wav(out / f"{parent.clip_id}_e{parent.ordinal:02d}_v{n % per:03d}.wav", v.pcm, v.sample_rate)
    print(f"wrote {len(variants)} augmented events to {out}")


def cmd_featurize(args, cfg):
    model = MODEL_CHOICES[args.model]
    table = _table(argparse.Namespace(), cfg, model)
    path = Path(args.out) if args.out else _out(cfg) / f"features_{args.model}.csv"
    write_feature_csv(path, table)
    print(f"wrote {len(table)} rows x {len(table.names)} features to {path}")


def cmd_train(args, cfg):
    model = MODEL_CHOICES[args.model]
    table = _table(args, cfg, model)
    subject = args.subject or table.subject_ids()[0]
    if args.classifier == OCSVM:
        rows = np.flatnonzero(table.subjects == subject)
        valid = np.ones(rows.size, dtype=bool)
    else:
        rows, valid = balanced_rows(table.subjects, subject, cfg.seed)
    trained = train_model(table.X[rows], np.where(valid, 0, 1), model, args.classifier,
                          _params(cfg, model, args.classifier), table.names, cfg.k, cfg.seed, cfg.tol)
    path = Path(args.out) if args.out else _out(cfg) / f"model_{args.model}_{args.classifier}_{subject}.json"
    trained.save(path)
    print(f"wrote {path}")


def _evaluate(args, cfg):
    model = MODEL_CHOICES[args.model]
    table = _table(args, cfg, model)
    grid = cfg.grids().get(args.classifier) if cfg.grid_search else None
    results = evaluate_table(table, model, args.classifier, _params(cfg, model, args.classifier), cfg.k,
                             cfg.seed, cfg.tol, grid, cfg.jobs)
    return model, results


def cmd_evaluate(args, cfg):
    model, results = _evaluate(args, cfg)
    out = _out(cfg)
    stem = f"{args.model}_{args.classifier}"
    write_reports_csv(out / f"reports_{stem}.csv",
                      [report_row(r.subject, r.fold, model, args.classifier, r.report) for r in results])
    summary = aggregate([r.report for r in results])
    write_aggregate_csv(out / f"aggregate_{stem}.csv", model, args.classifier, summary)
    with open(out / f"scores_{stem}.csv", "w", encoding="utf-8") as fh:
        fh.write("subject,fold,valid,confidence\n")
        for r in results:
            for v, c in zip(r.valid, r.confidence):
                fh.write(f"{r.subject},{r.fold},{int(v)},{float(c)!r}\n")
    plot_metric_boxes(out / f"boxes_{stem}.svg", [r.report for r in results], f"{model} {args.classifier}")
    print(format_table(model, args.classifier, summary, cfg.k))
    print(f"{len(results)} fold reports written to {out / f'reports_{stem}.csv'}")


def cmd_curves(args, cfg):
    out = _out(cfg)
    stem = f"{args.model}_{args.classifier}"
    scores_path = Path(args.scores) if args.scores else out / f"scores_{stem}.csv"
    folds = {}
    if scores_path.exists():
        with open(scores_path, encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                subject, fold, valid, conf = line.rstrip("\n").split(",")
                v, c = folds.setdefault((subject, fold), ([], []))
                v.append(valid == "1")
                c.append(float(conf))
    else:
        _, results = _evaluate(args, cfg)
        folds = {(r.subject, r.fold): (r.valid, r.confidence) for r in results}
    curves = [threshold_sweep(c, v) for v, c in folds.values()]
    mean = SweepCurve(curves[0].thresholds, np.mean([c.far for c in curves], axis=0),
                      np.mean([c.frr for c in curves], axis=0))
    result = eer(mean)
    write_curve_csv(out / f"curve_{stem}.csv", mean)
    plot_error_curve(out / f"curve_{stem}.svg", mean, result, f"{args.model.upper()} {args.classifier}")
    flag = " (no crossing; closest point)" if result.flagged else ""
    print(f"EER {result.rate:.4f} at threshold {result.threshold:.3f}{flag}")


def cmd_simulate(args, cfg):
    data = load_dataset(cfg.data_dir, cfg.sample_rate)
    subject = args.subject or next(iter(data))
    sessions = simulate_sessions(data, _bank(cfg), subject, args.classifier, cfg.theta, cfg.tau_move,
                                 cfg.sedentary_fraction, cfg.seed, cfg.k, cfg.tol, cfg.events_per_subject,
                                 cfg.window_len, cfg.window_step, _specs(cfg))
    path = _out(cfg) / f"sessions_{subject}.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for sid, valid, decision in sessions:
            record = session_record(decision, args.x)
            record.update({"subject": sid, "valid_user": valid})
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    valid = [d.outcome == ACCEPT for _, v, d in sessions if v]
    imposter = [d.outcome == ACCEPT for _, v, d in sessions if not v]
    print(f"{len(sessions)} sessions: valid acceptance {np.mean(valid):.3f}, "
          f"imposter acceptance {np.mean(imposter):.3f}; log at {path}")


def cmd_latency(args, cfg):
    print(f"{estimate_latency(args.x, args.route.upper()):g}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wearauth", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Context-dependent implicit authentication for wearables.",
        epilog=f"config keys (file given by --config or ${ENV_VAR}):\n{describe()}")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--data-dir", dest="data_dir")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--subjects", type=int, dest="synth_subjects")
    p.add_argument("--separation", type=float, dest="synth_separation")
    p.add_argument("--out", dest="data_dir_out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("augment", help="write the augmented variants of breathing events")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--events", help="directory of single-event WAVs")
    src.add_argument("--clip", help="breathing clip to segment first")
    p.set_defaults(func=cmd_augment)

    def model_args(p, classifier=True):
        p.add_argument("--model", choices=sorted(MODEL_CHOICES), default="hrb")
        if classifier:
            p.add_argument("--classifier", choices=CLASSIFIERS, default="svm-rbf")

    p = sub.add_parser("featurize", help="write the feature matrix CSV for one model")
    model_args(p, classifier=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train one subject's model and save it as JSON")
    model_args(p)
    p.add_argument("--features", help="feature CSV (default: featurize --data-dir)")
    p.add_argument("--subject")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="leave-one-group-out evaluation over every subject")
    model_args(p)
    p.add_argument("--features")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("curves", help="FAR/FRR versus confidence threshold, with EER")
    model_args(p)
    p.add_argument("--features")
    p.add_argument("--scores", help="scores CSV from evaluate (default: re-evaluate if absent)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("simulate", help="replay held-out sessions through the authenticator")
    p.add_argument("--subject")
    p.add_argument("--classifier", choices=[c for c in CLASSIFIERS if c != OCSVM], default="svm-rbf")
    p.add_argument("--x", type=float, default=60.0, help="seconds per heart-rate sample")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("latency", help="estimated decision latency for a route")
    p.add_argument("--x", type=float, required=True, help="seconds per heart-rate sample")
    p.add_argument("--route", choices=["hr", "hrg", "hrb"], required=True)
    p.set_defaults(func=cmd_latency)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, data_dir=getattr(args, "data_dir_out", None) or args.data_dir,
                             output_dir=args.output_dir, seed=args.seed,
                             synth_subjects=getattr(args, "synth_subjects", None),
                             synth_separation=getattr(args, "synth_separation", None))
        args.func(args, cfg)
    except WearAuthError as exc:
        print(f"wearauth: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"wearauth: error: {exc}", file=sys.stderr)
        return 3
    return 0
