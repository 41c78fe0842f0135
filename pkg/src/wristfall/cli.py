"""Command-line interface.

Commands: ingest, synthesize, calibrate, train, evaluate, detect-stream,
export-plots. Exit codes: 0 success, 2 usage error, 3 data error, 4 internal
error. All randomness flows from --seed. Flag defaults may be supplied by a
JSON --config file (unknown keys are fatal); WRISTFALL_MANIFEST_DIR gives the
directory searched for bare manifest names.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import Label, SignalWindow, segment
from .datasets import ingest, load_manifest, read_canonical, read_canonical_trial, write_canonical
from .errors import DataError, WristfallError
from .evaluation import (
    DetectorSpec,
    EvalReport,
    predictions_csv,
    report_json,
    report_table,
    run_experiment,
    split_subjects,
)
from .features import extract
from .ml import FEATURE_VIEWS, MODEL_KINDS, load_model, predict, save_model, train
from .signals import derive_all
from .synthetic import synthesize
from .threshold import (
    THRESHOLD_SIGNALS,
    detect,
    fall_score,
    calibrate,
    load_threshold_config,
    save_threshold_config,
)

MANIFEST_DIR_ENV = "WRISTFALL_MANIFEST_DIR"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _resolve_manifest(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    env_dir = os.environ.get(MANIFEST_DIR_ENV)
    if env_dir:
        candidate = Path(env_dir) / value
        if candidate.exists():
            return candidate
        candidate = Path(env_dir) / f"{value}.json"
        if candidate.exists():
            return candidate
    raise DataError(f"manifest {value!r} not found (also searched ${MANIFEST_DIR_ENV})")


def _parse_signals(value: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in value.split(",") if s.strip())
    for name in names:
        if name not in THRESHOLD_SIGNALS:
            raise DataError(f"unknown signal {name!r}; expected one of {THRESHOLD_SIGNALS}")
    if not names:
        raise DataError("empty signal list")
    return names


def _parse_params(value: str | None) -> dict:
    if not value:
        return {}
    try:
        params = json.loads(value)
    except json.JSONDecodeError as exc:
        raise DataError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise DataError("--params must be a JSON object")
    return params


def _dev_windows(corpus: Path, seed: int, window_seconds: float):
    trials = read_canonical(corpus)
    split = split_subjects((r.subject_id for r in trials), seed)
    windows = []
    for rec in trials:
        if rec.subject_id in split.dev_subjects:
            windows.extend(segment(rec, window_seconds=window_seconds))
    return windows, split


def cmd_ingest(args) -> int:
    manifest = load_manifest(_resolve_manifest(args.manifest))
    trials, report = ingest(manifest)
    print(report.summary())
    if manifest.expected:
        exp = manifest.expected
        mismatches = []
        if "participants" in exp and len(report.subjects) != exp["participants"]:
            mismatches.append(f"participants {len(report.subjects)} != {exp['participants']}")
        if "adl_trials" in exp and report.n_adl != exp["adl_trials"]:
            mismatches.append(f"ADL trials {report.n_adl} != {exp['adl_trials']}")
        if "fall_trials" in exp and report.n_fall != exp["fall_trials"]:
            mismatches.append(f"fall trials {report.n_fall} != {exp['fall_trials']}")
        if mismatches:
            print("warning: corpus does not match manifest expectations: " + "; ".join(mismatches), file=sys.stderr)
    out = Path(args.out)
    write_canonical(trials, out)
    report_doc = {
        "n_trials": report.n_trials,
        "n_adl": report.n_adl,
        "n_fall": report.n_fall,
        "subjects": list(report.subjects),
        "skipped": [{"path": p, "reason": r} for p, r in report.skipped],
    }
    (out / "ingest_report.json").write_text(json.dumps(report_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    trials = synthesize(args.seed, n_subjects=args.subjects, trials_per_subject=args.trials_per_subject)
    write_canonical(trials, Path(args.out))
    n_fall = sum(1 for t in trials if t.label is Label.FALL)
    print(f"{len(trials)} trials ({len(trials) - n_fall} ADL / {n_fall} fall), {args.subjects} subjects")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise DataError(f"corpus directory {corpus} not found")
    windows, split = _dev_windows(corpus, args.seed, args.window_seconds)
    pairs = [(w, derive_all(w)) for w in windows]
    config = calibrate(pairs, signals=_parse_signals(args.signals))
    save_threshold_config(config, args.out)
    print(f"calibrated on {len(split.dev_subjects)} dev subjects: " + config.describe())
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise DataError(f"corpus directory {corpus} not found")
    windows, split = _dev_windows(corpus, args.seed, args.window_seconds)
    features = [extract(w, derive_all(w)) for w in windows]
    model = train(args.kind, args.view, features, args.seed, **_parse_params(args.params))
    save_model(model, args.out)
    print(f"trained {model.describe()} on {len(features)} dev windows from {len(split.dev_subjects)} subjects")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise DataError(f"corpus directory {corpus} not found")
    trials = read_canonical(corpus)
    if args.detector == "threshold":
        spec = DetectorSpec(kind="threshold", signals=_parse_signals(args.signals), params=_parse_params(args.params))
    else:
        spec = DetectorSpec(kind=args.detector, feature_view=args.view, params=_parse_params(args.params))
    dataset_name = args.dataset_name or corpus.name
    result = run_experiment(trials, spec, args.seed, window_seconds=args.window_seconds, dataset_name=dataset_name)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(result.report), encoding="utf-8")
    (out / "report.txt").write_text(report_table([result.report]), encoding="utf-8")
    if args.predictions:
        predictions_csv(result.predictions, out / "predictions.csv")

    r = result.report
    se = "-" if r.sensitivity is None else f"{r.sensitivity:.1f}%"
    sp = "-" if r.specificity is None else f"{r.specificity:.1f}%"
    print(f"{r.detector} on {r.dataset}: accuracy={r.accuracy:.1f}% SE={se} SP={sp}")
    return EXIT_OK


def _finalize_stream_window(samples: list[list[float]], index: int, detector) -> str | None:
    if len(samples) < 2:
        return None
    arr = np.asarray(samples)
    t = arr[:, 0]
    gaps = np.diff(t)
    rate = 1.0 / float(np.median(gaps))
    window = SignalWindow(
        recording_ref="stream",
        subject_id="stream",
        label=Label.ADL,  # placeholder; streaming input is unlabeled
        sample_rate_hz=rate,
        window_index=index,
        start_t=float(t[0]),
        end_t=float(t[-1]),
        t=t,
        acc=arr[:, 1:4],
        gyr=arr[:, 4:7],
    )
    label, score = detector(window)
    return f"{window.end_t!r},{label.value},{score:.6f}"


def cmd_detect_stream(args) -> int:
    if bool(args.model) == bool(args.threshold_config):
        raise DataError("provide exactly one of --model or --threshold-config")
    if args.model:
        model = load_model(args.model)

        def detector(window):
            return predict(model, extract(window, derive_all(window)))

    else:
        config = load_threshold_config(args.threshold_config)

        def detector(window):
            derived = derive_all(window)
            verdict, _ = detect(window, derived, config)
            return verdict, fall_score(derived, config)

    window_seconds = args.window_seconds
    samples: list[list[float]] = []
    start_t: float | None = None
    index = 0
    stream = sys.stdin
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("t,"):
            continue
        parts = line.split(",")
        try:
            values = [float(p) for p in parts]
            if len(values) != 7:
                raise ValueError(f"expected 7 fields, got {len(values)}")
        except ValueError as exc:
            print(f"warning: line {line_no} skipped ({exc})", file=sys.stderr)
            continue
        if start_t is None:
            start_t = values[0]
        if values[0] >= start_t + window_seconds:
            emitted = _finalize_stream_window(samples, index, detector)
            if emitted:
                print(emitted)
                index += 1
            samples = []
            start_t = values[0]
        samples.append(values)
    emitted = _finalize_stream_window(samples, index, detector)
    if emitted:
        print(emitted)
    return EXIT_OK


def cmd_export_plots(args) -> int:
    chosen = [x for x in (args.trial, args.report, args.reports) if x]
    if len(chosen) != 1:
        raise DataError("provide exactly one of --trial, --report, --reports")
    out = Path(args.out)

    if args.trial:
        t, acc, gyr = read_canonical_trial(args.trial)
        rate = 1.0 / float(np.median(np.diff(t)))
        window = SignalWindow(
            recording_ref=Path(args.trial).stem,
            subject_id="",
            label=Label.ADL,
            sample_rate_hz=rate,
            window_index=0,
            start_t=float(t[0]),
            end_t=float(t[-1]),
            t=t,
            acc=acc,
            gyr=gyr,
        )
        derived = derive_all(window)
        lines = ["t,smv_acc,smv_gyr,fi,avd"]
        for i in range(window.n_samples):
            lines.append(
                f"{t[i]!r},{derived.smv_acc[i]!r},{derived.smv_gyr[i]!r},{derived.fi[i]!r},{derived.avd[i]!r}"
            )
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif args.report:
        report = EvalReport.from_dict(json.loads(Path(args.report).read_text(encoding="utf-8")))
        lines = ["metric,value_pct"]
        for name, value in (
            ("accuracy", report.accuracy),
            ("sensitivity", report.sensitivity),
            ("specificity", report.specificity),
        ):
            lines.append(f"{name},{'' if value is None else repr(value)}")
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        report_paths = sorted(Path(args.reports).glob("**/report.json"))
        if not report_paths:
            raise DataError(f"no report.json files under {args.reports}")
        lines = ["detector,dataset,accuracy_pct,sensitivity_pct,specificity_pct"]
        for path in report_paths:
            r = EvalReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
            cells = [r.detector, r.dataset] + [
                "" if v is None else repr(v) for v in (r.accuracy, r.sensitivity, r.specificity)
            ]
            lines.append(",".join(cells))
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wristfall",
        description="Fall detection toolkit for wrist-worn IMU recordings.",
    )
    parser.add_argument("--config", help="JSON file of flag defaults (keys are flag names; unknown keys are fatal)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw corpus into the canonical format")
    p.add_argument("--manifest", required=True, help=f"manifest path or bare name under ${MANIFEST_DIR_ENV}")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synthesize", help="generate a deterministic synthetic corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subjects", type=int, default=6)
    p.add_argument("--trials-per-subject", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("calibrate", help="grid-search thresholds on the development split")
    p.add_argument("--corpus", required=True, help="canonical corpus directory")
    p.add_argument("--signals", default="smv_acc,fi,avd", help=f"comma list from {THRESHOLD_SIGNALS}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-seconds", type=float, default=60.0)
    p.add_argument("--out", required=True, help="threshold config file to write")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="train a classifier on the development split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", choices=MODEL_KINDS, required=True)
    p.add_argument("--view", choices=tuple(FEATURE_VIEWS), default="combined88")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-seconds", type=float, default=60.0)
    p.add_argument("--params", help="JSON object of hyperparameter overrides")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="run the subject-disjoint evaluation pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--detector", choices=("threshold", *MODEL_KINDS), required=True)
    p.add_argument("--signals", default="smv_acc,fi,avd", help="threshold detector signals")
    p.add_argument("--view", choices=tuple(FEATURE_VIEWS), default="combined88")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-seconds", type=float, default=60.0)
    p.add_argument("--params", help="JSON object of detector parameter overrides")
    p.add_argument("--dataset-name", default="", help="dataset label used in reports (default: corpus dir name)")
    p.add_argument("--predictions", action="store_true", help="also write per-window predictions.csv")
    p.add_argument("--out", required=True, help="output directory for report.json/report.txt")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "detect-stream",
        help="read canonical CSV rows (t,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z) from stdin; "
        "emit 't_end,label,score' per completed window",
    )
    p.add_argument("--model", help="model file from 'train'")
    p.add_argument("--threshold-config", help="config file from 'calibrate'")
    p.add_argument("--window-seconds", type=float, default=60.0)
    p.set_defaults(func=cmd_detect_stream)

    p = sub.add_parser(
        "export-plots",
        help="CSV series for external plotting: --trial gives 't,smv_acc,smv_gyr,fi,avd' rows; "
        "--report gives 'metric,value_pct' rows; --reports gives one "
        "'detector,dataset,accuracy_pct,sensitivity_pct,specificity_pct' row per report.json",
    )
    p.add_argument("--trial", help="canonical trial CSV")
    p.add_argument("--report", help="one report.json")
    p.add_argument("--reports", help="directory searched recursively for report.json files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_plots)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Load --config JSON defaults into the parser; unknown keys are usage errors."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        parser.error("--config needs a file argument")
    try:
        doc = json.loads(Path(argv[at + 1]).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config file: {exc}")
    if not isinstance(doc, dict):
        parser.error("config file must hold a JSON object")
    known = set()
    for action_parser in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
        known.update(a.dest for a in action_parser._actions)  # noqa: SLF001
    unknown = set(doc) - known
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    for action_parser in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
        action_parser.set_defaults(**{k: v for k, v in doc.items() if k in {a.dest for a in action_parser._actions}})
    return argv[:at] + argv[at + 2 :]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except WristfallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
