"""Subject-disjoint evaluation: splitting, metrics, and the experiment pipeline.

The pipeline is split → segment → derive → fit on development subjects only →
predict on evaluation subjects → confusion metrics (Fall is the positive
class). Every consumption of a subject's data is recorded in an AccessLog
keyed by (subject_id, stage) so tests can prove that no evaluation subject is
touched during calibration, standardization, or training.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Label, SignalWindow, TrialRecording, segment
from .errors import ExperimentStageError, TooFewSubjects
from .features import FeatureVector, extract
from .ml import ClassifierModel, predict, train
from .signals import derive_all
from .threshold import ThresholdConfig, calibrate, detect, fall_score

EVAL_FRACTION = 0.2

STAGE_CALIBRATION = "calibration"
STAGE_STANDARDIZATION = "standardization"
STAGE_TRAINING = "training"
STAGE_PREDICTION = "prediction"
FIT_STAGES = (STAGE_CALIBRATION, STAGE_STANDARDIZATION, STAGE_TRAINING)


class AccessLog:
    """Set of (subject_id, stage) pairs recording who was read when."""

    def __init__(self):
        self._events: set[tuple[str, str]] = set()

    def record(self, subject_id: str, stage: str) -> None:
        self._events.add((subject_id, stage))

    @property
    def events(self) -> frozenset[tuple[str, str]]:
        return frozenset(self._events)

    def digest(self) -> str:
        joined = "\n".join(f"{s}\t{st}" for s, st in sorted(self._events))
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()

    def violations(self, eval_subjects: Iterable[str]) -> list[tuple[str, str]]:
        """Eval-subject accesses outside the prediction stage (empty = no leakage)."""
        eval_set = set(eval_subjects)
        return sorted((s, st) for s, st in self._events if s in eval_set and st != STAGE_PREDICTION)


@dataclass(frozen=True)
class SubjectSplit:
    dev_subjects: tuple[str, ...]
    eval_subjects: tuple[str, ...]
    seed: int


def split_subjects(subjects: Iterable[str], seed: int) -> SubjectSplit:
    """Deterministic 80/20 subject split; eval gets max(1, round(0.2 n)) subjects."""
    ordered = sorted(set(subjects))
    n = len(ordered)
    if n < 2:
        raise TooFewSubjects(f"need at least 2 subjects, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    shuffled = [ordered[i] for i in perm]
    n_eval = max(1, round(EVAL_FRACTION * n))
    return SubjectSplit(
        dev_subjects=tuple(sorted(shuffled[:-n_eval])),
        eval_subjects=tuple(sorted(shuffled[-n_eval:])),
        seed=seed,
    )


@dataclass(frozen=True)
class EvalReport:
    detector: str
    dataset: str
    tp: int
    fn: int
    tn: int
    fp: int
    accuracy: float | None
    sensitivity: float | None
    specificity: float | None

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp

    def to_dict(self) -> dict:
        return {
            "detector": self.detector,
            "dataset": self.dataset,
            "confusion": {"tp": self.tp, "fn": self.fn, "tn": self.tn, "fp": self.fp},
            "accuracy_pct": self.accuracy,
            "sensitivity_pct": self.sensitivity,
            "specificity_pct": self.specificity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        c = d["confusion"]
        return cls(
            detector=d["detector"],
            dataset=d["dataset"],
            tp=int(c["tp"]),
            fn=int(c["fn"]),
            tn=int(c["tn"]),
            fp=int(c["fp"]),
            accuracy=d["accuracy_pct"],
            sensitivity=d["sensitivity_pct"],
            specificity=d["specificity_pct"],
        )


def compute_metrics(
    predictions: Sequence[tuple[Label, Label]],
    detector: str = "",
    dataset: str = "",
) -> EvalReport:
    """Confusion counts and percentage metrics from (predicted, actual) pairs.

    Ratios with a zero denominator are reported as None, never as 0 or 100.
    """
    if not predictions:
        raise ValueError("no predictions to score")
    tp = fn = tn = fp = 0
    for predicted, actual in predictions:
        if actual is Label.FALL:
            if predicted is Label.FALL:
                tp += 1
            else:
                fn += 1
        else:
            if predicted is Label.FALL:
                fp += 1
            else:
                tn += 1
    total = tp + fn + tn + fp
    accuracy = 100.0 * (tp + tn) / total
    sensitivity = 100.0 * tp / (tp + fn) if (tp + fn) else None
    specificity = 100.0 * tn / (tn + fp) if (tn + fp) else None
    return EvalReport(detector, dataset, tp, fn, tn, fp, accuracy, sensitivity, specificity)


def _fmt_pct(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}%"


def report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table: one metric per row, one detector per column."""
    headers = [f"{r.detector} [{r.dataset}]" if r.dataset else r.detector for r in reports]
    rows = [
        ("Accuracy", [_fmt_pct(r.accuracy) for r in reports]),
        ("Sensitivity (SE)", [_fmt_pct(r.sensitivity) for r in reports]),
        ("Specificity (SP)", [_fmt_pct(r.specificity) for r in reports]),
    ]
    label_w = max(len(r[0]) for r in rows)
    widths = [max(len(h), *(len(row[1][i]) for row in rows)) for i, h in enumerate(headers)]
    lines = [" " * label_w + "  " + "  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for name, cells in rows:
        lines.append(name.ljust(label_w) + "  " + "  ".join(c.rjust(w) for c, w in zip(cells, widths)))
    return "\n".join(lines) + "\n"


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class PredictionRecord:
    window_ref: str
    subject_id: str
    actual: Label
    predicted: Label
    score: float


def predictions_csv(records: Sequence[PredictionRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_ref", "subject_id", "actual", "predicted", "score"])
        for r in records:
            writer.writerow([r.window_ref, r.subject_id, r.actual.value, r.predicted.value, repr(r.score)])


@dataclass(frozen=True)
class DetectorSpec:
    """What to run: 'threshold' with a signal set, or 'knn'/'rf'/'svm' with a view."""

    kind: str
    signals: tuple[str, ...] = ("smv_acc", "fi", "avd")
    feature_view: str = "combined88"
    params: dict = field(default_factory=dict)

    def describe(self) -> str:
        if self.kind == "threshold":
            return "threshold(" + "+".join(self.signals) + ")"
        return f"{self.kind}({self.feature_view})"


@dataclass
class ExperimentResult:
    report: EvalReport
    split: SubjectSplit
    access_log: AccessLog
    predictions: list[PredictionRecord]
    threshold_config: ThresholdConfig | None = None
    model: ClassifierModel | None = None


def _windows_of(trials: Iterable[TrialRecording], window_seconds: float) -> list[SignalWindow]:
    windows: list[SignalWindow] = []
    for rec in trials:
        windows.extend(segment(rec, window_seconds=window_seconds))
    return windows


def run_experiment(
    trials: Sequence[TrialRecording],
    spec: DetectorSpec,
    seed: int,
    window_seconds: float = 60.0,
    dataset_name: str = "",
) -> ExperimentResult:
    """Full subject-disjoint evaluation of one detector configuration.

    No evaluation-subject data reaches calibration, standardization, or
    training; the returned access log substantiates that.
    """
    log = AccessLog()

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ExperimentStageError:
            raise
        except Exception as exc:
            raise ExperimentStageError(name, exc) from exc

    split = stage("split", split_subjects, (r.subject_id for r in trials), seed)
    dev_trials = [r for r in trials if r.subject_id in split.dev_subjects]
    eval_trials = [r for r in trials if r.subject_id in split.eval_subjects]

    threshold_config: ThresholdConfig | None = None
    model: ClassifierModel | None = None

    if spec.kind == "threshold":
        def _calibrate():
            pairs = []
            for w in _windows_of(dev_trials, window_seconds):
                log.record(w.subject_id, STAGE_CALIBRATION)
                pairs.append((w, derive_all(w)))
            return calibrate(pairs, signals=spec.signals, grids=spec.params.get("grids"))

        threshold_config = stage(STAGE_CALIBRATION, _calibrate)
        detector_desc = threshold_config.describe()

        def _predict_window(w):
            derived = derive_all(w)
            verdict, _ = detect(w, derived, threshold_config)
            return verdict, fall_score(derived, threshold_config)

    else:
        def _train():
            features: list[FeatureVector] = []
            for w in _windows_of(dev_trials, window_seconds):
                log.record(w.subject_id, STAGE_STANDARDIZATION)
                log.record(w.subject_id, STAGE_TRAINING)
                features.append(extract(w, derive_all(w)))
            return train(spec.kind, spec.feature_view, features, seed, **spec.params)

        model = stage(STAGE_TRAINING, _train)
        detector_desc = model.describe()

        def _predict_window(w):
            return predict(model, extract(w, derive_all(w)))

    def _evaluate():
        records = []
        for w in _windows_of(eval_trials, window_seconds):
            log.record(w.subject_id, STAGE_PREDICTION)
            predicted, score = _predict_window(w)
            records.append(PredictionRecord(w.window_ref, w.subject_id, w.label, predicted, float(score)))
        return records

    records = stage(STAGE_PREDICTION, _evaluate)
    report = stage(
        "metrics",
        compute_metrics,
        [(r.predicted, r.actual) for r in records],
        detector=detector_desc,
        dataset=dataset_name,
    )
    return ExperimentResult(
        report=report,
        split=split,
        access_log=log,
        predictions=records,
        threshold_config=threshold_config,
        model=model,
    )
