"""Threshold detector: per-signal instantaneous tests combined by majority vote.

Each enabled derived signal votes Fall when any instantaneous value strictly
exceeds its threshold; the verdict is the majority of the votes and an exact
tie resolves to Fall (missed falls cost more than false alarms). Thresholds
are calibrated on a development set by grid search that maximizes specificity
subject to 100% sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Label, SignalWindow
from .errors import DataError, NoSignalsEnabled, SingleClassDevSet
from .signals import DerivedSignalSet

SIGNAL_UNITS = {"smv_acc": "g", "smv_gyr": "deg/s", "fi": "g", "avd": "g"}
THRESHOLD_SIGNALS = tuple(SIGNAL_UNITS)

# Per-signal (lo, hi, step) calibration grids.
DEFAULT_GRIDS: dict[str, tuple[float, float, float]] = {
    "smv_acc": (1.5, 6.0, 0.05),
    "fi": (0.5, 10.0, 0.05),
    "avd": (1.2, 4.0, 0.05),
    "smv_gyr": (100.0, 1000.0, 5.0),
}


@dataclass(frozen=True)
class ThresholdConfig:
    """Per-signal thresholds; direction is always 'above', ties vote Fall."""

    thresholds: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.thresholds:
            raise NoSignalsEnabled("threshold config enables no signals")
        for name, value in self.thresholds.items():
            if name not in SIGNAL_UNITS:
                raise DataError(f"unknown threshold signal {name!r}")
            if not np.isfinite(value) or value <= 0:
                raise DataError(f"threshold for {name} must be finite and positive, got {value}")

    @property
    def signals(self) -> tuple[str, ...]:
        return tuple(self.thresholds)

    def describe(self) -> str:
        return "threshold(" + ", ".join(f"{s}>{v:g}" for s, v in sorted(self.thresholds.items())) + ")"


def detect(
    window: SignalWindow, derived: DerivedSignalSet, config: ThresholdConfig
) -> tuple[Label, dict[str, Label]]:
    """Verdict for one window plus the per-signal vote record."""
    votes: dict[str, Label] = {}
    for name, threshold in config.thresholds.items():
        series = derived.by_name(name)
        votes[name] = Label.FALL if bool(np.any(series > threshold)) else Label.ADL
    fall_votes = sum(1 for v in votes.values() if v is Label.FALL)
    verdict = Label.FALL if 2 * fall_votes >= len(votes) else Label.ADL
    return verdict, votes


def fall_score(derived: DerivedSignalSet, config: ThresholdConfig) -> float:
    """Fraction of enabled signals voting Fall (detector confidence in [0, 1])."""
    fall_votes = sum(1 for name, thr in config.thresholds.items() if np.any(derived.by_name(name) > thr))
    return fall_votes / len(config.thresholds)


def grid_points(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return np.linspace(lo, hi, n + 1)


def calibrate(
    dev_windows: Sequence[tuple[SignalWindow, DerivedSignalSet]],
    signals: Iterable[str] = ("smv_acc", "fi", "avd"),
    grids: Mapping[str, tuple[float, float, float]] | None = None,
) -> ThresholdConfig:
    """Grid-search per-signal thresholds on a development set.

    For each signal independently, pick the grid point with the best
    specificity among those reaching 100% sensitivity; if no grid point
    reaches 100% sensitivity, pick the best sensitivity, breaking ties by
    higher specificity and then by the larger threshold. The result does not
    depend on the ordering of `dev_windows`.
    """
    signals = tuple(signals)
    if not signals:
        raise NoSignalsEnabled("no signals requested for calibration")
    grids = {**DEFAULT_GRIDS, **(grids or {})}

    labels = np.array([w.label is Label.FALL for w, _ in dev_windows], dtype=bool)
    if not (labels.any() and (~labels).any()):
        raise SingleClassDevSet("development set must contain both falls and ADLs")

    chosen: dict[str, float] = {}
    for name in signals:
        peaks = np.array([float(np.max(d.by_name(name))) for _, d in dev_windows])
        fall_peaks = peaks[labels]
        adl_peaks = peaks[~labels]
        best = None  # (se, sp, threshold)
        for theta in grid_points(*grids[name]):
            se = float(np.mean(fall_peaks > theta))
            sp = float(np.mean(adl_peaks <= theta))
            cand = (se, sp, float(theta))
            if best is None or cand > best:
                best = cand
        chosen[name] = best[2]
    return ThresholdConfig(thresholds=chosen)


def save_threshold_config(config: ThresholdConfig, path) -> None:
    """Human-editable key-value file; round-trips bit-exactly via repr floats."""
    lines = [
        "# wristfall threshold config",
        "# vote Fall when any instantaneous value strictly exceeds the threshold;",
        "# verdict is the majority of votes, exact tie -> Fall",
    ]
    for name in THRESHOLD_SIGNALS:
        if name in config.thresholds:
            lines.append(f"{name} = {config.thresholds[name]!r}  # {SIGNAL_UNITS[name]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_threshold_config(path) -> ThresholdConfig:
    thresholds: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}:{line_no}: expected 'signal = value'")
            name, value = (part.strip() for part in line.split("=", 1))
            try:
                thresholds[name] = float(value)
            except ValueError:
                raise DataError(f"{path}:{line_no}: bad threshold value {value!r}") from None
    return ThresholdConfig(thresholds=thresholds)
