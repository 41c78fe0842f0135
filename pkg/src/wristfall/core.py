"""Domain types for wrist-worn IMU recordings and the fixed-duration windowing policy.

Units are normalized at ingestion: accelerometer channels in g, gyroscope
channels in deg/s, timestamps in seconds since recording start.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import EmptyRecording, InvalidRecording

# Wearable corpora targeted here sample between 15 and 30 Hz.
RATE_BOUNDS_HZ = (15.0, 30.0)
# Declared rate must agree with the median inter-sample gap to within 20%.
RATE_GAP_RELTOL = 0.20

DEFAULT_WINDOW_SECONDS = 60.0
DEFAULT_MIN_SAMPLES = 2


class Label(Enum):
    FALL = "Fall"
    ADL = "ADL"


class Source(Enum):
    ERCIYES = "Erciyes"
    UMAFALL = "UMAFall"
    CANONICAL = "Canonical"
    SYNTHETIC = "Synthetic"


@dataclass(frozen=True)
class SensorSample:
    """One timestamped 6-axis reading: acc (x, y, z) in g, gyr (x, y, z) in deg/s."""

    t: float
    acc: tuple[float, float, float]
    gyr: tuple[float, float, float]


@dataclass(frozen=True)
class TrialRecording:
    """One labeled activity recording.

    `t` has shape (n,), `acc` and `gyr` have shape (n, 3). Arrays are treated
    as immutable after construction; all functions in this package only read
    them, which keeps recordings safe to share across threads.
    """

    trial_id: str
    subject_id: str
    activity_code: str
    label: Label
    sample_rate_hz: float
    t: np.ndarray
    acc: np.ndarray
    gyr: np.ndarray
    source: Source = Source.CANONICAL

    @classmethod
    def from_samples(
        cls,
        trial_id: str,
        subject_id: str,
        activity_code: str,
        label: Label,
        sample_rate_hz: float,
        samples: Sequence[SensorSample],
        source: Source = Source.CANONICAL,
    ) -> "TrialRecording":
        t = np.array([s.t for s in samples], dtype=float)
        acc = np.array([s.acc for s in samples], dtype=float).reshape(-1, 3)
        gyr = np.array([s.gyr for s in samples], dtype=float).reshape(-1, 3)
        return cls(trial_id, subject_id, activity_code, label, sample_rate_hz, t, acc, gyr, source)

    @property
    def n_samples(self) -> int:
        return int(self.t.shape[0])

    @property
    def duration_s(self) -> float:
        return float(self.t[-1] - self.t[0]) if self.n_samples else 0.0

    def iter_samples(self) -> Iterator[SensorSample]:
        for i in range(self.n_samples):
            yield SensorSample(float(self.t[i]), tuple(self.acc[i]), tuple(self.gyr[i]))

    def validate(self) -> None:
        """Raise EmptyRecording/InvalidRecording if any invariant is violated."""
        n = self.n_samples
        if n == 0:
            raise EmptyRecording(self.trial_id)
        if n < 2:
            raise InvalidRecording(self.trial_id, "fewer than 2 samples")
        if self.acc.shape != (n, 3) or self.gyr.shape != (n, 3):
            raise InvalidRecording(self.trial_id, "channel arrays not shaped (n, 3)")
        if not np.all(np.isfinite(self.t)):
            raise InvalidRecording(self.trial_id, "non-finite timestamp")
        if self.t[0] < 0:
            raise InvalidRecording(self.trial_id, "negative start timestamp")
        gaps = np.diff(self.t)
        if np.any(gaps <= 0):
            bad = int(np.argmax(gaps <= 0)) + 1
            raise InvalidRecording(self.trial_id, f"timestamps not strictly increasing at sample {bad}")
        if not (np.all(np.isfinite(self.acc)) and np.all(np.isfinite(self.gyr))):
            raise InvalidRecording(self.trial_id, "non-finite channel value")
        lo, hi = RATE_BOUNDS_HZ
        if not (lo <= self.sample_rate_hz <= hi):
            raise InvalidRecording(self.trial_id, f"sample rate {self.sample_rate_hz} Hz outside [{lo}, {hi}]")
        median_gap = float(np.median(gaps))
        implied = 1.0 / median_gap
        if abs(implied - self.sample_rate_hz) > RATE_GAP_RELTOL * self.sample_rate_hz:
            raise InvalidRecording(
                self.trial_id,
                f"declared rate {self.sample_rate_hz} Hz vs median-gap rate {implied:.2f} Hz beyond 20%",
            )


@dataclass(frozen=True)
class SignalWindow:
    """A fixed-duration slice of a recording, carrying the six raw channel segments."""

    recording_ref: str
    subject_id: str
    label: Label
    sample_rate_hz: float
    window_index: int
    start_t: float
    end_t: float
    t: np.ndarray
    acc: np.ndarray
    gyr: np.ndarray

    @property
    def window_ref(self) -> str:
        return f"{self.recording_ref}#w{self.window_index}"

    @property
    def n_samples(self) -> int:
        return int(self.t.shape[0])


def segment(
    recording: TrialRecording,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> list[SignalWindow]:
    """Split a recording into consecutive non-overlapping windows of `window_seconds`.

    Boundary policy: sample i belongs to window k when
    t0 + k*window_seconds <= t[i] < t0 + (k+1)*window_seconds. A trailing
    remainder shorter than `window_seconds` becomes its own window when it has
    at least `min_samples` samples and is otherwise merged into the previous
    window; a recording shorter than `window_seconds` yields exactly one
    window. Deterministic: equal inputs give identical boundaries.
    """
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    n = recording.n_samples
    if n == 0:
        raise EmptyRecording(recording.trial_id)

    t = recording.t
    t0 = float(t[0])
    t_last = float(t[-1])

    boundaries = []
    k = 1
    while t0 + k * window_seconds <= t_last:
        boundaries.append(t0 + k * window_seconds)
        k += 1
    cuts = np.searchsorted(t, np.asarray(boundaries), side="left") if boundaries else np.empty(0, dtype=int)

    edges = sorted(set([0, *map(int, cuts), n]))
    # Merge any undersized segment into its neighbour (trailing remainders in
    # practice; the first segment merges forward instead).
    changed = True
    while changed and len(edges) > 2:
        changed = False
        for i in range(len(edges) - 1):
            if edges[i + 1] - edges[i] < min_samples:
                del edges[i if i > 0 else 1]
                changed = True
                break

    windows = []
    for idx, (a, b) in enumerate(zip(edges, edges[1:])):
        windows.append(
            SignalWindow(
                recording_ref=recording.trial_id,
                subject_id=recording.subject_id,
                label=recording.label,
                sample_rate_hz=recording.sample_rate_hz,
                window_index=idx,
                start_t=float(t[a]),
                end_t=float(t[b - 1]),
                t=t[a:b],
                acc=recording.acc[a:b],
                gyr=recording.gyr[a:b],
            )
        )
    return windows
