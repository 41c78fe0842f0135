import numpy as np
import pytest

from wristfall.core import Label, SignalWindow, Source, TrialRecording
from wristfall.synthetic import synthesize


def make_recording(
    t,
    acc,
    gyr=None,
    rate=25.0,
    label=Label.ADL,
    trial_id="trial",
    subject="S01",
    code="TEST",
):
    t = np.asarray(t, dtype=float)
    acc = np.asarray(acc, dtype=float).reshape(-1, 3)
    gyr = np.zeros_like(acc) if gyr is None else np.asarray(gyr, dtype=float).reshape(-1, 3)
    return TrialRecording(
        trial_id=trial_id,
        subject_id=subject,
        activity_code=code,
        label=label,
        sample_rate_hz=rate,
        t=t,
        acc=acc,
        gyr=gyr,
        source=Source.SYNTHETIC,
    )


def make_window(acc, gyr=None, rate=25.0, label=Label.ADL, ref="trial"):
    acc = np.asarray(acc, dtype=float).reshape(-1, 3)
    gyr = np.zeros_like(acc) if gyr is None else np.asarray(gyr, dtype=float).reshape(-1, 3)
    n = acc.shape[0]
    t = np.arange(n) / rate
    return SignalWindow(
        recording_ref=ref,
        subject_id="S01",
        label=label,
        sample_rate_hz=rate,
        window_index=0,
        start_t=0.0,
        end_t=float(t[-1]),
        t=t,
        acc=acc,
        gyr=gyr,
    )


@pytest.fixture(scope="session")
def synth_trials():
    return synthesize(seed=2024, n_subjects=6, trials_per_subject=20)
