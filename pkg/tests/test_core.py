import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_recording
from wristfall.core import Label, segment
from wristfall.errors import EmptyRecording, InvalidRecording


def regular_recording(duration_s, rate, **kwargs):
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    rng = np.random.default_rng(1)
    acc = rng.normal(0, 0.1, (n, 3)) + np.array([0, 0, 1.0])
    gyr = rng.normal(0, 5.0, (n, 3))
    return make_recording(t, acc, gyr, rate=rate, **kwargs)


def segment_oracle(t, window_seconds, min_samples):
    """Scalar-loop reference: assign each sample to its window by timestamp,
    then merge undersized trailing groups backwards."""
    t0 = t[0]
    assignment = []
    k = 0
    for ti in t:
        while ti >= t0 + (k + 1) * window_seconds:
            k += 1
        assignment.append(k)
    groups = []
    for i, k in enumerate(assignment):
        if groups and groups[-1][0] == k:
            groups[-1][1].append(i)
        else:
            groups.append((k, [i]))
    merged = [idx for _, idx in groups]
    while len(merged) > 1 and len(merged[-1]) < min_samples:
        merged[-2].extend(merged[-1])
        del merged[-1]
    return merged


class TestValidation:
    def test_good_recording_passes(self):
        regular_recording(10, 25).validate()

    def test_empty_recording(self):
        rec = make_recording(np.array([]), np.zeros((0, 3)))
        with pytest.raises(EmptyRecording):
            rec.validate()

    def test_single_sample_rejected(self):
        rec = make_recording([0.0], [[0, 0, 1]])
        with pytest.raises(InvalidRecording, match="fewer than 2"):
            rec.validate()

    def test_non_monotonic_timestamps_rejected(self):
        rec = make_recording([0.0, 0.1, 0.1, 0.2], np.zeros((4, 3)))
        with pytest.raises(InvalidRecording, match="strictly increasing"):
            rec.validate()

    def test_non_finite_channel_rejected(self):
        acc = np.zeros((4, 3))
        acc[2, 1] = np.nan
        rec = make_recording([0, 0.04, 0.08, 0.12], acc)
        with pytest.raises(InvalidRecording, match="non-finite"):
            rec.validate()

    def test_rate_outside_bounds_rejected(self):
        rec = regular_recording(5, 25)
        bad = make_recording(rec.t * 25 / 50, rec.acc, rec.gyr, rate=50.0)
        with pytest.raises(InvalidRecording, match="outside"):
            bad.validate()

    def test_rate_inconsistent_with_gaps_rejected(self):
        # declared 25 Hz but samples spaced at 18 Hz (~28% off)
        n = 100
        rec = make_recording(np.arange(n) / 18.0, np.tile([0, 0, 1.0], (n, 1)), rate=25.0)
        with pytest.raises(InvalidRecording, match="median-gap"):
            rec.validate()


class TestSampleConstruction:
    def test_from_samples_round_trip(self):
        from wristfall.core import Label, SensorSample, Source, TrialRecording

        samples = [
            SensorSample(t=i / 25.0, acc=(0.1 * i, 0.0, 1.0), gyr=(1.0, -2.0, 0.5 * i)) for i in range(10)
        ]
        rec = TrialRecording.from_samples("r1", "S01", "T", Label.ADL, 25.0, samples, Source.SYNTHETIC)
        assert rec.n_samples == 10
        back = list(rec.iter_samples())
        assert back == samples


class TestSegment:
    def test_short_recording_single_window(self):
        rec = regular_recording(15, 25)
        windows = segment(rec, window_seconds=60)
        assert len(windows) == 1
        assert windows[0].n_samples == rec.n_samples
        assert windows[0].start_t == rec.t[0]
        assert windows[0].end_t == rec.t[-1]

    def test_exact_tiling(self):
        rec = regular_recording(120, 20)
        windows = segment(rec, window_seconds=60)
        assert [w.n_samples for w in windows] == [1200, 1200]

    def test_remainder_becomes_own_window(self):
        # 130 s at 25 Hz -> 60 s, 60 s, 10 s; frozen values from segment_oracle
        rec = regular_recording(130, 25)
        windows = segment(rec, window_seconds=60)
        expected = segment_oracle(rec.t, 60, 2)
        assert [w.n_samples for w in windows] == [len(g) for g in expected]
        assert [w.n_samples for w in windows] == [1500, 1500, 250]
        assert windows[2].end_t - windows[2].start_t == pytest.approx(10.0, abs=0.05)

    def test_tiny_remainder_merged(self):
        # 1501 samples at 25 Hz: one sample lands at the 60 s boundary
        n = 1501
        rec = make_recording(np.arange(n) / 25.0, np.tile([0, 0, 1.0], (n, 1)))
        windows = segment(rec, window_seconds=60)
        assert [w.n_samples for w in windows] == [1501]

    def test_empty_recording_raises(self):
        rec = make_recording(np.array([]), np.zeros((0, 3)))
        with pytest.raises(EmptyRecording):
            segment(rec)

    def test_window_metadata(self):
        rec = regular_recording(130, 25, label=Label.FALL, trial_id="rec9", subject="S07")
        windows = segment(rec, window_seconds=60)
        assert all(w.label is Label.FALL for w in windows)
        assert all(w.subject_id == "S07" for w in windows)
        assert [w.window_ref for w in windows] == ["rec9#w0", "rec9#w1", "rec9#w2"]

    @pytest.mark.parametrize("duration,rate", [(7.3, 25.0), (61.0, 20.0), (100.0, 17.0), (179.9, 30.0)])
    def test_matches_scalar_oracle(self, duration, rate):
        rec = regular_recording(duration, rate)
        windows = segment(rec, window_seconds=60)
        assert [w.n_samples for w in windows] == [len(g) for g in segment_oracle(rec.t, 60, 2)]

    @given(
        duration=st.floats(min_value=1.0, max_value=200.0),
        rate=st.floats(min_value=15.0, max_value=30.0),
        window=st.floats(min_value=5.0, max_value=90.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_partition_properties(self, duration, rate, window):
        rec = regular_recording(duration, rate)
        windows = segment(rec, window_seconds=window)
        # concatenation reproduces the recording exactly: no loss, no duplication
        assert np.array_equal(np.concatenate([w.t for w in windows]), rec.t)
        assert np.array_equal(np.vstack([w.acc for w in windows]), rec.acc)
        assert np.array_equal(np.vstack([w.gyr for w in windows]), rec.gyr)
        assert all(w.n_samples >= 2 for w in windows)

    def test_deterministic(self):
        rec = regular_recording(97.7, 23.0)
        first = segment(rec, window_seconds=60)
        second = segment(rec, window_seconds=60)
        assert [(w.start_t, w.end_t, w.n_samples) for w in first] == [
            (w.start_t, w.end_t, w.n_samples) for w in second
        ]
