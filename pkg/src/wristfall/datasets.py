"""Corpus ingestion: raw-layout adapters, the canonical on-disk format, manifests.

Raw corpora ship vendor-specific text layouts, so adapters are table-driven:
the manifest configures file discovery (glob + path regex with named groups),
tokenization (delimiter, comment prefix), column mapping, and unit conversion.
Two layout modes cover the wrist corpora used here:

* "columns": every data row carries all six channels (plus an optional
  timestamp column);
* "interleaved": rows carry one sensor reading each and are tagged with a
  sensor-type column and a sensor-id (body position) column; accelerometer and
  gyroscope rows are paired by sample number after filtering to one sensor id.

All channels are normalized at ingestion: accelerometer to g, gyroscope to
deg/s, timestamps to seconds since recording start.

The canonical interchange format is one UTF-8 CSV per trial
(`t,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z`, '.' decimals, '\\n' newlines, floats
printed with repr so they round-trip bit-exactly) plus an `index.jsonl` file
with one record per trial (subject, activity code, label, rate, relative
path). Rewriting the same trials produces byte-identical output.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Label, Source, TrialRecording
from .errors import (
    CanonicalFormatError,
    DataError,
    InvalidRecording,
    ManifestRootMissing,
)

ACC_UNIT_TO_G = {"g": 1.0, "m/s2": 1.0 / 9.80665, "mg": 1e-3}
GYR_UNIT_TO_DPS = {"deg/s": 1.0, "rad/s": 180.0 / math.pi}
TIME_UNIT_TO_S = {"s": 1.0, "ms": 1e-3, "us": 1e-6}

CANONICAL_HEADER = "t,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z"
INDEX_NAME = "index.jsonl"
TRIALS_DIR = "trials"

MANIFEST_KEYS = {
    "source",
    "root",
    "sensor_position",
    "nominal_rate_hz",
    "expected",
    "tasks",
    "layout",
}


@dataclass(frozen=True)
class LayoutSpec:
    """Table-driven description of a raw corpus layout."""

    file_glob: str
    path_regex: str
    mode: str = "columns"  # or "interleaved"
    delimiter: str | None = None  # None = any whitespace
    comment_prefix: str = "#"
    skip_header_lines: int = 0
    time_column: int | None = None
    time_unit: str = "s"
    acc_columns: tuple[int, int, int] = (0, 1, 2)
    gyr_columns: tuple[int, int, int] = (3, 4, 5)
    acc_unit: str = "g"
    gyr_unit: str = "deg/s"
    # interleaved mode only:
    sensor_type_column: int | None = None
    acc_type_value: str = ""
    gyr_type_value: str = ""
    sensor_id_column: int | None = None
    sensor_id_value: str = ""
    sample_no_column: int | None = None
    value_columns: tuple[int, int, int] = (0, 1, 2)

    def __post_init__(self):
        if self.mode not in ("columns", "interleaved"):
            raise DataError(f"unknown layout mode {self.mode!r}")
        if self.acc_unit not in ACC_UNIT_TO_G:
            raise DataError(f"unknown accelerometer unit {self.acc_unit!r}")
        if self.gyr_unit not in GYR_UNIT_TO_DPS:
            raise DataError(f"unknown gyroscope unit {self.gyr_unit!r}")
        if self.time_unit not in TIME_UNIT_TO_S:
            raise DataError(f"unknown time unit {self.time_unit!r}")


@dataclass(frozen=True)
class DatasetManifest:
    source: Source
    root: Path
    tasks: dict[str, tuple[Label, str]]  # code -> (label, description)
    layout: LayoutSpec
    nominal_rate_hz: float
    sensor_position: str = "wrist"
    expected: dict | None = None  # participants / adl_trials / fall_trials

    def label_for(self, code: str) -> Label | None:
        entry = self.tasks.get(code)
        return entry[0] if entry else None


@dataclass
class IngestReport:
    n_trials: int = 0
    n_adl: int = 0
    n_fall: int = 0
    subjects: tuple[str, ...] = ()
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def summary(self) -> str:
        line = f"{self.n_trials} trials ({self.n_adl} ADL / {self.n_fall} fall), {len(self.subjects)} subjects"
        if self.skipped:
            line += f"; skipped {len(self.skipped)} files"
        return line


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    unknown = set(doc) - MANIFEST_KEYS
    if unknown:
        raise DataError(f"{path}: unknown manifest keys {sorted(unknown)}")
    for key in ("source", "root", "tasks", "layout", "nominal_rate_hz"):
        if key not in doc:
            raise DataError(f"{path}: manifest missing {key!r}")
    try:
        source = Source(doc["source"])
    except ValueError:
        raise DataError(f"{path}: unknown source {doc['source']!r}") from None
    root = Path(doc["root"])
    if not root.is_absolute():
        root = path.parent / root
    tasks = {}
    for code, entry in doc["tasks"].items():
        try:
            label = Label(entry["label"])
        except (KeyError, ValueError):
            raise DataError(f"{path}: task {code!r} needs a label of 'Fall' or 'ADL'") from None
        tasks[code] = (label, entry.get("description", ""))
    lay = dict(doc["layout"])
    for key in ("acc_columns", "gyr_columns", "value_columns"):
        if key in lay:
            lay[key] = tuple(lay[key])
    layout = LayoutSpec(**lay)
    return DatasetManifest(
        source=source,
        root=root,
        tasks=tasks,
        layout=layout,
        nominal_rate_hz=float(doc["nominal_rate_hz"]),
        sensor_position=doc.get("sensor_position", "wrist"),
        expected=doc.get("expected"),
    )


def save_manifest(manifest: DatasetManifest, path) -> None:
    lay = {
        "file_glob": manifest.layout.file_glob,
        "path_regex": manifest.layout.path_regex,
        "mode": manifest.layout.mode,
        "delimiter": manifest.layout.delimiter,
        "comment_prefix": manifest.layout.comment_prefix,
        "skip_header_lines": manifest.layout.skip_header_lines,
        "time_column": manifest.layout.time_column,
        "time_unit": manifest.layout.time_unit,
        "acc_columns": list(manifest.layout.acc_columns),
        "gyr_columns": list(manifest.layout.gyr_columns),
        "acc_unit": manifest.layout.acc_unit,
        "gyr_unit": manifest.layout.gyr_unit,
    }
    if manifest.layout.mode == "interleaved":
        lay.update(
            sensor_type_column=manifest.layout.sensor_type_column,
            acc_type_value=manifest.layout.acc_type_value,
            gyr_type_value=manifest.layout.gyr_type_value,
            sensor_id_column=manifest.layout.sensor_id_column,
            sensor_id_value=manifest.layout.sensor_id_value,
            sample_no_column=manifest.layout.sample_no_column,
            value_columns=list(manifest.layout.value_columns),
        )
    doc = {
        "source": manifest.source.value,
        "root": str(manifest.root),
        "sensor_position": manifest.sensor_position,
        "nominal_rate_hz": manifest.nominal_rate_hz,
        "expected": manifest.expected,
        "tasks": {code: {"label": lab.value, "description": desc} for code, (lab, desc) in manifest.tasks.items()},
        "layout": lay,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _data_rows(text: str, layout: LayoutSpec) -> list[list[str]]:
    rows = []
    kept = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or (layout.comment_prefix and line.startswith(layout.comment_prefix)):
            continue
        kept += 1
        if kept <= layout.skip_header_lines:
            continue
        rows.append(line.split(layout.delimiter))
    return rows


def _parse_columns(rows: list[list[str]], layout: LayoutSpec, rate_hz: float):
    needed = max(
        *layout.acc_columns,
        *layout.gyr_columns,
        layout.time_column if layout.time_column is not None else 0,
    )
    matrix = []
    for i, row in enumerate(rows, start=1):
        if len(row) <= needed:
            raise DataError(f"row {i}: expected at least {needed + 1} columns, got {len(row)}")
        try:
            matrix.append([float(row[c]) for c in (*layout.acc_columns, *layout.gyr_columns)])
        except ValueError as exc:
            raise DataError(f"row {i}: {exc}") from None
    values = np.asarray(matrix, dtype=float).reshape(-1, 6)
    if layout.time_column is not None:
        try:
            t_raw = np.array([float(row[layout.time_column]) for row in rows])
        except ValueError as exc:
            raise DataError(f"bad timestamp: {exc}") from None
        t = (t_raw - t_raw[0]) * TIME_UNIT_TO_S[layout.time_unit] if t_raw.size else t_raw
    else:
        t = np.arange(values.shape[0]) / rate_hz
    return t, values[:, :3], values[:, 3:]


def _parse_interleaved(rows: list[list[str]], layout: LayoutSpec, rate_hz: float):
    for key in ("sensor_type_column", "sensor_id_column", "sample_no_column"):
        if getattr(layout, key) is None:
            raise DataError(f"interleaved layout requires {key}")
    acc_rows: dict[int, tuple[float, list[float]]] = {}
    gyr_rows: dict[int, list[float]] = {}
    for i, row in enumerate(rows, start=1):
        try:
            if row[layout.sensor_id_column].strip() != layout.sensor_id_value:
                continue
            kind = row[layout.sensor_type_column].strip()
            sample_no = int(float(row[layout.sample_no_column]))
            xyz = [float(row[c]) for c in layout.value_columns]
            if kind == layout.acc_type_value:
                t_raw = float(row[layout.time_column]) if layout.time_column is not None else math.nan
                acc_rows[sample_no] = (t_raw, xyz)
            elif kind == layout.gyr_type_value:
                gyr_rows[sample_no] = xyz
        except (IndexError, ValueError) as exc:
            raise DataError(f"row {i}: {exc}") from None
    common = sorted(acc_rows.keys() & gyr_rows.keys())
    if not common:
        raise DataError("no paired accelerometer/gyroscope samples for the configured sensor id")
    acc = np.array([acc_rows[k][1] for k in common])
    gyr = np.array([gyr_rows[k] for k in common])
    if layout.time_column is not None:
        t_raw = np.array([acc_rows[k][0] for k in common])
        t = (t_raw - t_raw[0]) * TIME_UNIT_TO_S[layout.time_unit]
    else:
        t = np.arange(len(common)) / rate_hz
    return t, acc, gyr


def parse_trial_file(path, layout: LayoutSpec, rate_hz: float):
    """Return (t, acc_g, gyr_dps) arrays for one raw trial file."""
    text = Path(path).read_text(encoding="utf-8")
    rows = _data_rows(text, layout)
    if not rows:
        raise DataError("no data rows")
    if layout.mode == "columns":
        t, acc, gyr = _parse_columns(rows, layout, rate_hz)
    else:
        t, acc, gyr = _parse_interleaved(rows, layout, rate_hz)
    return t, acc * ACC_UNIT_TO_G[layout.acc_unit], gyr * GYR_UNIT_TO_DPS[layout.gyr_unit]


def _trial_id(subject: str, code: str, trial: str) -> str:
    raw = f"{subject}_{code}_{trial}" if trial else f"{subject}_{code}"
    return re.sub(r"[^A-Za-z0-9_.-]", "-", raw)


def ingest(manifest: DatasetManifest) -> tuple[list[TrialRecording], IngestReport]:
    """Parse every raw trial under the manifest root.

    Trials failing validation are skipped and reported with their path and
    reason, never silently dropped.
    """
    root = manifest.root
    if not root.is_dir():
        raise ManifestRootMissing(f"manifest root {root} is not a readable directory")

    report = IngestReport()
    trials: list[TrialRecording] = []
    subjects: set[str] = set()
    pattern = re.compile(manifest.layout.path_regex)
    seen_ids: set[str] = set()

    for path in sorted(root.glob(manifest.layout.file_glob)):
        rel = path.relative_to(root).as_posix()
        match = pattern.search(rel)
        if not match:
            report.skipped.append((rel, "path does not match the layout's path_regex"))
            continue
        groups = match.groupdict()
        subject = groups.get("subject", "")
        code = groups.get("code", "")
        trial_no = groups.get("trial", "")
        label = manifest.label_for(code)
        if label is None:
            report.skipped.append((rel, f"activity code {code!r} not in task table"))
            continue
        tid = _trial_id(subject, code, trial_no)
        if tid in seen_ids:
            report.skipped.append((rel, f"duplicate trial id {tid}"))
            continue
        try:
            t, acc, gyr = parse_trial_file(path, manifest.layout, manifest.nominal_rate_hz)
            rec = TrialRecording(
                trial_id=tid,
                subject_id=subject,
                activity_code=code,
                label=label,
                sample_rate_hz=manifest.nominal_rate_hz,
                t=t,
                acc=acc,
                gyr=gyr,
                source=manifest.source,
            )
            rec.validate()
        except (DataError, InvalidRecording) as exc:
            report.skipped.append((rel, str(exc)))
            continue
        seen_ids.add(tid)
        trials.append(rec)
        subjects.add(subject)
        if label is Label.FALL:
            report.n_fall += 1
        else:
            report.n_adl += 1

    report.n_trials = len(trials)
    report.subjects = tuple(sorted(subjects))
    return trials, report


def _float_csv(values: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_canonical(trials: Sequence[TrialRecording], out_dir) -> Path:
    """Write trials as the canonical corpus; returns the index path."""
    out_dir = Path(out_dir)
    trial_dir = out_dir / TRIALS_DIR
    trial_dir.mkdir(parents=True, exist_ok=True)

    index_lines = []
    for rec in sorted(trials, key=lambda r: r.trial_id):
        rel = f"{TRIALS_DIR}/{rec.trial_id}.csv"
        rows = [CANONICAL_HEADER]
        for i in range(rec.n_samples):
            rows.append(
                repr(float(rec.t[i])) + "," + _float_csv(rec.acc[i]) + "," + _float_csv(rec.gyr[i])
            )
        (out_dir / rel).write_text("\n".join(rows) + "\n", encoding="utf-8")
        index_lines.append(
            json.dumps(
                {
                    "trial_id": rec.trial_id,
                    "subject_id": rec.subject_id,
                    "activity_code": rec.activity_code,
                    "label": rec.label.value,
                    "sample_rate_hz": rec.sample_rate_hz,
                    "source": rec.source.value,
                    "path": rel,
                },
                sort_keys=True,
            )
        )
    index_path = out_dir / INDEX_NAME
    index_path.write_text("\n".join(index_lines) + ("\n" if index_lines else ""), encoding="utf-8")
    return index_path


def read_canonical_trial(path, expect_id: str = "") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CANONICAL_HEADER:
            raise CanonicalFormatError(str(path), 1, f"bad header {header!r}")
        t_vals, acc_vals, gyr_vals = [], [], []
        prev_t = -math.inf
        for line_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise CanonicalFormatError(str(path), line_no, f"expected 7 fields, got {len(parts)}")
            try:
                nums = [float(p) for p in parts]
            except ValueError:
                raise CanonicalFormatError(str(path), line_no, "non-numeric field") from None
            if not all(math.isfinite(v) for v in nums):
                raise CanonicalFormatError(str(path), line_no, "non-finite value")
            if nums[0] <= prev_t:
                raise CanonicalFormatError(str(path), line_no, "timestamps not strictly increasing")
            prev_t = nums[0]
            t_vals.append(nums[0])
            acc_vals.append(nums[1:4])
            gyr_vals.append(nums[4:7])
    return np.array(t_vals), np.array(acc_vals).reshape(-1, 3), np.array(gyr_vals).reshape(-1, 3)


def read_canonical(corpus_dir) -> list[TrialRecording]:
    corpus_dir = Path(corpus_dir)
    index_path = corpus_dir / INDEX_NAME
    if not index_path.is_file():
        raise ManifestRootMissing(f"no {INDEX_NAME} under {corpus_dir}")
    trials = []
    with open(index_path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CanonicalFormatError(str(index_path), line_no, f"bad JSON: {exc}") from None
            try:
                t, acc, gyr = read_canonical_trial(corpus_dir / entry["path"])
                rec = TrialRecording(
                    trial_id=entry["trial_id"],
                    subject_id=entry["subject_id"],
                    activity_code=entry["activity_code"],
                    label=Label(entry["label"]),
                    sample_rate_hz=float(entry["sample_rate_hz"]),
                    t=t,
                    acc=acc,
                    gyr=gyr,
                    source=Source(entry["source"]),
                )
            except KeyError as exc:
                raise CanonicalFormatError(str(index_path), line_no, f"index entry missing {exc}") from None
            trials.append(rec)
    return trials
