"""File formats: pose CSV, manifest CSV, feature CSV and JSON reports.

All writers are atomic (temp file then rename) and emit no timestamps, so a
rerun with the same inputs produces byte-identical artifacts. Floats are
written with shortest round-trip precision.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SchemaError
from .gaitfeat import FEATURE_NAMES, JOINT_VOCABULARY, PoseSeries
from .pipeline import Dataset, DependenceReport, EvaluationReport

POSE_CSV_HEADER = ("frame", "timestamp_s", "joint", "x_m", "y_m", "z_m")
MANIFEST_HEADER = ("video_id", "subject_id", "tug_s")
MANIFEST_NAME = "manifest.csv"


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    subject_id: str
    tug_s: float


def _fmt(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_report(path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    import io as _io

    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --- pose series ----------------------------------------------------------

def write_pose_csv(path, series: PoseSeries) -> None:
    names = sorted(series.joints)
    rows = []
    for f, t in enumerate(series.timestamps):
        for name in names:
            x, y, z = series.joints[name][f]
            rows.append((f, _fmt(t), name, _fmt(x), _fmt(y), _fmt(z)))
    atomic_write_text(path, _csv_text(POSE_CSV_HEADER, rows))


def read_pose_csv(path, subject_id: str = "") -> PoseSeries:
    """Parse a pose CSV into a series; errors carry file and line context."""
    path = os.fspath(path)
    frames: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty pose file", path=path, line=1) from None
        if tuple(header) != POSE_CSV_HEADER:
            raise ParseError(
                f"bad header {header!r}, expected {','.join(POSE_CSV_HEADER)}",
                path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(f"expected 6 columns, got {len(row)}", path=path, line=lineno)
            try:
                frame = int(row[0])
                t = float(row[1])
                coords = (float(row[3]), float(row[4]), float(row[5]))
            except ValueError as exc:
                raise ParseError(f"unparseable number: {exc}", path=path, line=lineno) from None
            joint = row[2]
            if joint not in JOINT_VOCABULARY:
                raise ParseError(f"unknown joint '{joint}'", path=path, line=lineno)
            if not all(np.isfinite(c) for c in coords) or not np.isfinite(t):
                raise ParseError("non-finite value", path=path, line=lineno)
            entry = frames.setdefault(frame, {"t": t, "joints": {}})
            if entry["t"] != t:
                raise ParseError(
                    f"frame {frame} has conflicting timestamps {entry['t']} and {t}",
                    path=path, line=lineno)
            entry["joints"][joint] = coords
    if not frames:
        raise ParseError("pose file has no data rows", path=path, line=2)

    order = sorted(frames)
    joint_names = set(frames[order[0]]["joints"])
    for f in order:
        if set(frames[f]["joints"]) != joint_names:
            raise SchemaError(f"{path}: frame {f} has a different joint set")
    timestamps = np.array([frames[f]["t"] for f in order])
    joints = {
        name: np.array([frames[f]["joints"][name] for f in order])
        for name in sorted(joint_names)
    }
    if timestamps.size < 2:
        raise SchemaError(f"{path}: a pose series needs at least 2 frames")
    frame_rate = 1.0 / float(np.median(np.diff(timestamps)))
    return PoseSeries(timestamps=timestamps, joints=joints, frame_rate=frame_rate,
                      subject_id=subject_id)


# --- manifest -------------------------------------------------------------

def write_manifest(path, entries) -> None:
    rows = [(e.video_id, e.subject_id, _fmt(e.tug_s)) for e in entries]
    atomic_write_text(path, _csv_text(MANIFEST_HEADER, rows))


def read_manifest(path) -> list:
    path = os.fspath(path)
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != MANIFEST_HEADER:
            raise ParseError(
                f"bad manifest header {header!r}, expected {','.join(MANIFEST_HEADER)}",
                path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", path=path, line=lineno)
            try:
                tug = float(row[2])
            except ValueError:
                raise ParseError(f"unparseable tug_s '{row[2]}'", path=path, line=lineno) from None
            if not np.isfinite(tug) or tug <= 0.0:
                raise ParseError(f"tug_s must be positive, got {row[2]}", path=path, line=lineno)
            out.append(ManifestEntry(video_id=row[0], subject_id=row[1], tug_s=tug))
    return out


# --- feature table --------------------------------------------------------

FEATURE_CSV_HEADER = ("video_id", "subject_id", "tug_s") + FEATURE_NAMES


def write_feature_csv(path, data: Dataset) -> None:
    rows = []
    for i in range(data.n_samples):
        rows.append((data.video_ids[i], data.subject_ids[i], _fmt(data.tug_s[i]),
                     *(_fmt(v) for v in data.features[i])))
    atomic_write_text(path, _csv_text(FEATURE_CSV_HEADER, rows))


def read_feature_csv(path) -> Dataset:
    path = os.fspath(path)
    video_ids, subject_ids, tug, rows = [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FEATURE_CSV_HEADER:
            raise ParseError("bad feature CSV header", path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(FEATURE_CSV_HEADER):
                raise ParseError(
                    f"expected {len(FEATURE_CSV_HEADER)} columns, got {len(row)}",
                    path=path, line=lineno)
            try:
                tug.append(float(row[2]))
                rows.append([float(v) for v in row[3:]])
            except ValueError as exc:
                raise ParseError(f"unparseable number: {exc}", path=path, line=lineno) from None
            video_ids.append(row[0])
            subject_ids.append(row[1])
    if not rows:
        raise ParseError("feature CSV has no data rows", path=path, line=2)
    return Dataset(features=np.array(rows), feature_names=FEATURE_NAMES,
                   tug_s=np.array(tug), subject_ids=tuple(subject_ids),
                   video_ids=tuple(video_ids))


# --- report CSV views -----------------------------------------------------

def write_dependence_csv(path, report: DependenceReport) -> None:
    rows = [(e.rank, e.feature, "" if e.copula_entropy is None else _fmt(e.copula_entropy))
            for e in report.entries]
    atomic_write_text(path, _csv_text(("rank", "feature", "copula_entropy"), rows))


def write_split_csv(path, report: EvaluationReport) -> None:
    rows = [(s.split,
             "" if s.mae is None else _fmt(s.mae),
             "" if s.diagnosis_accuracy is None else _fmt(s.diagnosis_accuracy),
             s.error or "")
            for s in report.per_split]
    atomic_write_text(path, _csv_text(("split", "mae", "diagnosis_accuracy", "error"), rows))


def write_summary_csv(path, report: EvaluationReport) -> None:
    s = report.summary
    rows = [(report.model_kind,
             ";".join(report.selected_features),
             _fmt(s.get("mae_mean", float("nan"))), _fmt(s.get("mae_std", float("nan"))),
             _fmt(s.get("accuracy_mean", float("nan"))), _fmt(s.get("accuracy_std", float("nan"))),
             s["n_failed"], report.n_splits, _fmt(report.train_ratio),
             _fmt(report.cutoff_s), report.master_seed)]
    atomic_write_text(path, _csv_text(
        ("model", "features", "mae_mean", "mae_std", "accuracy_mean", "accuracy_std",
         "n_failed", "n_splits", "train_ratio", "cutoff_s", "master_seed"), rows))


def write_predictions_csv(path, report: EvaluationReport) -> None:
    rows = [(split, vid, _fmt(yt), _fmt(yp))
            for split, vid, yt, yp in report.predictions]
    atomic_write_text(path, _csv_text(("split", "video_id", "tug_true_s", "tug_pred_s"), rows))
