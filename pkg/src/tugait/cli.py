"""Batch command-line front end: simulate | extract | rank | evaluate.

Every subcommand validates its parameters up front, writes artifacts
atomically, and is idempotent for identical inputs and seeds. Parameter
precedence is command-line flag, then config file (JSON), then the
documented default; the effective configuration is echoed into every
report. Exit codes: 0 success, 1 user/input error, 2 internal or
convergence error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io as tio
from . import pipeline, synthgait
from .copent import DEFAULT_K
from .errors import (
    ConvergenceError,
    InvalidInputError,
    ParameterError,
    ParseError,
    SchemaError,
    TugaitError,
)
from .gaitfeat import DEFAULT_THRESHOLD_HZ, DEFAULT_WINDOW_S, extract_features

log = logging.getLogger("tugait")

EXIT_OK = 0
EXIT_USER = 1
EXIT_INTERNAL = 2

_DEFAULTS = {
    "k": DEFAULT_K,
    "window_s": DEFAULT_WINDOW_S,
    "threshold_hz": DEFAULT_THRESHOLD_HZ,
    "model": "lr",
    "kernel": "rbf",
    "top_k": 3,
    "n_splits": pipeline.DEFAULT_N_SPLITS,
    "train_ratio": pipeline.DEFAULT_TRAIN_RATIO,
    "cutoff_s": pipeline.DEFAULT_CUTOFF_S,
    "master_seed": 0,
    "seed": 0,
    "n_videos": 146,
    "duration_s": 25.0,
    "fps": 30.0,
    "dependence_strength": 1.0,
}


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParameterError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}", path=path) from None
    if not isinstance(doc, dict):
        raise ParseError("config must be a JSON object", path=path)
    return doc


def _effective(ns: argparse.Namespace, keys) -> dict:
    """Merge CLI > config file > default for the requested keys."""
    config = _load_config(getattr(ns, "config", None))
    out = {}
    for key in keys:
        cli_value = getattr(ns, key, None)
        if cli_value is not None:
            out[key] = cli_value
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = _DEFAULTS[key]
    return out


def _validate_positive(cfg: dict, *keys) -> None:
    for key in keys:
        if cfg[key] <= 0:
            raise ParameterError(f"{key} must be positive, got {cfg[key]}")


# --- subcommands -----------------------------------------------------------

def cmd_simulate(ns: argparse.Namespace) -> int:
    cfg = _effective(ns, ("seed", "n_videos", "duration_s", "fps", "window_s",
                          "threshold_hz", "dependence_strength"))
    _validate_positive(cfg, "n_videos", "duration_s", "fps", "window_s", "threshold_hz")
    params = synthgait.CohortParams(
        n_videos=int(cfg["n_videos"]), seed=int(cfg["seed"]),
        duration_s=float(cfg["duration_s"]), fps=float(cfg["fps"]),
        window_s=float(cfg["window_s"]), threshold_hz=float(cfg["threshold_hz"]),
        dependence_strength=float(cfg["dependence_strength"]),
    )
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries, truth_rows = [], []
    regenerated = 0
    for video in synthgait.cohort_videos(params):
        tio.write_pose_csv(out_dir / f"{video.video_id}.csv", video.series)
        entries.append(tio.ManifestEntry(video.video_id, video.subject_id, video.tug_s))
        truth_rows.append({
            "video_id": video.video_id, "subject_id": video.subject_id,
            "tug_s": video.tug_s, "attempts": video.attempts,
            **{k: v for k, v in asdict(video.walker).items() if k != "seed"},
            "walker_seed": video.walker.seed,
        })
        regenerated += video.attempts - 1
    tio.write_manifest(out_dir / tio.MANIFEST_NAME, entries)
    tio.write_json_report(out_dir / "ground_truth.json", {
        "planted_features": list(synthgait.PLANTED_FEATURES)
        if params.dependence_strength > 0 else [],
        "regenerated": regenerated,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "per_video": truth_rows,
    })
    log.info("wrote %d pose files to %s", len(entries), out_dir)
    return EXIT_OK


def cmd_extract(ns: argparse.Namespace) -> int:
    cfg = _effective(ns, ("window_s", "threshold_hz"))
    _validate_positive(cfg, "window_s", "threshold_hz")
    pose_dir = Path(ns.pose_dir)
    if not pose_dir.is_dir():
        raise ParameterError(f"pose directory not found: {pose_dir}")
    manifest_path = Path(ns.manifest) if ns.manifest else pose_dir / tio.MANIFEST_NAME
    if not manifest_path.exists():
        raise ParameterError(f"no input: manifest not found at {manifest_path}")
    entries = tio.read_manifest(manifest_path)
    if not entries:
        raise ParameterError(f"no input: manifest {manifest_path} lists no videos")

    listed = {e.video_id for e in entries}
    present = {p.stem for p in pose_dir.glob("*.csv") if p.name != tio.MANIFEST_NAME}
    orphan_files = sorted(present - listed)
    orphan_entries = sorted(listed - present)
    if orphan_files or orphan_entries:
        raise ParameterError(
            "manifest mismatch; files without manifest row: "
            f"[{', '.join(orphan_files)}]; manifest rows without file: "
            f"[{', '.join(orphan_entries)}]")

    rows, features, failed = [], [], []
    for entry in entries:
        path = pose_dir / f"{entry.video_id}.csv"
        try:
            series = tio.read_pose_csv(path, subject_id=entry.subject_id)
            fv = extract_features(series, window_s=float(cfg["window_s"]),
                                  threshold_hz=float(cfg["threshold_hz"]))
        except TugaitError as exc:
            log.error("skipping %s: %s", path.name, exc)
            failed.append(entry.video_id)
            continue
        rows.append(entry)
        features.append(fv.values)

    if rows:
        data = pipeline.Dataset(
            features=np.vstack(features),
            feature_names=tuple(tio.FEATURE_CSV_HEADER[3:]),
            tug_s=np.array([e.tug_s for e in rows]),
            subject_ids=tuple(e.subject_id for e in rows),
            video_ids=tuple(e.video_id for e in rows),
        )
        tio.write_feature_csv(ns.out, data)
        log.info("wrote %d feature rows to %s", len(rows), ns.out)
    if failed:
        log.error("%d of %d videos failed extraction: %s",
                  len(failed), len(entries), ", ".join(failed))
        return EXIT_USER
    return EXIT_OK


def cmd_rank(ns: argparse.Namespace) -> int:
    cfg = _effective(ns, ("k",))
    data = tio.read_feature_csv(ns.features)
    report = pipeline.rank_features(data, k=int(cfg["k"]))
    payload = report.to_dict()
    payload["config"] = {"k": int(cfg["k"]), "features": str(ns.features)}
    tio.write_json_report(ns.out, payload)
    tio.write_dependence_csv(Path(ns.out).with_suffix(".csv"), report)
    for e in report.entries:
        value = "unavailable" if e.copula_entropy is None else f"{e.copula_entropy:+.4f}"
        print(f"{e.rank:2d}  {e.feature:32s} {value}")
    return EXIT_OK


def cmd_evaluate(ns: argparse.Namespace) -> int:
    cfg = _effective(ns, ("k", "model", "kernel", "top_k", "n_splits", "train_ratio",
                          "cutoff_s", "master_seed"))
    if cfg["n_splits"] < 1:
        raise ParameterError(f"n_splits must be >= 1, got {cfg['n_splits']}")
    if not 0.0 < cfg["train_ratio"] < 1.0:
        raise ParameterError(f"train_ratio must be in (0, 1), got {cfg['train_ratio']}")
    _validate_positive(cfg, "cutoff_s", "top_k", "k")
    if cfg["model"] not in ("lr", "svr"):
        raise ParameterError(f"model must be 'lr' or 'svr', got {cfg['model']!r}")

    data = tio.read_feature_csv(ns.features)
    rank_report = pipeline.rank_features(data, k=int(cfg["k"]))
    selected = pipeline.select_features(rank_report, top_k=int(cfg["top_k"]))
    report = pipeline.evaluate(
        data, model_kind=cfg["model"], selected_features=selected,
        n_splits=int(cfg["n_splits"]), train_ratio=float(cfg["train_ratio"]),
        cutoff_s=float(cfg["cutoff_s"]), master_seed=int(cfg["master_seed"]),
        kernel_kind=cfg["kernel"], collect_predictions=True,
    )

    out = Path(ns.out)
    payload = report.to_dict()
    payload["config"] = {**payload["config"],
                         "k": int(cfg["k"]), "top_k": int(cfg["top_k"]),
                         "features": str(ns.features)}
    tio.write_json_report(out, payload)
    stem = out.with_suffix("")
    tio.write_summary_csv(Path(f"{stem}_summary.csv"), report)
    tio.write_split_csv(Path(f"{stem}_splits.csv"), report)
    tio.write_predictions_csv(Path(f"{stem}_predictions.csv"), report)

    s = report.summary
    print(f"model: {report.model_kind}   features: {', '.join(selected)}")
    print(f"{'':24s}{report.model_kind.upper():>10s}")
    print(f"{'MAE (s)':24s}{s.get('mae_mean', float('nan')):10.3f}  "
          f"(std {s.get('mae_std', float('nan')):.3f})")
    print(f"{'Diagnosis accuracy (%)':24s}{100 * s.get('accuracy_mean', float('nan')):10.1f}  "
          f"(std {100 * s.get('accuracy_std', float('nan')):.1f})")
    if s["n_failed"]:
        print(f"failed splits: {s['n_failed']} of {report.n_splits}")
        if s["n_failed"] > 0.1 * report.n_splits:
            log.error("more than 10%% of splits failed (%d of %d)",
                      s["n_failed"], report.n_splits)
            return EXIT_INTERNAL
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tugait",
        description="Predict TUG scores from gait characteristics: simulate, "
                    "extract, rank and evaluate as reproducible batch steps.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic cohort of pose CSVs")
    sim.add_argument("out_dir", help="output directory for pose CSVs and manifest")
    sim.add_argument("--config", help="JSON config file")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--n-videos", dest="n_videos", type=int)
    sim.add_argument("--duration-s", dest="duration_s", type=float)
    sim.add_argument("--fps", type=float)
    sim.add_argument("--window-s", dest="window_s", type=float)
    sim.add_argument("--threshold-hz", dest="threshold_hz", type=float)
    sim.add_argument("--dependence-strength", dest="dependence_strength", type=float)
    sim.set_defaults(func=cmd_simulate)

    ext = sub.add_parser("extract", help="extract feature vectors from pose CSVs")
    ext.add_argument("pose_dir", help="directory of pose CSVs with a manifest")
    ext.add_argument("out", help="output feature CSV path")
    ext.add_argument("--manifest", help="manifest path (default: <pose_dir>/manifest.csv)")
    ext.add_argument("--config", help="JSON config file")
    ext.add_argument("--window-s", dest="window_s", type=float)
    ext.add_argument("--threshold-hz", dest="threshold_hz", type=float)
    ext.set_defaults(func=cmd_extract)

    rnk = sub.add_parser("rank", help="rank features by association with the score")
    rnk.add_argument("features", help="feature CSV from extract")
    rnk.add_argument("out", help="output report JSON path (a CSV twin is written too)")
    rnk.add_argument("--config", help="JSON config file")
    rnk.add_argument("-k", type=int, help="neighbor count for the entropy estimate")
    rnk.set_defaults(func=cmd_rank)

    ev = sub.add_parser("evaluate", help="repeated-split training and evaluation")
    ev.add_argument("features", help="feature CSV from extract")
    ev.add_argument("out", help="output report JSON path (CSV twins are written too)")
    ev.add_argument("--config", help="JSON config file")
    ev.add_argument("--model", choices=("lr", "svr"))
    ev.add_argument("--kernel", choices=("linear", "rbf"))
    ev.add_argument("--top-k", dest="top_k", type=int)
    ev.add_argument("-k", type=int)
    ev.add_argument("--n-splits", dest="n_splits", type=int)
    ev.add_argument("--train-ratio", dest="train_ratio", type=float)
    ev.add_argument("--cutoff-s", dest="cutoff_s", type=float)
    ev.add_argument("--master-seed", dest="master_seed", type=int)
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ParseError, SchemaError, ParameterError, InvalidInputError,
            FileNotFoundError, NotADirectoryError) as exc:
        log.error("%s", exc)
        return EXIT_USER
    except ConvergenceError as exc:
        log.error("convergence failure: %s", exc)
        return EXIT_INTERNAL
    except TugaitError as exc:
        log.error("%s", exc)
        return EXIT_USER
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
