"""Command-line front end: gen, mask, fit, eval, replay, segment, report.

CSV is the canonical output; SVG rendering is built in but minimal. All
output files are written atomically (temp + rename). Option resolution is
built-in defaults < --config file < explicit flags; the CALIBCC_JOBS
environment variable overrides --jobs.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from calibcc import adaptive, corpus, metrics, simgen, telemetry
from calibcc.calibration import (
    CalibratorScope,
    PlattParams,
    calibrate,
    fit_scoped,
    load_calibrators,
    save_calibrators,
)
from calibcc.labeling import LabeledObservation, label_record

DEFAULTS: dict = {
    "seed": 0,
    "jobs": 1,
    "bins": 10,
    "window": adaptive.DEFAULT_WINDOW,
    "stride": None,  # defaults to window (tumbling)
    "min_eval": adaptive.DEFAULT_MIN_EVAL,
    "prior_mean": 0.26,
    "prior_count": adaptive.DEFAULT_PRIOR_COUNT,
    "scope": "general",
    "history": adaptive.DEFAULT_HISTORY,
    "l2": 1e-6,
    "max_span_lines": 5,
    "policy": "random_line_span",
    "init": "general",
    "keying": "per-user",
}

_EXT_LANGUAGE = {".java": "java", ".py": "python", ".kt": "kotlin", ".kts": "kotlin"}


@dataclass
class RunConfig:
    """Resolved options for one command invocation; round-trips through JSON."""

    command: str
    seed: int = 0
    jobs: int = 1
    bins: int = 10
    window: int = adaptive.DEFAULT_WINDOW
    stride: int | None = None
    min_eval: int = adaptive.DEFAULT_MIN_EVAL
    prior_mean: float = 0.26
    prior_count: float = adaptive.DEFAULT_PRIOR_COUNT
    scope: str = "general"
    history: int = adaptive.DEFAULT_HISTORY
    l2: float = 1e-6
    max_span_lines: int = 5
    policy: str = "random_line_span"
    init: str = "general"
    keying: str = "per-user"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        return RunConfig(**json.loads(text))


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Minimal SVG rendering (no plotting dependencies)

_SVG_W, _SVG_H, _SVG_PAD = 480, 360, 48


def _sx(x: float, x0: float, x1: float) -> float:
    span = (x1 - x0) or 1.0
    return _SVG_PAD + (x - x0) / span * (_SVG_W - 2 * _SVG_PAD)


def _sy(y: float, y0: float, y1: float) -> float:
    span = (y1 - y0) or 1.0
    return _SVG_H - _SVG_PAD - (y - y0) / span * (_SVG_H - 2 * _SVG_PAD)


def _svg_doc(body: list[str], title: str, xlabel: str, ylabel: str) -> str:
    frame = (
        f'<rect x="{_SVG_PAD}" y="{_SVG_PAD}" width="{_SVG_W - 2 * _SVG_PAD}" '
        f'height="{_SVG_H - 2 * _SVG_PAD}" fill="none" stroke="black"/>'
    )
    labels = (
        f'<text x="{_SVG_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>'
        f'<text x="{_SVG_W / 2}" y="{_SVG_H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>'
        f'<text x="14" y="{_SVG_H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_SVG_H / 2})">{ylabel}</text>'
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}">'
        + frame
        + labels
        + "".join(body)
        + "</svg>"
    )


def reliability_svg(rows: list[dict], title: str = "Reliability diagram") -> str:
    """Mean outcome vs mean confidence per bin, with the diagonal."""
    body = [
        f'<line x1="{_sx(0, 0, 1)}" y1="{_sy(0, 0, 1)}" x2="{_sx(1, 0, 1)}" y2="{_sy(1, 0, 1)}" '
        'stroke="gray" stroke-dasharray="4 3"/>'
    ]
    points = sorted(rows, key=lambda r: float(r["mean_confidence"]))
    path = " ".join(
        f'{"M" if i == 0 else "L"}{_sx(float(r["mean_confidence"]), 0, 1):.2f},'
        f'{_sy(float(r["mean_outcome"]), 0, 1):.2f}'
        for i, r in enumerate(points)
    )
    if path:
        body.append(f'<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>')
    for r in points:
        body.append(
            f'<circle cx="{_sx(float(r["mean_confidence"]), 0, 1):.2f}" '
            f'cy="{_sy(float(r["mean_outcome"]), 0, 1):.2f}" r="3" fill="steelblue"/>'
        )
    return _svg_doc(body, title, "mean confidence", "mean outcome")


def line_chart_svg(points: list[tuple[float, float]], title: str, ylabel: str) -> str:
    """One metric time series as a polyline."""
    if not points:
        return _svg_doc([], title, "window", ylabel)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(max(ys), 1e-9)
    path = " ".join(
        f'{"M" if i == 0 else "L"}{_sx(x, x0, x1):.2f},{_sy(y, y0, y1):.2f}'
        for i, (x, y) in enumerate(points)
    )
    body = [f'<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>']
    return _svg_doc(body, title, "window", ylabel)


# ---------------------------------------------------------------------------
# Shared helpers


def _label_all(records) -> list[LabeledObservation]:
    return [label_record(r) for r in records]


def _metric_row(scope_name: str, rep: metrics.MetricReport) -> dict:
    return {
        "scope": scope_name,
        "n": rep.n,
        "ece": rep.ece,
        "brier": rep.brier,
        "bss": rep.bss,
        "mce": rep.mce,
        "correlation": "" if rep.correlation is None else rep.correlation,
    }


def _safe_name(scope_name: str) -> str:
    return scope_name.replace(":", "_").replace("/", "_")


def _resolve_jobs(cfg: RunConfig) -> int:
    env = os.environ.get("CALIBCC_JOBS")
    if env:
        return max(1, int(env))
    return max(1, cfg.jobs)


# ---------------------------------------------------------------------------
# Commands


def cmd_gen(cfg: RunConfig, args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.spec_file:
        raw = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
        for key in ("projects_per_user", "records_per_stream", "confidence_model", "user_map_prior"):
            if key in raw:
                raw[key] = tuple(raw[key])
        if raw.get("shift_schedule") is not None:
            raw["shift_schedule"] = tuple((f, tuple(m)) for f, m in raw["shift_schedule"])
        raw.setdefault("seed", cfg.seed)
        spec = simgen.GeneratorSpec(**raw)
    else:
        spec = simgen.study_analog_spec(seed=cfg.seed if cfg.seed else 20250101)
    records, ledger = simgen.generate(spec)
    telemetry_text = "".join(telemetry.serialize_record(r) + "\n" for r in records)
    ledger_text = "".join(
        json.dumps(
            {
                "stream_key": row.stream_key,
                "true_a": row.true_a,
                "true_b": row.true_b,
                "realized_rate": row.realized_rate,
            },
            separators=(",", ":"),
        )
        + "\n"
        for row in ledger
    )
    atomic_write_text(out_dir / "telemetry.jsonl", telemetry_text)
    atomic_write_text(out_dir / "ledger.jsonl", ledger_text)
    print(f"gen: wrote {len(records)} records across {len(ledger)} streams to {out_dir}")
    return 0


def cmd_mask(cfg: RunConfig, args) -> int:
    input_path = Path(args.input)
    files = sorted(p for p in input_path.rglob("*") if p.is_file()) if input_path.is_dir() else [input_path]
    examples = []
    for index, path in enumerate(files):
        text = path.read_text(encoding="utf-8")
        per_file = corpus.MaskPolicyConfig(
            policy=cfg.policy,
            max_span_lines=cfg.max_span_lines,
            seed=cfg.seed + index,
        )
        try:
            examples.append(
                corpus.mask_random_line_span(
                    text,
                    per_file,
                    language=_EXT_LANGUAGE.get(path.suffix, "other"),
                    source_path=str(path),
                )
            )
        except corpus.CorpusError as exc:
            print(f"mask: skipping {path}: {exc}", file=sys.stderr)
    written = corpus.export_examples(examples, args.out)
    print(f"mask: wrote {written} examples to {args.out}")
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    loaded = telemetry.load_stream(args.telemetry, skip_invalid=args.skip_invalid)
    observations = _label_all(loaded.records)
    calibrators: dict[str, PlattParams] = {}
    scopes = [CalibratorScope("general")]
    if cfg.scope == "language":
        tags = sorted({o.language.value for o in observations if o.language is not None})
        scopes += [CalibratorScope("language", t) for t in tags]
    for scope in scopes:
        params = fit_scoped(observations, scope, l2=cfg.l2)
        calibrators[scope.name()] = params
        print(
            f"fit: {scope.name()}: a={params.slope_a:.4f} b={params.intercept_b:.4f} "
            f"n={params.n_fit} converged={params.converged} |g|={params.final_gradient_norm:.2e}"
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_calibrators(calibrators, out)
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    loaded = telemetry.load_stream(args.telemetry, skip_invalid=args.skip_invalid)
    observations = _label_all(loaded.records)
    calibrators = load_calibrators(args.calibrators)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    confs = np.array([o.confidence for o in observations])
    labels = np.array([o.label for o in observations], dtype=float)
    ref = metrics.BaseRateReference.from_mean(cfg.prior_mean, cfg.prior_count)
    rate = metrics.reference_predict(ref)

    rows: list[dict] = []
    # identity calibrator serves as the "uncalibrated" table row
    uncal = calibrate(PlattParams.identity(), confs)
    rows.append(_metric_row("uncalibrated", metrics.report(uncal, labels, ref, cfg.bins)))
    metrics.write_reliability_csv(
        metrics.bin_predictions(uncal, labels, cfg.bins), out_dir / "reliability_uncalibrated.csv"
    )
    # base-rate baseline: Brier only, per the results-table layout
    baseline_brier = metrics.brier(np.full(confs.shape, rate), labels)
    rows.append(
        {"scope": "baseline_avg", "n": len(observations), "ece": "", "brier": baseline_brier,
         "bss": "", "mce": "", "correlation": ""}
    )
    for scope_name in sorted(calibrators):
        scope = CalibratorScope.parse(scope_name)
        if scope.kind == "language":
            subset = [o for o in observations if o.language and o.language.value == scope.selector]
        else:
            subset = observations
        if not subset:
            print(f"eval: scope {scope_name} matches no records", file=sys.stderr)
            return 1
        sub_confs = np.array([o.confidence for o in subset])
        sub_labels = np.array([o.label for o in subset], dtype=float)
        preds = calibrate(calibrators[scope_name], sub_confs)
        rows.append(_metric_row(scope_name, metrics.report(preds, sub_labels, ref, cfg.bins)))
        metrics.write_reliability_csv(
            metrics.bin_predictions(preds, sub_labels, cfg.bins),
            out_dir / f"reliability_{_safe_name(scope_name)}.csv",
        )
    columns = ["scope", "n", "ece", "brier", "bss", "mce", "correlation"]
    atomic_write_text(out_dir / "report.csv", _csv_text(columns, rows))
    print(f"eval: wrote {len(rows)} rows to {out_dir / 'report.csv'}")
    return 0


def _replay_worker(payload):
    """Replay one stream; module-level so ProcessPoolExecutor can pickle it."""
    key, triples, params_tuple, cfg_dict = payload
    observations = [
        LabeledObservation(confidence=c, ratio=float(y), label=int(y), timestamp_ms=t)
        for c, y, t in triples
    ]
    state = adaptive.init_stream(
        key,
        PlattParams(slope_a=params_tuple[0], intercept_b=params_tuple[1], converged=True),
        ref_mean=cfg_dict["prior_mean"],
        ref_pseudo_count=cfg_dict["prior_count"],
        history_capacity=cfg_dict["history"],
    )
    windows = adaptive.replay(
        observations,
        state,
        k=cfg_dict["window"],
        step=cfg_dict["stride"],
        min_eval=cfg_dict["min_eval"],
        adapt=cfg_dict["adapt"],
        bin_count=cfg_dict["bins"],
        l2=cfg_dict["l2"],
    )
    return key, len(observations), windows


def _run_replay(cfg: RunConfig, groups, init_params: PlattParams, adapt: bool, jobs: int):
    payloads = []
    for key in sorted(groups):
        observations = [label_record(r) for r in groups[key]]
        triples = [(o.confidence, o.label, o.timestamp_ms) for o in observations]
        payloads.append(
            (
                "/".join(key),
                triples,
                (init_params.slope_a, init_params.intercept_b),
                {
                    "prior_mean": cfg.prior_mean,
                    "prior_count": cfg.prior_count,
                    "history": cfg.history,
                    "window": cfg.window,
                    "stride": cfg.stride,
                    "min_eval": cfg.min_eval,
                    "adapt": adapt,
                    "bins": cfg.bins,
                    "l2": cfg.l2,
                },
            )
        )
    if jobs > 1 and len(payloads) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replay_worker, payloads))
    else:
        results = [_replay_worker(p) for p in payloads]
    results.sort(key=lambda r: r[0])
    return results


WINDOW_COLUMNS = ["stream_key", "window_index", "t_end", "n", "ece", "brier", "bss", "mce"]
SUMMARY_COLUMNS = [
    "group", "n_streams", "single_stream",
    "ece_mean", "ece_std", "brier_mean", "brier_std",
    "bss_mean", "bss_std", "mce_mean", "mce_std",
]


def _summary_rows(agg_rows) -> list[dict]:
    rows = []
    for row in agg_rows:
        out = {"group": row.group, "n_streams": row.n_streams, "single_stream": int(row.single_stream)}
        for name in adaptive.METRIC_NAMES:
            out[f"{name}_mean"] = row.mean[name]
            out[f"{name}_std"] = row.std[name]
        rows.append(out)
    return rows


def cmd_replay(cfg: RunConfig, args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.calibrators and cfg.init == "general":
        init_params = load_calibrators(args.calibrators)["general"]
    else:
        init_params = PlattParams.identity()
    jobs = _resolve_jobs(cfg)
    keyings = ["per-user", "per-user-per-project"] if cfg.keying == "both" else [
        "per-user-per-project" if cfg.keying == "per-user-project" else cfg.keying
    ]
    for keying in keyings:
        loaded = telemetry.load_stream(args.telemetry, key=keying, skip_invalid=args.skip_invalid)
        results = _run_replay(cfg, loaded.groups, init_params, adapt=not args.no_adapt, jobs=jobs)
        window_rows = []
        per_stream = {}
        counts = {}
        for key, count, windows in results:
            counts[key] = count
            per_stream[key] = windows
            for w in windows:
                window_rows.append(
                    {
                        "stream_key": key,
                        "window_index": w.window_index,
                        "t_end": w.t_end,
                        "n": w.n_window,
                        "ece": w.metrics.ece,
                        "brier": w.metrics.brier,
                        "bss": w.metrics.bss,
                        "mce": w.metrics.mce,
                    }
                )
        if not window_rows:
            print(f"replay: no streams with >= {cfg.min_eval} observations", file=sys.stderr)
            return 1
        tag = _safe_name(keying)
        atomic_write_text(out_dir / f"windows_{tag}.csv", _csv_text(WINDOW_COLUMNS, window_rows))
        grouping = adaptive.segment_streams(counts) if args.segmented else None
        agg = adaptive.aggregate(per_stream, grouping)
        atomic_write_text(out_dir / f"summary_{tag}.csv", _csv_text(SUMMARY_COLUMNS, _summary_rows(agg)))
        print(f"replay[{keying}]: {len(per_stream)} streams, {len(window_rows)} windows -> {out_dir}")
    return 0


def cmd_segment(cfg: RunConfig, args) -> int:
    keying = "per-user-per-project" if cfg.keying == "per-user-project" else cfg.keying
    loaded = telemetry.load_stream(args.telemetry, key=keying, skip_invalid=args.skip_invalid)
    counts = {"/".join(key): len(records) for key, records in loaded.groups.items()}
    groups = adaptive.segment_streams(counts)
    rows = [
        {"stream_key": key, "count": counts[key], "group": groups[key]} for key in sorted(counts)
    ]
    atomic_write_text(args.out, _csv_text(["stream_key", "count", "group"], rows))
    print(f"segment: wrote {len(rows)} streams to {args.out}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    in_dir = Path(args.input)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    made = 0
    for path in sorted(in_dir.glob("reliability_*.csv")):
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        atomic_write_text(out_dir / (path.stem + ".svg"), reliability_svg(rows, title=path.stem))
        made += 1
    for path in sorted(in_dir.glob("windows_*.csv")):
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        for name in adaptive.METRIC_NAMES:
            by_window: dict[int, list[float]] = {}
            for row in rows:
                by_window.setdefault(int(row["window_index"]), []).append(float(row[name]))
            points = [(float(i), float(np.mean(v))) for i, v in sorted(by_window.items())]
            atomic_write_text(
                out_dir / f"{path.stem}_{name}.svg",
                line_chart_svg(points, title=f"{path.stem}: mean {name} per window", ylabel=name),
            )
            made += 1
    if made == 0:
        print("report: no eval/replay outputs found", file=sys.stderr)
        return 1
    print(f"report: wrote {made} SVG files to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="global RNG seed (default 0)")
    parser.add_argument("--config", default=None, help="JSON config file; explicit flags win")
    parser.add_argument("--jobs", type=int, default=None,
                        help="parallel workers (default 1); env CALIBCC_JOBS overrides")
    parser.add_argument("--bins", type=int, default=None, dest="bins",
                        help="reliability bin count M (default 10, equal-width)")
    parser.add_argument("--window", type=int, default=None, help="progressive-validation window k (default 100)")
    parser.add_argument("--stride", type=int, default=None, help="window stride (default: window, i.e. tumbling)")
    parser.add_argument("--min-eval", type=int, default=None, dest="min_eval",
                        help="minimum window size to evaluate (default 20)")
    parser.add_argument("--prior-mean", type=float, default=None, dest="prior_mean",
                        help="base-rate reference prior mean (default 0.26)")
    parser.add_argument("--prior-count", type=float, default=None, dest="prior_count",
                        help="base-rate reference pseudo-count (default 50)")
    parser.add_argument("--scope", default=None,
                        choices=["general", "language", "per-user", "per-user-project"],
                        help="calibrator scope (default general)")
    parser.add_argument("--history", type=int, default=None,
                        help="adaptive history buffer capacity (default 1000)")
    parser.add_argument("--l2", type=float, default=None, help="L2 regularization weight (default 1e-6)")
    parser.add_argument("--skip-invalid", action="store_true",
                        help="skip-and-count malformed telemetry lines instead of failing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibcc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic telemetry with a known-truth ledger")
    p.add_argument("--out", required=True, help="output directory (telemetry.jsonl, ledger.jsonl)")
    p.add_argument("--spec-file", default=None, help="JSON GeneratorSpec overrides; default: study analog")
    _add_common(p)

    p = sub.add_parser("mask", help="build fill-in-the-middle examples from source files")
    p.add_argument("--input", required=True, help="source file or directory")
    p.add_argument("--out", required=True, help="output examples JSONL")
    p.add_argument("--max-span-lines", type=int, default=None, dest="max_span_lines",
                   help="maximum masked span length in lines (default 5)")
    p.add_argument("--policy", default=None, choices=["random_line_span"],
                   help="masking policy (default random_line_span)")
    _add_common(p)

    p = sub.add_parser("fit", help="fit static Platt calibrators")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--out", required=True, help="calibrator persistence file (JSONL)")
    _add_common(p)

    p = sub.add_parser("eval", help="evaluate calibrators with ECE/Brier/BSS/MCE")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--calibrators", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)

    p = sub.add_parser("replay", help="windowed progressive validation of adaptive calibrators")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--calibrators", default=None, help="persistence file for --init general")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--init", default=None, choices=["general", "identity"],
                   help="initial per-stream calibrator (default general)")
    p.add_argument("--keying", default=None, choices=["per-user", "per-user-project", "both"],
                   help="stream keying (default per-user)")
    p.add_argument("--no-adapt", action="store_true", help="disable adaptation (static baseline)")
    p.add_argument("--segmented", action="store_true", help="add activity-tercile rows to the summary")
    _add_common(p)

    p = sub.add_parser("segment", help="tercile activity segmentation of streams")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keying", default=None, choices=["per-user", "per-user-project"],
                   help="stream keying (default per-user)")
    _add_common(p)

    p = sub.add_parser("report", help="render reliability diagrams and metric time series as SVG")
    p.add_argument("--input", required=True, help="directory with eval/replay CSV outputs")
    p.add_argument("--out", required=True, help="output directory for SVG files")
    _add_common(p)

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and explicit flags (flags win)."""
    values = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key, value in file_values.items():
            if key in values:
                values[key] = value
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    # mask subcommand reuses init/keying defaults harmlessly
    cfg = RunConfig(command=args.command, **values)
    if cfg.stride is None:
        cfg.stride = cfg.window
    return cfg


_COMMANDS = {
    "gen": cmd_gen,
    "mask": cmd_mask,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "replay": cmd_replay,
    "segment": cmd_segment,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    try:
        return _COMMANDS[args.command](cfg, args)
    except (telemetry.TelemetryError, ValueError, OSError) as exc:
        print(f"calibcc {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
