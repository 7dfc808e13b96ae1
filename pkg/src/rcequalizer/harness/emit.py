"""Result files: scan table, full JSON record and per-figure plot tables.

Everything except ``timing.json`` is a pure function of (config, seed), so
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from ..channel import schedule_values
from .config import ExperimentConfig, ScheduleBlock
from .runner import RunResult, _cell_key

SCAN_CSV = "scan.csv"
RESULTS_JSON = "results.json"
TIMING_JSON = "timing.json"
PLOT_CSV = "plot.csv"
SEGMENTS_CSV = "segments.csv"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def _csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _cell_paths(results: list[RunResult]) -> list[str]:
    seen = []
    for r in results:
        for k in r.cell:
            if k not in seen:
                seen.append(k)
    return seen


def scan_table(results: list[RunResult]) -> str:
    """One row per cell: parameters, mean/min/max SER, mask count, best flag."""
    paths = _cell_paths(results)
    header = ["name", *paths, "mean_ser", "min_ser", "max_ser", "masks", "noise_amplitude", "best"]
    rows = [[r.name, *(r.cell.get(p) for p in paths), r.mean_ser, r.min_ser, r.max_ser, len(r.masks),
             r.noise_amplitude, r.best] for r in results]
    return _csv_text(header, rows)


def results_json(results: list[RunResult]) -> str:
    docs = []
    for r in results:
        d = r.to_dict()
        d.pop("wall_time")
        docs.append(d)
    return json.dumps({"results": docs}, indent=1, sort_keys=True) + "\n"


def timing_json(results: list[RunResult]) -> str:
    return json.dumps({"wall_time": [r.wall_time for r in results]}, indent=1) + "\n"


def parse_results(text: str, timing: str | None = None) -> list[RunResult]:
    docs = json.loads(text)["results"]
    times = json.loads(timing)["wall_time"] if timing else [0.0] * len(docs)
    return [RunResult.from_dict({**d, "wall_time": t}) for d, t in zip(docs, times)]


def _label(path: str) -> str:
    return path.rsplit(".", 1)[-1]


def _best(group: list[RunResult]) -> RunResult | None:
    finite = [r for r in group if np.isfinite(r.mean_ser)]
    return min(finite, key=lambda r: (r.mean_ser, _cell_key(r.cell))) if finite else None


def sweep_table(results: list[RunResult], x: str, series: str | None = None) -> str:
    """Best cell per x value (and per series value), one row per x value.

    The first series gets plain ``mean_ser``/``min_ser``/``max_ser`` columns;
    later series are prefixed with their value.
    """
    xs, ss = [], []
    for r in results:
        xv = r.cell.get(x, _resolve(r.config, x))
        if xv not in xs:
            xs.append(xv)
        sv = r.cell.get(series, _resolve(r.config, series)) if series else None
        if sv not in ss:
            ss.append(sv)
    header = [_label(x)]
    for i, sv in enumerate(ss):
        prefix = "" if i == 0 else f"{sv}_"
        header += [f"{prefix}mean_ser", f"{prefix}min_ser", f"{prefix}max_ser", f"{prefix}best_cell"]
    rows = []
    for xv in xs:
        row = [xv]
        for sv in ss:
            group = [r for r in results if r.cell.get(x, _resolve(r.config, x)) == xv
                     and (series is None or r.cell.get(series, _resolve(r.config, series)) == sv)]
            b = _best(group)
            if b is None:
                row += [math.nan, math.nan, math.nan, ""]
            else:
                others = ";".join(f"{k}={_fmt(v)}" for k, v in sorted(b.cell.items()) if k not in (x, series))
                row += [b.mean_ser, b.min_ser, b.max_ser, others]
        rows.append(row)
    return _csv_text(header, rows)


def profile_table(results: list[RunResult]) -> str:
    """Long format for one-dimensional sweeps over several parameters."""
    rows = []
    for r in results:
        for path, value in r.cell.items():
            rows.append([path, value, r.mean_ser, r.min_ser, r.max_ser])
    return _csv_text(["parameter", "value", "mean_ser", "min_ser", "max_ser"], rows)


def trace_table(results: list[RunResult], series: str | None) -> str:
    """Windowed SER and step size of the first mask of each cell, side by side."""
    cfg = results[0].config
    sched = cfg["channel"]["schedule"]
    param = sched["parameter"]
    schedule = ScheduleBlock(**sched).build()
    n = min(len(r.masks[0].window_end) for r in results)
    ends = np.array(results[0].masks[0].window_end[:n])
    values = schedule_values(schedule, ends, cfg["channel"][param])
    header = ["window", "end_step", param]
    labels = [str(r.cell.get(series, i)) if series else str(i) for i, r in enumerate(results)]
    for lab in labels:
        header += [f"{lab}_ser", f"{lab}_lambda"]
    rows = []
    for w in range(n):
        row = [w, int(ends[w]), float(values[w])]
        for r in results:
            m = r.masks[0]
            row += [m.window_ser[w], m.window_lambda[w]]
        rows.append(row)
    return _csv_text(header, rows)


def segment_summary(mask, interval: int, n_segments: int, train_length: int) -> list[dict]:
    """Per-segment SER of a switching run, inclusive and after retraining.

    ``post_training`` averages the windows that close at least ``train_length``
    counted steps after the segment's last watchdog reset (or after the run
    start for the first segment) and whose step size is zero.
    """
    ends = np.asarray(mask.window_end)
    ser = np.asarray(mask.window_ser)
    lam = np.asarray(mask.window_lambda)
    resets = np.asarray(mask.resets, dtype=np.int64)
    out = []
    for s in range(n_segments):
        lo, hi = s * interval, (s + 1) * interval
        inside = (ends >= lo) & (ends < hi)
        rs = resets[(resets >= lo) & (resets < hi)]
        origin = rs.max() if rs.size else (lo if s else 0)
        settled = inside & (ends >= origin + train_length) & (lam == 0)
        out.append({
            "segment": s,
            "start": lo,
            "inclusive": float(ser[inside].mean()) if inside.any() else math.nan,
            "post_training": float(ser[settled].mean()) if settled.any() else math.nan,
            "resets": [int(v) for v in rs],
        })
    return out


def segments_table(results: list[RunResult]) -> str:
    cfg = results[0].config
    sched = cfg["channel"]["schedule"]
    total = cfg["run"]["total_length"] or max(m.window_end[-1] + 1 for r in results for m in r.masks)
    interval = sched["interval"]
    n_seg = -(-total // interval)
    rows = []
    for r in results:
        train = r.config["trainer"]["train_length"] or 0
        for i, m in enumerate(r.masks):
            for seg in segment_summary(m, interval, n_seg, train):
                value = sched["values"][seg["segment"] % len(sched["values"])]
                rows.append([i, seg["segment"], seg["start"], value, seg["inclusive"], seg["post_training"],
                             " ".join(str(v) for v in seg["resets"])])
    return _csv_text(["mask", "segment", "start", sched["parameter"], "inclusive_ser", "post_training_ser",
                      "resets"], rows)


def _resolve(config: dict, path: str | None):
    if path is None:
        return None
    node = config
    for part in path.split("."):
        node = node[part]
    return node


def plot_table(cfg: ExperimentConfig, results: list[RunResult]) -> str | None:
    kind = cfg.plot.kind
    if kind == "sweep":
        return sweep_table(results, cfg.plot.x, cfg.plot.series)
    if kind == "profile":
        return profile_table(results)
    if kind == "trace":
        return trace_table(results, cfg.plot.series)
    return None


def emit_results(cfg: ExperimentConfig, results: list[RunResult], out_dir: str | Path) -> dict[str, Path]:
    """Write all result files into ``out_dir``; returns the paths written.

    Raises ``OSError`` if the directory cannot be created or written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {SCAN_CSV: scan_table(results), RESULTS_JSON: results_json(results), TIMING_JSON: timing_json(results)}
    plot = plot_table(cfg, results)
    if plot is not None:
        files[PLOT_CSV] = plot
    if cfg.channel.schedule.kind == "switching":
        files[SEGMENTS_CSV] = segments_table(results)
    written = {}
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        written[name] = path
    return written


def load_results(out_dir: str | Path) -> list[RunResult]:
    out = Path(out_dir)
    timing = out / TIMING_JSON
    return parse_results((out / RESULTS_JSON).read_text(), timing.read_text() if timing.exists() else None)
