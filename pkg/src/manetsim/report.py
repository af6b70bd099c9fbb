"""Result tables: results.csv, per-metric .dat series, ordering summary, figures."""

from __future__ import annotations

import csv
import io
import math
import os
from typing import Sequence

from .scenario import RunResult, average_over_seeds

CSV_COLUMNS = ("protocol", "sim_time", "seed", "packets_sent", "packets_received", "paper_pdr",
               "packets_forwarded", "pdr", "throughput_Bps", "avg_delay_s", "nrl")

SERIES = {"pdr": "pdr", "paper_pdr": "paper_pdr", "throughput": "throughput_Bps",
          "avg_delay": "avg_delay_s", "nrl": "nrl"}

# metric -> (column, higher is better)
ORDERINGS = (("throughput", "throughput_Bps", True), ("pdr", "pdr", True), ("nrl", "nrl", False))


def fmt(value, digits: int = 6) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.{digits}f}"


def fmt_time(t: float) -> str:
    return f"{t:g}"


def _row(r: RunResult) -> list[str]:
    return [r.protocol, fmt_time(r.sim_time), str(r.seed),
            fmt(r.packets_sent, 2), fmt(r.packets_received, 2), fmt(r.paper_pdr, 2),
            fmt(r.packets_forwarded, 2), fmt(r.pdr), fmt(r.throughput_Bps, 3),
            fmt(r.avg_delay_s), fmt(r.nrl)]


def table_rows(results: Sequence[RunResult]) -> list[RunResult]:
    """Per-run rows, each (protocol, time) group followed by its seed mean when seeds > 1."""
    order: list[tuple] = []
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        key = (r.protocol, r.sim_time)
        if key not in groups:
            order.append(key)
            groups[key] = []
        groups[key].append(r)
    out = []
    for key in order:
        rows = groups[key]
        out.extend(rows)
        if len(rows) > 1:
            out.extend(average_over_seeds(rows))
    return out


def render_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in table_rows(results):
        w.writerow(_row(r))
    return buf.getvalue()


def series(results: Sequence[RunResult], column: str) -> tuple[list, list, dict]:
    """(times, protocols, {protocol: [value per time]}) using seed means."""
    means = average_over_seeds(results)
    times = sorted({r.sim_time for r in means})
    protocols = list(dict.fromkeys(r.protocol for r in means))
    lookup = {(r.protocol, r.sim_time): getattr(r, column) for r in means}
    return times, protocols, {p: [lookup.get((p, t), math.nan) for t in times] for p in protocols}


def render_series(results: Sequence[RunResult], column: str) -> str:
    times, protocols, values = series(results, column)
    lines = ["# sim_time " + " ".join(protocols)]
    for i, t in enumerate(times):
        lines.append(" ".join([fmt_time(t)] + [fmt(values[p][i]) for p in protocols]))
    return "\n".join(lines) + "\n"


def ordering(means: dict, higher_is_better: bool) -> str:
    """Chain like ``AODV > DSDV > DSR``; equal values are joined with ``=``."""
    ranked = sorted(means.items(), key=lambda kv: (-kv[1] if higher_is_better else kv[1], kv[0]))
    sym = " > " if higher_is_better else " < "
    text = ranked[0][0].upper()
    for (_, prev), (name, val) in zip(ranked, ranked[1:]):
        text += (" = " if fmt(prev) == fmt(val) else sym) + name.upper()
    return text


def protocol_means(results: Sequence[RunResult], column: str) -> dict:
    out = {}
    for proto in dict.fromkeys(r.protocol for r in results):
        vals = [getattr(r, column) for r in results if r.protocol == proto]
        out[proto] = math.inf if any(math.isinf(v) for v in vals) else math.fsum(vals) / len(vals)
    return out


def render_summary(results: Sequence[RunResult]) -> str:
    lines = []
    for name, column, higher in ORDERINGS:
        lines.append(f"{name}: {ordering(protocol_means(results, column), higher)}")
    lines.append("")
    lines.append("# mean over all runs")
    lines.append("# protocol " + " ".join(c for _, c, _ in ORDERINGS) + " avg_delay_s")
    for proto in dict.fromkeys(r.protocol for r in results):
        rows = [r for r in results if r.protocol == proto]
        vals = [protocol_means(rows, c)[proto] for _, c, _ in ORDERINGS]
        vals.append(protocol_means(rows, "avg_delay_s")[proto])
        lines.append(f"# {proto} " + " ".join(fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def emit_report(results: Sequence[RunResult], out_dir: str, figures: bool = True) -> list[str]:
    """Write results.csv, series_<metric>.dat, summary.txt (and PNG figures); return paths."""
    if not results:
        raise ValueError("no results to report")
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"output directory not writable: {out_dir}")
    written = []

    def put(name: str, text: str) -> None:
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        written.append(path)

    put("results.csv", render_csv(results))
    for name, column in SERIES.items():
        put(f"series_{name}.dat", render_series(results, column))
    put("summary.txt", render_summary(results))
    if figures:
        from .plotting import render_figures
        written.extend(render_figures(results, out_dir))
    return written
