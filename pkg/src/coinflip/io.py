"""File formats: pattern-count CSV, policy tables, sweep CSV and SVG chart."""
from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable
from typing import IO, TextIO

from .model import AggregateCounts, ContinuationPolicy, validate_pattern
from .simulation import DatasetResult, SweepSummary

SWEEP_HEADER = ("ratio", "mean", "p5", "p95", "theory", "n_ge3_mean")
RAW_HEADER = ("ratio_index", "ratio", "rep", "same3", "ge3", "proportion")
TEST_HEADER = ("test", "statistic", "df", "p_value", "observed", "null", "n")


class ParseError(ValueError):
    pass


def fmt(value: float | int) -> str:
    """Fixed six-decimal rendering; integers print as integers."""
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    out = f"{value:.6f}"
    return "0.000000" if out == "-0.000000" else out


def _lines(stream: TextIO | Iterable[str]) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        yield lineno, line.rstrip("\r\n").rstrip("\r")


def parse_counts(stream: TextIO | Iterable[str]) -> AggregateCounts:
    """Read ``pattern,count`` records (with header) into :class:`AggregateCounts`."""
    counts: dict[str, int] = {}
    saw_header = False
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        if not saw_header:
            if [f.strip().lower() for f in line.split(",")] != ["pattern", "count"]:
                raise ParseError(f"line {lineno}: expected header 'pattern,count', got {line!r}")
            saw_header = True
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ParseError(f"line {lineno}: expected 'pattern,count', got {line!r}")
        pattern, raw = fields[0].strip(), fields[1].strip()
        if len(pattern) < 2 or set(pattern) - set("MF"):
            raise ParseError(f"line {lineno}: invalid pattern in {line!r} (need 2+ symbols from M, F)")
        if not raw.isdigit():
            raise ParseError(f"line {lineno}: count must be a nonnegative integer in {line!r}")
        if pattern in counts:
            raise ParseError(f"line {lineno}: duplicate pattern {pattern}")
        counts[pattern] = int(raw)
    if not saw_header:
        raise ParseError("empty counts file: missing 'pattern,count' header")
    return AggregateCounts(counts)


def serialize_counts(counts: AggregateCounts) -> str:
    """Canonical form: header, then patterns sorted by length then lexicographically."""
    rows = ["pattern,count"]
    rows += [f"{p},{counts[p]}" for p in sorted(counts, key=lambda p: (len(p), p))]
    return "\n".join(rows) + "\n"


def parse_policy_table(stream: TextIO | Iterable[str]) -> ContinuationPolicy:
    """Read ``prefix,prob`` lines; an optional ``prefix,prob`` header is skipped."""
    table: dict[str, float] = {}
    for lineno, line in _lines(stream):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise ParseError(f"line {lineno}: expected 'prefix,prob', got {line!r}")
        if lineno == 1 and fields[0].lower() == "prefix":
            continue
        try:
            prefix = validate_pattern(fields[0])
            prob = float(fields[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if not prefix:
            raise ParseError(f"line {lineno}: empty prefix")
        if prefix in table:
            raise ParseError(f"line {lineno}: duplicate prefix {prefix}")
        table[prefix] = prob
    try:
        return ContinuationPolicy.table(table)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def parse_policy(spec: str) -> ContinuationPolicy:
    """``mp:q1,ps,pd,tail`` shorthand, or a path to a ``prefix,prob`` table file."""
    if spec.startswith("mp:"):
        try:
            q1, ps, pd, tail = (float(x) for x in spec[3:].split(","))
        except ValueError as exc:
            raise ParseError(f"policy shorthand must be mp:q1,ps,pd,tail, got {spec!r}") from exc
        return ContinuationPolicy.mixed_preference(q1, ps, pd, tail)
    with open(spec, encoding="utf-8", newline="") as fh:
        return parse_policy_table(fh)


# -- sweep output ---------------------------------------------------------


def write_sweep_csv(summary: SweepSummary, out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in summary.points:
        w.writerow([fmt(v) for v in (p.ratio, p.mean_prop, p.band_low, p.band_high, p.theory, p.n_effective_mean)])


def write_raw_csv(summary: SweepSummary, out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RAW_HEADER)
    for i, (ratio, cells) in enumerate(zip(summary.config.ratio_grid, summary.raw)):
        for r, c in enumerate(cells):
            w.writerow([i, fmt(ratio), r, c.same3_count, c.ge3_count, fmt(c.proportion)])


def read_raw_csv(stream: TextIO) -> dict[int, list[DatasetResult]]:
    """Per-replicate counts keyed by ratio index, as written by :func:`write_raw_csv`."""
    cells: dict[int, list[DatasetResult]] = {}
    for row in csv.DictReader(stream):
        cells.setdefault(int(row["ratio_index"]), []).append(DatasetResult(int(row["same3"]), int(row["ge3"])))
    return cells


def sweep_csv_text(summary: SweepSummary) -> str:
    buf = io.StringIO()
    write_sweep_csv(summary, buf)
    return buf.getvalue()


# -- SVG chart ------------------------------------------------------------


def render_svg(
    summary: SweepSummary,
    mark: tuple[float, float] | None = None,
    width: int = 640,
    height: int = 420,
) -> str:
    """Line chart: mean line, percentile band polygon, dashed theory curve, no-preference reference."""
    pts = [p for p in summary.points if not math.isnan(p.mean_prop)]
    if not pts:
        raise ValueError("nothing to plot: every grid point is empty")
    baseline = summary.config.sex.binomial_same3
    left, right, top, bottom = 70, 20, 20, 50
    xs = [p.ratio for p in pts]
    ys = [v for p in pts for v in (p.band_low, p.band_high, p.theory, p.mean_prop)] + [baseline]
    if mark:
        xs.append(mark[0])
        ys.append(mark[1])
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = min(ys), max(ys)
    pad = (y1 - y0) * 0.05 or 0.01
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - left - right, height - top - bottom

    def sx(x: float) -> float:
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y: float) -> float:
        return top + (y1 - y) / (y1 - y0) * ph

    def path(pairs: Iterable[tuple[float, float]]) -> str:
        return " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pairs)

    band = path([(p.ratio, p.band_high) for p in pts] + [(p.ratio, p.band_low) for p in reversed(pts)])
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<polygon class="band" points="{band}" fill="#f4c2c2" fill-opacity="0.7" stroke="none"/>',
        f'<line class="baseline" x1="{sx(x0):.2f}" y1="{sy(baseline):.2f}" x2="{sx(x1):.2f}" '
        f'y2="{sy(baseline):.2f}" stroke="#1f5fbf" stroke-width="1.5" stroke-dasharray="8,4"/>',
        f'<polyline class="theory" points="{path((p.ratio, p.theory) for p in pts)}" fill="none" '
        'stroke="#2a9d3a" stroke-width="2" stroke-dasharray="2,3"/>',
        f'<polyline class="mean" points="{path((p.ratio, p.mean_prop) for p in pts)}" fill="none" '
        'stroke="black" stroke-width="1.5"/>',
    ]
    if mark:
        cx, cy = sx(mark[0]), sy(mark[1])
        parts.append(
            f'<polygon class="mark" points="{cx:.2f},{cy - 6:.2f} {cx + 6:.2f},{cy:.2f} '
            f'{cx:.2f},{cy + 6:.2f} {cx - 6:.2f},{cy:.2f}" fill="#808080"/>'
        )
    # axes and ticks
    parts.append(
        f'<path d="M{left},{top} V{top + ph} H{left + pw}" fill="none" stroke="black" stroke-width="1"/>'
    )
    for k in range(6):
        xv = x0 + (x1 - x0) * k / 5
        yv = y0 + (y1 - y0) * k / 5
        parts.append(
            f'<text x="{sx(xv):.2f}" y="{top + ph + 16}" text-anchor="middle">{xv:.2f}</text>'
            f'<text x="{left - 6}" y="{sy(yv) + 4:.2f}" text-anchor="end">{yv:.3f}</text>'
        )
    parts.append(
        f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle">p_S / p_D</text>'
        f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.2f})">P(first three same sex | N &#8805; 3)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
