"""Self-contained SVG line charts (delivery ratio and delay against node count)."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

REQUIRED = ("scenario", "nodes", "seed", "pdr", "avg_delay_s")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 50, 60


class PlotError(ValueError):
    pass


def load_series(csv_path) -> dict[str, list[tuple[int, float, float]]]:
    """scenario -> [(nodes, pdr, delay)] in node order.

    Aggregate rows are used when present; otherwise per-seed rows are averaged.
    """
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED:
            if col not in header:
                raise PlotError(f"{csv_path}: missing column '{col}'")
        rows = list(reader)
    if not rows:
        raise PlotError(f"{csv_path}: no data rows")

    agg = [r for r in rows if r["seed"] == "AGG"]
    use = agg if agg else rows
    cells = defaultdict(list)
    for lineno, r in enumerate(use, start=2):
        try:
            cells[(r["scenario"], int(r["nodes"]))].append((float(r["pdr"]), float(r["avg_delay_s"])))
        except (TypeError, ValueError):
            raise PlotError(f"{csv_path}: unparsable row {lineno}: {r}") from None

    series = defaultdict(list)
    for (scenario, nodes), vals in sorted(cells.items()):
        pdr = sum(v[0] for v in vals) / len(vals)
        delay = sum(v[1] for v in vals) / len(vals)
        series[scenario].append((nodes, pdr, delay))
    return dict(series)


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    """Round tick values spanning at least [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step + 1e-9) * step
    ticks = [start]
    while ticks[-1] < hi - 1e-12 * max(1.0, abs(hi)):
        ticks.append(ticks[-1] + step)
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.6g}"


def line_chart(points: list[tuple[float, float]], title: str, xlabel: str, ylabel: str) -> str:
    if not points:
        raise PlotError(f"{title}: no points")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xt = nice_ticks(min(xs), max(xs))
    yt = nice_ticks(min(0.0, min(ys)), max(ys))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    for t in yt:
        y = _fmt(sy(t))
        out.append(f'<line x1="{LEFT}" y1="{y}" x2="{LEFT + pw}" y2="{y}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{_label(t)}</text>')
    for t in xt:
        x = _fmt(sx(t))
        out.append(f'<line x1="{x}" y1="{TOP + ph}" x2="{x}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{TOP + ph + 20}" text-anchor="middle">{_label(t)}</text>')
    out.append(
        f'<polyline fill="none" stroke="black" points="{LEFT},{TOP} {LEFT},{TOP + ph} {LEFT + pw},{TOP + ph}"/>'
    )
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="20" y="{TOP + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {TOP + ph / 2})">{escape(ylabel)}</text>'
    )
    pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in points)
    out.append(f'<polyline class="series" fill="none" stroke="#1f5fa8" stroke-width="2" points="{pts}"/>')
    for x, y in points:
        out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3.5" fill="#1f5fa8"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(csv_path, out_dir) -> list[Path]:
    """Write pdr_scenario{S}.svg and delay_scenario{S}.svg for every scenario in the CSV."""
    series = load_series(csv_path)
    charts = {}
    for scenario, pts in series.items():
        charts[f"pdr_scenario{scenario}.svg"] = line_chart(
            [(n, p) for n, p, _ in pts], f"Packet delivery ratio, scenario {scenario}",
            "number of nodes", "packet delivery ratio",
        )
        charts[f"delay_scenario{scenario}.svg"] = line_chart(
            [(n, d) for n, _, d in pts], f"Average end-to-end delay, scenario {scenario}",
            "number of nodes", "average delay (s)",
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, svg in charts.items():
        path = out / name
        path.write_text(svg)
        written.append(path)
    return written
