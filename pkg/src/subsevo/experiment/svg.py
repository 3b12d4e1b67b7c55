"""Static SVG line charts from CSV files.

Output is byte-deterministic for identical inputs: fixed canvas, fixed
palette, fixed number formatting, no timestamps.
"""

from __future__ import annotations

import os

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 24, 20, 46
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
           "#9467bd", "#8c564b", "#17becf", "#7f7f7f")

KINDS = {
    # kind -> (x column, y column, x label, y label)
    "fitness_curve": ("iteration", "max_fitness", "iteration", "max fitness"),
    "timing_line": ("size", "mean_ms", "predictor size", "epoch time [ms]"),
}


class PlotDataError(ValueError):
    pass


def _read_series(path, x_col, y_col):
    with open(path) as fh:
        rows = [line.rstrip("\n") for line in fh]
    if not rows:
        raise PlotDataError(f"{path}: empty file")
    header = rows[0].split(",")
    try:
        xi, yi = header.index(x_col), header.index(y_col)
    except ValueError:
        raise PlotDataError(f"{path} row 1: header {rows[0]!r} lacks "
                            f"{x_col}/{y_col}") from None
    points = []
    for number, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        cells = row.split(",")
        try:
            points.append((float(cells[xi]), float(cells[yi])))
        except (IndexError, ValueError):
            raise PlotDataError(f"{path} row {number}: malformed row "
                                f"{row!r}") from None
    if not points:
        raise PlotDataError(f"{path}: no data rows")
    return points


def _ticks(lo, hi, count=5):
    span = hi - lo
    return [lo + span * i / (count - 1) for i in range(count)]


def _fmt(value):
    return f"{value:.2f}".rstrip("0").rstrip(".") if value != int(value) \
        else str(int(value))


def emit_plot(csv_paths, kind, out_path):
    """One polyline per input CSV, legend from file names; writes SVG 1.1."""
    if kind not in KINDS:
        raise PlotDataError(f"unknown plot kind {kind!r}")
    x_col, y_col, x_label, y_label = KINDS[kind]
    series = [(os.path.splitext(os.path.basename(p))[0],
               _read_series(p, x_col, y_col)) for p in csv_paths]
    if not series:
        raise PlotDataError("no input files")

    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#333333"/>',
    ]
    for tick in _ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(f'<line x1="{px:.2f}" y1="{MARGIN_T + plot_h}" '
                     f'x2="{px:.2f}" y2="{MARGIN_T + plot_h + 5}" '
                     f'stroke="#333333"/>')
        parts.append(f'<text x="{px:.2f}" y="{MARGIN_T + plot_h + 18}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'text-anchor="middle">{_fmt(tick)}</text>')
    for tick in _ticks(y_lo, y_hi):
        py = sy(tick)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.2f}" '
                     f'x2="{MARGIN_L}" y2="{py:.2f}" stroke="#333333"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{py + 4:.2f}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'text-anchor="end">{_fmt(tick)}</text>')
    parts.append(f'<text x="{MARGIN_L + plot_w / 2:.2f}" y="{HEIGHT - 10}" '
                 f'font-family="sans-serif" font-size="13" '
                 f'text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="16" y="{MARGIN_T + plot_h / 2:.2f}" '
                 f'font-family="sans-serif" font-size="13" '
                 f'text-anchor="middle" transform="rotate(-90 16 '
                 f'{MARGIN_T + plot_h / 2:.2f})">{y_label}</text>')

    for k, (name, points) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        ly = MARGIN_T + 14 + 16 * k
        lx = WIDTH - MARGIN_R - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" '
                     f'font-family="sans-serif" font-size="11">{name}</text>')

    parts.append("</svg>")
    payload = "\n".join(parts) + "\n"
    with open(out_path, "w", newline="\n") as fh:
        fh.write(payload)
    return out_path
