"""Self-contained SVG 1.1 charts: offset histograms, error-count bars, bubble grid."""

from typing import Sequence
from xml.sax.saxutils import escape

from .divergence import DistributionStats, DivergenceHistogram
from .report import GRID_ERRORS, LENGTH_BOUNDS, BinnedSeries, GridCell

WIDTH, HEIGHT = 640, 400
MARGIN = 50
CELL = 60
MAX_RADIUS = 26.0

HISTOGRAM = "divergence_histogram"
ERROR_BARS = "error_count_bars"
BUBBLES = "bubble_grid"
FIGURES = (HISTOGRAM, ERROR_BARS, BUBBLES)


def _doc(width, height, body: Sequence[str]) -> str:
    head = ('<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n')
    return head + "".join(line + "\n" for line in body) + "</svg>\n"


def _text(x, y, s, size=12, anchor="middle", extra=""):
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')


def placeholder(message: str) -> str:
    return _doc(WIDTH, 120, [_text(WIDTH / 2, 64, message, 14)])


def _fmt(v):
    return "n/a" if v is None else f"{v:.2f}"


def histogram_svg(h: DivergenceHistogram, stats: DistributionStats, title: str = "") -> str:
    items = h.items()
    if not items:
        return placeholder(f"{title}: no divergent tokens" if title else "no divergent tokens")
    lo = min(o for o, _ in items)
    hi = max(o for o, _ in items)
    lo, hi = min(lo, 0), max(hi, 0)
    top = max(c for _, c in items)
    span = hi - lo + 1
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN - 20
    bar_w = plot_w / span
    base = MARGIN + 20 + plot_h
    body = [_text(WIDTH / 2, 24, title or "divergence", 14),
            f'<line x1="{MARGIN}" y1="{base:.1f}" x2="{WIDTH - MARGIN}" y2="{base:.1f}" stroke="black"/>']
    counts = dict(items)
    for k in range(span):
        o = lo + k
        x = MARGIN + k * bar_w
        c = counts.get(o, 0)
        if c:
            bh = plot_h * c / top
            fill = "#c0392b" if o == 0 else "#2e86c1"
            body.append(f'<rect class="bar" data-offset="{o}" data-count="{c}" x="{x + 1:.1f}" '
                        f'y="{base - bh:.1f}" width="{max(bar_w - 2, 1):.1f}" height="{bh:.1f}" '
                        f'fill="{fill}"/>')
        if span <= 40 or o % 5 == 0:
            body.append(_text(x + bar_w / 2, base + 14, o, 10))
    caption = (f"mu={_fmt(stats.mu)}  sigma={_fmt(stats.sigma)}  "
               f"gamma1={_fmt(stats.gamma1)}  n={stats.n}")
    body.append(_text(WIDTH / 2, HEIGHT - 12, caption, 12))
    return _doc(WIDTH, HEIGHT, body)


def error_bars_svg(series: Sequence[BinnedSeries], title: str = "robustness by error count") -> str:
    """RB as bars and non-robust f-BLEU as a line, one slot per bin."""
    if not series or all(s.n == 0 for s in series):
        return placeholder("no sentences with errors")
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN - 20
    slot = plot_w / len(series)
    base = MARGIN + 20 + plot_h
    body = [_text(WIDTH / 2, 24, title, 14),
            f'<line x1="{MARGIN}" y1="{base:.1f}" x2="{WIDTH - MARGIN}" y2="{base:.1f}" stroke="black"/>']
    points = []
    for k, s in enumerate(series):
        x = MARGIN + k * slot
        if s.rb is not None:
            bh = plot_h * s.rb / 100.0
            body.append(f'<rect class="bar" data-bin="{escape(s.key)}" data-n="{s.n}" '
                        f'x="{x + 4:.1f}" y="{base - bh:.1f}" width="{slot - 8:.1f}" '
                        f'height="{bh:.1f}" fill="#2e86c1"/>')
        if s.f_bleu_nonrobust is not None:
            points.append(f"{x + slot / 2:.1f},{base - plot_h * s.f_bleu_nonrobust / 100.0:.1f}")
        body.append(_text(x + slot / 2, base + 14, s.key, 10))
    if len(points) > 1:
        body.append(f'<polyline points="{" ".join(points)}" fill="none" stroke="#c0392b" '
                    'stroke-width="2"/>')
    body.append(_text(WIDTH / 2, HEIGHT - 12, "bars: RB (%)  line: f-BLEU on non-robust", 12))
    return _doc(WIDTH, HEIGHT, body)


def cell_center(length_bin: str, errors: int):
    col = [f"<{b}" for b in LENGTH_BOUNDS].index(length_bin)
    row = GRID_ERRORS.index(errors)
    return MARGIN + (col + 0.5) * CELL, MARGIN + (row + 0.5) * CELL


def bubble_grid_svg(cells: Sequence[GridCell], title: str = "RB by length and error count") -> str:
    """Radius proportional to sentence count, opacity to RB."""
    shown = [c for c in cells if c.plotted]
    if not shown:
        return placeholder("no grid cells above the RB threshold")
    width = 2 * MARGIN + CELL * len(LENGTH_BOUNDS)
    height = 2 * MARGIN + CELL * len(GRID_ERRORS)
    biggest = max(c.n for c in shown)
    body = [_text(width / 2, 20, title, 14)]
    for col, b in enumerate(LENGTH_BOUNDS):
        body.append(_text(MARGIN + (col + 0.5) * CELL, height - MARGIN + 16, f"<{b}", 10))
    for row, e in enumerate(GRID_ERRORS):
        body.append(_text(MARGIN - 8, MARGIN + (row + 0.5) * CELL + 4, e, 10, "end"))
    for c in shown:
        cx, cy = cell_center(c.length_bin, c.errors)
        r = MAX_RADIUS * c.n / biggest
        body.append(f'<circle class="cell" data-cell="{escape(c.key)}" cx="{cx:.1f}" cy="{cy:.1f}" '
                    f'r="{r:.2f}" fill="#2e86c1" fill-opacity="{c.rb / 100.0:.4f}" stroke="#1b4f72"/>')
    return _doc(width, height, body)


def emit_svg(figure: str, data, title: str = "") -> str:
    if figure == HISTOGRAM:
        h, stats = data
        return histogram_svg(h, stats, title)
    if figure == ERROR_BARS:
        return error_bars_svg(data, title or "robustness by error count")
    if figure == BUBBLES:
        return bubble_grid_svg(data, title or "RB by length and error count")
    raise ValueError(f"unknown figure {figure!r}")
