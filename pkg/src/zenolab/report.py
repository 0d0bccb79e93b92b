"""CSV emission and minimal SVG line charts."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape


def fmt(x) -> str:
    """12 significant digits; scientific (lowercase ``e``) below 1e-4; ``nan`` sentinel."""
    if isinstance(x, str):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def _panel(x, y, title, xlabel, ylabel, x0, y0, w, h) -> list[str]:
    pts = [(a, b) for a, b in zip(x, y) if math.isfinite(b)]
    out = [f'<g transform="translate({x0},{y0})">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="none" stroke="#000"/>',
           f'<text x="{w / 2}" y="-8" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{w / 2}" y="{h + 32}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
           f'<text x="-42" y="{h / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 -42 {h / 2})">{escape(ylabel)}</text>']
    if pts:
        xs, ys = zip(*pts)
        xmin, xmax = min(xs), max(xs)
        ymin, ymax = min(min(ys), 0.0), max(ys)
        xspan = (xmax - xmin) or 1.0
        yspan = (ymax - ymin) or 1.0
        sx = lambda v: (v - xmin) / xspan * w  # noqa: E731
        sy = lambda v: h - (v - ymin) / yspan * h  # noqa: E731
        poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{poly}"/>')
        for v, anchor_x in ((xmin, 0), (xmax, w)):
            out.append(f'<text x="{anchor_x}" y="{h + 16}" text-anchor="middle" font-size="10">{fmt(v)}</text>')
        for v in (ymin, ymax):
            out.append(f'<text x="-4" y="{sy(v) + 4:.2f}" text-anchor="end" font-size="10">{fmt(v)}</text>')
    out.append("</g>")
    return out


def line_charts_svg(path: Path, panels: Sequence[tuple]) -> Path:
    """Write stacked line charts; each panel is ``(x, y, title, xlabel, ylabel)``."""
    w, h, margin = 480, 220, 70
    height = len(panels) * (h + margin + 20) + 20
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w + 2 * margin}" height="{height}" '
             f'font-family="sans-serif">',
             '<rect width="100%" height="100%" fill="#fff"/>']
    for i, (x, y, title, xlabel, ylabel) in enumerate(panels):
        parts += _panel(x, y, title, xlabel, ylabel, margin, 30 + i * (h + margin + 20), w, h)
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
    return path
