"""Minimal SVG line plots for branches: polylines, event glyphs and axis labels."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT, PAD = 640, 480, 60
COLORS = ("#1f4e9c", "#b22222", "#2e8b57", "#7b3f99")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render(series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
           events: Sequence[tuple[str, float, float]] = (),
           xlabel: str = "", ylabel: str = "", title: str = "") -> str:
    """Render named (x, y) polylines and labelled event markers."""
    xs = [v for _, x, _ in series for v in x] + [e[1] for e in events]
    ys = [v for _, _, y in series for v in y] + [e[2] for e in events]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return PAD + (x - x0) / (x1 - x0) * (WIDTH - 2 * PAD)

    def py(y):
        return HEIGHT - PAD - (y - y0) / (y1 - y0) * (HEIGHT - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD}" width="{WIDTH - 2 * PAD}" height="{HEIGHT - 2 * PAD}" '
           'fill="none" stroke="black"/>']
    for k, (name, x, y) in enumerate(series):
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{COLORS[k % len(COLORS)]}" '
                   f'stroke-width="1.5" points="{pts}"><title>{escape(name)}</title></polyline>')
    for kind, x, y in events:
        cx, cy = px(x), py(y)
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="4" fill="red"/>')
        out.append(f'<text x="{_fmt(cx + 6)}" y="{_fmt(cy - 6)}" font-size="12">{escape(kind)}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle" '
               f'font-size="14">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{HEIGHT / 2}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 18 {HEIGHT / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="30" text-anchor="middle" '
                   f'font-size="16">{escape(title)}</text>')
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text x="{_fmt(px(v))}" y="{HEIGHT - PAD + 16}" text-anchor="{anchor}" '
                   f'font-size="11">{v:.6g}</text>')
    for v in (y0, y1):
        out.append(f'<text x="{PAD - 4}" y="{_fmt(py(v))}" text-anchor="end" '
                   f'font-size="11">{v:.6g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
