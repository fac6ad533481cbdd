"""Static SVG drawing of a configuration: one filled circle per particle."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from sops.configuration import Color, Configuration
from sops.lattice import to_cartesian

FILL = {Color.C1: "#1f5fa8", Color.C2: "#e0a31a"}
EDGE_STROKE = "#9a9a9a"


def render_svg(c: Configuration, *, spacing: float = 12.0, radius: float = 4.5,
               title: str | None = None, draw_edges: bool = True) -> str:
    """SVG 1.1 text for ``c``; a pure function of its input.

    Occupied lattice edges are drawn as thin gray lines under the particles.
    """
    pts = {s: to_cartesian(s) for s in c.sites()}
    xs = [p[0] for p in pts.values()] or [0.0]
    ys = [p[1] for p in pts.values()] or [0.0]
    pad = 2 * radius
    x0, y0 = min(xs) * spacing - pad, -max(ys) * spacing - pad
    w = (max(xs) - min(xs)) * spacing + 2 * pad
    h = (max(ys) - min(ys)) * spacing + 2 * pad

    def xy(s):
        x, y = pts[s]
        return f"{x * spacing - x0:.3f}", f"{-y * spacing - y0:.3f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{math.ceil(w)}" height="{math.ceil(h)}" viewBox="0 0 {w:.3f} {h:.3f}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    if draw_edges:
        out.append(f'<g stroke="{EDGE_STROKE}" stroke-width="1">')
        for ed in sorted(c.edges(), key=lambda ed: (ed.u, ed.v)):
            (ax, ay), (bx, by) = xy(ed.u), xy(ed.v)
            out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}"/>')
        out.append("</g>")
    for color in (Color.C1, Color.C2):
        out.append(f'<g fill="{FILL[color]}">')
        for s in sorted(c.sites()):
            if c[s] == color:
                x, y = xy(s)
                out.append(f'<circle cx="{x}" cy="{y}" r="{radius}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
