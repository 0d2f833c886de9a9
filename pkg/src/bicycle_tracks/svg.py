"""Minimal SVG 1.1 emission for tracks (plain text, deterministic)."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


@dataclass
class Figure:
    width: int = 640
    height: int = 640
    margin: float = 20.0
    paths: list = field(default_factory=list)
    marks: list = field(default_factory=list)
    title: str = ""

    def polyline(self, points, color="#000000", width=1.5, dashed=False, label=None):
        pts = np.asarray(points, dtype=float)[:, :2]
        self.paths.append((pts, color, width, dashed, label))

    def marker(self, point, color="#000000", radius=3.0):
        self.marks.append((np.asarray(point, dtype=float)[:2], color, radius))

    def _transform(self):
        allpts = [p[0] for p in self.paths] + [m[0][None] for m in self.marks]
        if not allpts:
            return lambda p: p
        pts = np.vstack(allpts)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = max(float(np.max(hi - lo)), 1e-12)
        s = min(self.width, self.height) - 2 * self.margin
        s = s / span
        cx, cy = 0.5 * (lo + hi)

        def tf(p):
            p = np.atleast_2d(p)
            x = self.width / 2 + s * (p[:, 0] - cx)
            y = self.height / 2 - s * (p[:, 1] - cy)
            return np.column_stack([x, y])

        return tf

    def render(self) -> str:
        tf = self._transform()
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="#ffffff"/>',
        ]
        if self.title:
            out.append(f'<title>{escape(self.title)}</title>')
        for pts, color, width, dashed, label in self.paths:
            q = tf(pts)
            d = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in q)
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            cls = f' class="{escape(label)}"' if label else ""
            out.append(f'<polyline{cls} points="{d}" fill="none" stroke="{color}" stroke-width="{_fmt(width)}"{dash}/>')
        for p, color, r in self.marks:
            x, y = tf(p)[0]
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{color}"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())


def _thin(points: np.ndarray, max_points: int = 4000) -> np.ndarray:
    if len(points) <= max_points:
        return points
    idx = np.unique(np.linspace(0, len(points) - 1, max_points).round().astype(int))
    return points[idx]


def tracks_figure(front, rears=(), title: str = "") -> Figure:
    """Front track in black; closed rears solid if stable, dashed if unstable, cusps marked."""
    fig = Figure(title=title)
    fig.polyline(_thin(front.points), "#000000", 2.0, label="front")
    for i, (wf, stable) in enumerate(rears):
        color = PALETTE[i % len(PALETTE)]
        fig.polyline(_thin(wf.points), color, 1.5, dashed=not stable, label="rear")
        for c in wf.cusps:
            fig.marker(c.position, color, 3.0)
    return fig


def finn_figure(track, title: str = "") -> Figure:
    fig = Figure(width=960, height=480, title=title)
    for k, seg in enumerate(track.segments):
        fig.polyline(_thin(seg.points), PALETTE[k % len(PALETTE)], 1.2, label=f"segment-{k}")
    fig.polyline(np.array([[0.0, 0.0], [track.achieved + 1.0, 0.0]]), "#999999", 0.5, label="axis")
    return fig
