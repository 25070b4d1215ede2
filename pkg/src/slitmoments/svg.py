"""Minimal SVG 1.1 line/band/point plots without a plotting dependency.

Output is deterministic: identical data yields byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Plot", "nice_ticks"]


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2g}"
    return f"{v:.6g}"


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round-numbered ticks covering [lo, hi]."""
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


class Plot:
    """A single set of axes.

    Add series with ``line``, ``band``, ``points`` and ``steps``; limits are
    taken from the data unless given via ``xlim``/``ylim``.
    """

    def __init__(self, title="", xlabel="", ylabel="", width=640, height=420, xlim=None, ylim=None):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.width = width
        self.height = height
        self.xlim = xlim
        self.ylim = ylim
        self._items = []
        self.margin = (70, 20, 40, 55)  # left, right, top, bottom

    def line(self, x, y, color="#c0392b", width=1.2, dash=None):
        self._items.append(("line", np.asarray(x, float), np.asarray(y, float), color, width, dash))
        return self

    def band(self, x, lo, hi, color="#27ae60", opacity=0.3):
        self._items.append(
            ("band", np.asarray(x, float), np.asarray(lo, float), np.asarray(hi, float), color, opacity)
        )
        return self

    def points(self, x, y, color="#c0392b", r=1.5):
        self._items.append(("points", np.asarray(x, float), np.asarray(y, float), color, r))
        return self

    def steps(self, edges, counts, color="#c0392b", width=1.2):
        edges = np.asarray(edges, float)
        counts = np.asarray(counts, float)
        xs = np.repeat(edges, 2)[1:-1]
        ys = np.repeat(counts, 2)
        return self.line(xs, ys, color=color, width=width)

    def _limits(self):
        xs, ys = [], []
        for item in self._items:
            if item[0] == "band":
                xs.append(item[1])
                ys.extend([item[2], item[3]])
            else:
                xs.append(item[1])
                ys.append(item[2])
        def span(arrs, given):
            if given is not None:
                return given
            vals = np.concatenate([a[np.isfinite(a)] for a in arrs]) if arrs else np.array([0.0, 1.0])
            if vals.size == 0:
                return (0.0, 1.0)
            lo, hi = float(vals.min()), float(vals.max())
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            pad = 0.03 * (hi - lo)
            return (lo - pad, hi + pad)
        return span(xs, self.xlim), span(ys, self.ylim)

    def to_svg(self) -> str:
        (x0, x1), (y0, y1) = self._limits()
        ml, mr, mt, mb = self.margin
        pw = self.width - ml - mr
        ph = self.height - mt - mb

        def sx(v):
            return ml + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return mt + ph - (v - y0) / (y1 - y0) * ph

        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            '<defs><clipPath id="plotarea">'
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}"/></clipPath></defs>',
        ]
        # axes and ticks
        out.append(
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
        )
        for t in nice_ticks(x0, x1):
            px = _fmt(sx(t))
            out.append(f'<line x1="{px}" y1="{mt + ph}" x2="{px}" y2="{mt + ph + 5}" stroke="black"/>')
            out.append(
                f'<text x="{px}" y="{mt + ph + 18}" font-size="11" text-anchor="middle">{_label(t)}</text>'
            )
        for t in nice_ticks(y0, y1):
            py = _fmt(sy(t))
            out.append(f'<line x1="{ml - 5}" y1="{py}" x2="{ml}" y2="{py}" stroke="black"/>')
            out.append(
                f'<text x="{ml - 8}" y="{py}" font-size="11" text-anchor="end" '
                f'dominant-baseline="middle">{_label(t)}</text>'
            )
        if self.title:
            out.append(
                f'<text x="{ml + pw / 2:.1f}" y="{mt - 8}" font-size="13" text-anchor="middle">'
                f"{escape(self.title)}</text>"
            )
        if self.xlabel:
            out.append(
                f'<text x="{ml + pw / 2:.1f}" y="{self.height - 12}" font-size="12" '
                f'text-anchor="middle">{escape(self.xlabel)}</text>'
            )
        if self.ylabel:
            cy = mt + ph / 2
            out.append(
                f'<text x="16" y="{cy:.1f}" font-size="12" text-anchor="middle" '
                f'transform="rotate(-90 16 {cy:.1f})">{escape(self.ylabel)}</text>'
            )

        out.append('<g clip-path="url(#plotarea)">')
        for item in self._items:
            kind = item[0]
            if kind == "line":
                _, x, y, color, width, dash = item
                ok = np.isfinite(x) & np.isfinite(y)
                pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x[ok], y[ok]))
                extra = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(
                    f'<polyline points="{pts}" fill="none" stroke="{color}" '
                    f'stroke-width="{width}"{extra}/>'
                )
            elif kind == "band":
                _, x, lo, hi, color, opacity = item
                pts = [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, hi)]
                pts += [f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x[::-1], lo[::-1])]
                out.append(
                    f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="{opacity}" '
                    'stroke="none"/>'
                )
            elif kind == "points":
                _, x, y, color, r = item
                for a, b in zip(x, y):
                    out.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="{r}" fill="{color}"/>')
        out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_svg())
