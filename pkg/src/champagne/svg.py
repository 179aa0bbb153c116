"""Minimal deterministic SVG plotting.

Only what the command line needs: a single set of axes with polylines,
scatter markers, polygons and text. Every number is written with a fixed
format so reruns are byte-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np


def _f(x: float) -> str:
    return f"{x:.2f}"


@dataclass
class Figure:
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    width: int = 640
    height: int = 480
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    comment: str = ""
    _body: list[str] = field(default_factory=list)

    # plotting area inside the canvas
    left: int = 70
    right: int = 20
    top: int = 40
    bottom: int = 55

    def _px(self, x, y):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        w = self.width - self.left - self.right
        h = self.height - self.top - self.bottom
        px = self.left + (np.asarray(x, dtype=float) - x0) / (x1 - x0) * w
        py = self.top + h - (np.asarray(y, dtype=float) - y0) / (y1 - y0) * h
        return px, py

    def polyline(self, x, y, color="black", width=1.5, dash: str | None = None, closed=False):
        px, py = self._px(x, y)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px, py))
        tag = "polygon" if closed else "polyline"
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self._body.append(f'<{tag} points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra}/>')

    def scatter(self, x, y, color="black", radius=1.8):
        px, py = self._px(x, y)
        for a, b in zip(px, py):
            self._body.append(f'<circle cx="{_f(a)}" cy="{_f(b)}" r="{radius}" fill="{color}"/>')

    def polygon(self, x, y, color="black", fill="none", width=1.5):
        px, py = self._px(x, y)
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(px, py))
        self._body.append(f'<polygon points="{pts}" fill="{fill}" fill-opacity="0.3" '
                          f'stroke="{color}" stroke-width="{width}"/>')

    def text(self, x, y, s, size=12, color="black"):
        px, py = self._px([x], [y])
        self._body.append(f'<text x="{_f(px[0])}" y="{_f(py[0])}" font-size="{size}" '
                          f'fill="{color}" font-family="sans-serif">{escape(s)}</text>')

    def _axes(self) -> list[str]:
        out = []
        w = self.width - self.left - self.right
        h = self.height - self.top - self.bottom
        out.append(f'<rect x="{self.left}" y="{self.top}" width="{w}" height="{h}" '
                   f'fill="none" stroke="black" stroke-width="1"/>')
        for axis, (lo, hi) in (("x", self.xlim), ("y", self.ylim)):
            for t in np.linspace(lo, hi, 5):
                if axis == "x":
                    px, _ = self._px([t], [self.ylim[0]])
                    y = self.top + h
                    out.append(f'<line x1="{_f(px[0])}" y1="{y}" x2="{_f(px[0])}" y2="{y + 5}" stroke="black"/>')
                    out.append(f'<text x="{_f(px[0])}" y="{y + 18}" font-size="11" text-anchor="middle" '
                               f'font-family="sans-serif">{t:.3g}</text>')
                else:
                    _, py = self._px([self.xlim[0]], [t])
                    out.append(f'<line x1="{self.left - 5}" y1="{_f(py[0])}" x2="{self.left}" y2="{_f(py[0])}" '
                               f'stroke="black"/>')
                    out.append(f'<text x="{self.left - 8}" y="{_f(py[0] + 4)}" font-size="11" text-anchor="end" '
                               f'font-family="sans-serif">{t:.3g}</text>')
        cx = self.left + w / 2
        if self.title:
            out.append(f'<text x="{_f(cx)}" y="{self.top - 14}" font-size="14" text-anchor="middle" '
                       f'font-family="sans-serif">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{_f(cx)}" y="{self.height - 12}" font-size="12" text-anchor="middle" '
                       f'font-family="sans-serif">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cy = self.top + h / 2
            out.append(f'<text x="16" y="{_f(cy)}" font-size="12" text-anchor="middle" '
                       f'transform="rotate(-90 16 {_f(cy)})" font-family="sans-serif">{escape(self.ylabel)}</text>')
        return out

    def render(self) -> str:
        head = ['<?xml version="1.0" encoding="UTF-8"?>']
        if self.comment:
            # "--" is not allowed inside XML comments
            head.append("<!--\n" + self.comment.replace("--", "- -") + "\n-->")
        head.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                    f'viewBox="0 0 {self.width} {self.height}">')
        head.append(f'<rect width="{self.width}" height="{self.height}" fill="white"/>')
        # clip data to the axes box
        w = self.width - self.left - self.right
        h = self.height - self.top - self.bottom
        head.append(f'<defs><clipPath id="plot"><rect x="{self.left}" y="{self.top}" width="{w}" '
                    f'height="{h}"/></clipPath></defs>')
        body = ['<g clip-path="url(#plot)">', *self._body, "</g>"]
        return "\n".join(head + body + self._axes() + ["</svg>", ""])
