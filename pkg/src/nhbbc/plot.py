"""Minimal self-contained SVG rendering of the CSV artifacts.

Output is plain text with fixed number formatting so that identical inputs
give identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidParameters
from .io import read_csv

W, H = 480, 360
MARGIN = 50
KINDS = ("complex", "bands", "profile", "heatmap")
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _n(x):
    return f"{x:.2f}"


class _Canvas:
    def __init__(self, xlim, ylim, title="", xlabel="", ylabel="", ylog=False):
        self.ylog = ylog
        self.x0, self.x1 = _pad(xlim)
        self.y0, self.y1 = _pad(ylim)
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{W - 2 * MARGIN}" '
            f'height="{H - 2 * MARGIN}" fill="none" stroke="black"/>',
            f'<text x="{W / 2}" y="{MARGIN - 15}" text-anchor="middle" '
            f'font-size="14">{title}</text>',
            f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
            f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>',
        ]
        for t in np.linspace(self.x0, self.x1, 5):
            self.parts.append(f'<text x="{_n(self.px(t))}" y="{H - MARGIN + 14}" '
                              f'text-anchor="middle" font-size="10">{t:.3g}</text>')
        for t in np.linspace(self.y0, self.y1, 5):
            lab = f"1e{t:.0f}" if ylog else f"{t:.3g}"
            self.parts.append(f'<text x="{MARGIN - 4}" y="{_n(self.py(t) + 3)}" '
                              f'text-anchor="end" font-size="10">{lab}</text>')

    def px(self, x):
        return MARGIN + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (W - 2 * MARGIN)

    def py(self, y):
        return H - MARGIN - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (H - 2 * MARGIN)

    def line(self, x, y, color, closed=False, width=1.5):
        pts = " ".join(f"{_n(a)},{_n(b)}" for a, b in zip(self.px(x), self.py(y)))
        tag = "polygon" if closed else "polyline"
        self.parts.append(f'<{tag} points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def dots(self, x, y, color, r=2.5):
        for a, b in zip(self.px(x), self.py(y)):
            self.parts.append(f'<circle cx="{_n(a)}" cy="{_n(b)}" r="{r}" fill="{color}"/>')

    def marker(self, x, y):
        a, b = self.px(x), self.py(y)
        self.parts.append(f'<path d="M{_n(a - 5)},{_n(b)}H{_n(a + 5)}M{_n(a)},{_n(b - 5)}'
                          f'V{_n(b + 5)}" stroke="black"/>')

    def svg(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _pad(lim):
    a, b = float(lim[0]), float(lim[1])
    if not np.isfinite(a) or not np.isfinite(b):
        a, b = 0.0, 1.0
    if b - a <= 0:
        a, b = a - 0.5, b + 0.5
    d = 0.05 * (b - a)
    return a - d, b + d


def complex_plane(cols):
    """Closed band curve in the complex plane with the origin marked."""
    re, im = cols["re_h"], cols["im_h"]
    lim = max(np.abs(re).max(), np.abs(im).max())
    c = _Canvas((-lim, lim), (-lim, lim), "complex band", "Re H", "Im H")
    c.line(re, im, COLORS[0], closed=True)
    c.marker(0.0, 0.0)
    return c.svg()


def bands(band, svd_csv=None):
    """sigma(k) of the periodic band, OBC singular values as dots."""
    k, s = band["k"], band["sigma"]
    top = s.max()
    if svd_csv is not None:
        top = max(top, np.nanmax(svd_csv["sigma"]))
    c = _Canvas((0, 2 * np.pi), (0, top), "singular values", "k", "sigma")
    c.line(k, s, COLORS[0])
    if svd_csv is not None:
        kl, sv = svd_csv["k_label"], svd_csv["sigma"]
        edge = svd_csv["edge_flag"] > 0
        c.dots(kl[~edge], sv[~edge], COLORS[2])
        # edge modes have no bulk momentum; draw them at k = pi
        c.dots(np.full(edge.sum(), np.pi), sv[edge], COLORS[1], r=4)
    return c.svg()


def profile(cols):
    """Magnitude profiles ``|v_m|`` on a log scale, one line per column."""
    site = cols["site"]
    names = [n for n in cols if n != "site"]
    if not names:
        raise InvalidParameters("profile CSV needs at least one data column")
    data = [np.log10(np.maximum(np.abs(cols[n].astype(float)), 1e-300)) for n in names]
    lo = max(min(d.min() for d in data), -40)
    hi = max(d.max() for d in data)
    c = _Canvas((site.min(), site.max()), (lo, hi), "vector profiles", "site", "|v|", ylog=True)
    for i, d in enumerate(data):
        c.line(site, np.maximum(d, lo), COLORS[i % len(COLORS)])
    return c.svg()


def heatmap(cols):
    """``log10 |M_mn|`` as a colour map (row down, column across)."""
    r, cc, a = cols["row"].astype(int), cols["col"].astype(int), cols["abs"]
    n, m = r.max(), cc.max()
    z = np.log10(np.maximum(a, 1e-300))
    zmax = z.max()
    zmin = max(z.min(), zmax - 12)
    c = _Canvas((0.5, m + 0.5), (0.5, n + 0.5), "log10 |matrix|", "column", "row (flipped)")
    cw = (W - 2 * MARGIN) / (m * 1.1)
    ch = (H - 2 * MARGIN) / (n * 1.1)
    for i, j, v in zip(r, cc, z):
        t = 0.0 if zmax == zmin else (min(max(v, zmin), zmax) - zmin) / (zmax - zmin)
        col = "#%02x%02x%02x" % (int(255 * t), int(60 + 100 * (1 - t)), int(255 * (1 - t)))
        c.parts.append(f'<rect x="{_n(c.px(j) - cw / 2)}" y="{_n(c.py(n + 1 - i) - ch / 2)}" '
                       f'width="{_n(cw)}" height="{_n(ch)}" fill="{col}"/>')
    return c.svg()


def render(csv_paths, kind):
    """Render CSV artifacts as an SVG string for one of ``KINDS``."""
    paths = [Path(p) for p in csv_paths]
    if kind not in KINDS:
        raise InvalidParameters(f"unknown plot kind {kind!r}; choose from {KINDS}")
    if not paths:
        raise InvalidParameters("no CSV input given")
    if kind == "complex":
        return complex_plane(read_csv(paths[0], ["re_h", "im_h"]))
    if kind == "bands":
        band = read_csv(paths[0], ["k", "sigma"])
        extra = read_csv(paths[1], ["k_label", "sigma", "edge_flag"]) if len(paths) > 1 else None
        return bands(band, extra)
    if kind == "profile":
        return profile(read_csv(paths[0], ["site"]))
    return heatmap(read_csv(paths[0], ["row", "col", "abs"]))
