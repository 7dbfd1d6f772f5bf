"""CSV, SVG and flat config files.

CSV files use LF line endings and 12 significant digits so that identical
runs give identical bytes.  SVG output is plain text with no external
dependencies.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigurationError
from .model import TWO_PI, GridFunction

DIGITS = 12


def fmt(v):
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop the sign of -0.0
    return f"{v:.{DIGITS}g}"


def write_rows(path, header, rows):
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else fmt(r) for r in row) + "\n")
    return path


def write_grid_csv(path, f):
    """``x,u`` table of a grid function."""
    return write_rows(path, ("x", "u"), zip(f.grid.nodes, f.values))


def read_xy_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    if data.shape[1] != 2:
        raise ConfigurationError(f"{path}: expected two columns x,u")
    return data[:, 0], data[:, 1]


def load_seed(path, grid):
    """Grid function from an ``x,u`` CSV; resampled when the nodes differ."""
    x, u = read_xy_csv(path)
    if x.size == grid.n and np.allclose(x, grid.nodes, atol=1e-9):
        return GridFunction(grid, u)
    order = np.argsort(np.mod(x, TWO_PI))
    xs, us = np.mod(x, TWO_PI)[order], u[order]
    vals = np.interp(grid.nodes, xs, us, period=TWO_PI)
    return GridFunction(grid, vals)


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigurationError(f"output directory {path} is not writable")
    return path


# ---------------------------------------------------------------------------
# svg

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


@dataclass
class Panel:
    title: str
    curves: list = field(default_factory=list)


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def render_svg(panels, width=360, height=280):
    pad_l, pad_r, pad_t, pad_b = 48, 12, 28, 36
    total_w = width * max(len(panels), 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{height}" '
        f'viewBox="0 0 {total_w} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{total_w}" height="{height}" fill="white"/>',
    ]
    for k, panel in enumerate(panels):
        ox = k * width
        pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
        ys = np.concatenate([c.y for c in panel.curves]) if panel.curves else np.zeros(1)
        ylo, yhi = float(np.min(ys)), float(np.max(ys))
        if yhi - ylo < 1e-12:
            ylo, yhi = ylo - 1.0, yhi + 1.0
        m = 0.05 * (yhi - ylo)
        ylo, yhi = ylo - m, yhi + m

        def sx(x):
            return ox + pad_l + pw * x / TWO_PI

        def sy(y):
            return pad_t + ph * (yhi - y) / (yhi - ylo)

        out.append(f'<g id="panel{k}">')
        out.append(f'<text x="{ox + width / 2:.1f}" y="16" text-anchor="middle">{escape(panel.title)}</text>')
        out.append(f'<rect x="{ox + pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for t, lab in ((0.0, "0"), (math.pi / 2, "π/2"), (math.pi, "π"),
                       (1.5 * math.pi, "3π/2"), (TWO_PI, "2π")):
            out.append(f'<text x="{sx(t):.1f}" y="{pad_t + ph + 14}" text-anchor="middle">{lab}</text>')
        for t in _ticks(ylo, yhi):
            out.append(f'<text x="{ox + pad_l - 4}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:g}</text>')
            out.append(f'<line x1="{ox + pad_l}" x2="{ox + pad_l + pw}" y1="{sy(t):.1f}" y2="{sy(t):.1f}" '
                       f'stroke="#dddddd"/>')
        for j, c in enumerate(panel.curves):
            color = PALETTE[j % len(PALETTE)]
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(c.x, c.y))
            dash = ' stroke-dasharray="5,3"' if c.dashed else ""
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4"{dash} points="{pts}"/>')
            out.append(f'<text x="{ox + pad_l + 6}" y="{pad_t + 14 + 13 * j}" fill="{color}">'
                       f'{escape(c.label)}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, panels, **kw):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(render_svg(panels, **kw))
    return path


def grid_curve(label, f, dashed=False, max_points=1024):
    """Curve from a grid function, closed at 2 pi and thinned for plotting."""
    g = f.grid
    stride = max(1, g.n // max_points)
    x = np.append(g.nodes[::stride], TWO_PI)
    y = np.append(f.values[::stride], f.values[0])
    return Curve(label, x, y, dashed)

