"""SVG rendering for map layers, learning curves, and metric bar charts.

The output is plain SVG 1.1 text assembled with fixed number formatting,
so identical inputs always produce identical bytes.  Every grid cell is
one element with ``class="cell"`` (a square on rectangular grids, a
pointy-top hexagon on hexagonal ones); cells without a value use the
style's absent fill.  No plotting library is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .analysis import MapLayer
from .errors import ParameterError
from .grid import Topology, planar_positions

# sequential map: the familiar dark-violet-to-yellow ramp, luminance increasing
_SEQ_STOPS = (
    (0x44, 0x01, 0x54),
    (0x48, 0x28, 0x78),
    (0x3E, 0x49, 0x89),
    (0x31, 0x68, 0x8E),
    (0x26, 0x82, 0x8E),
    (0x1F, 0x9E, 0x89),
    (0x35, 0xB7, 0x79),
    (0x6E, 0xCE, 0x58),
    (0xFD, 0xE7, 0x25),
)

_CATEGORICAL = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)

_SQRT3 = math.sqrt(3.0)


@dataclass
class RenderStyle:
    """Visual knobs shared by all renderers."""

    cell_size: float = 24.0
    colormap: str = "sequential"  # or "categorical"
    show_colorbar: bool = True
    title: str = ""
    absent_cell_fill: str = "#d9d9d9"

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ParameterError(f"cell size must be > 0, got {self.cell_size}")
        if self.colormap not in ("sequential", "categorical"):
            raise ParameterError(
                f"colormap must be 'sequential' or 'categorical', got {self.colormap!r}"
            )


def _f(v: float) -> str:
    return f"{v:.2f}"


def sequential_color(t: float) -> str:
    """Color at position t in [0, 1] on the sequential ramp."""
    t = min(1.0, max(0.0, t))
    pos = t * (len(_SEQ_STOPS) - 1)
    i = min(int(pos), len(_SEQ_STOPS) - 2)
    frac = pos - i
    a, b = _SEQ_STOPS[i], _SEQ_STOPS[i + 1]
    rgb = tuple(round(a[c] + frac * (b[c] - a[c])) for c in range(3))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def categorical_color(i: int) -> str:
    return _CATEGORICAL[i % len(_CATEGORICAL)]


def _svg_open(width: float, height: float) -> list[str]:
    return [
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        '<g font-family="sans-serif" font-size="11">',
    ]


def _svg_close(parts: list[str]) -> str:
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _hex_points(cx: float, cy: float, radius: float) -> str:
    pts = []
    for k in range(6):
        ang = math.radians(30.0 + 60.0 * k)
        pts.append(f"{_f(cx + radius * math.cos(ang))},{_f(cy + radius * math.sin(ang))}")
    return " ".join(pts)


def _format_value(v: float) -> str:
    return format(v, ".5g")


def render_map(layer: MapLayer, style: RenderStyle | None = None) -> str:
    """Render one map layer to SVG text."""
    style = style or RenderStyle()
    topo = layer.topo
    cs = style.cell_size
    margin = 10.0
    top = margin + (22.0 if style.title else 0.0)

    vals = layer.values
    present = layer.present
    categorical = style.colormap == "categorical"
    if categorical:
        cats = sorted({float(v) for v in vals[present]})
        cat_index = {v: i for i, v in enumerate(cats)}
    else:
        vmin = float(np.nanmin(vals)) if present.any() else 0.0
        vmax = float(np.nanmax(vals)) if present.any() else 0.0
        span = vmax - vmin

    def fill_for(v: float) -> str:
        if math.isnan(v):
            return style.absent_cell_fill
        if categorical:
            return categorical_color(cat_index[float(v)])
        if span == 0.0:
            return sequential_color(0.5)
        return sequential_color((v - vmin) / span)

    if topo.kind is Topology.HEXAGONAL:
        radius = cs / _SQRT3
        origin_x = margin + cs / 2.0
        origin_y = top + radius
        content_w = (topo.cols - 0.5 + 1.0) * cs
        content_h = (topo.rows - 1) * (_SQRT3 / 2.0) * cs + 2.0 * radius
    else:
        origin_x = margin
        origin_y = top
        content_w = topo.cols * cs
        content_h = topo.rows * cs

    side_w = 0.0
    legend_lines: list[str] = []
    pos = planar_positions(topo)
    cells: list[str] = []
    for flat in range(topo.n_neurons):
        r, c = divmod(flat, topo.cols)
        color = fill_for(vals[r, c])
        if topo.kind is Topology.HEXAGONAL:
            cx = origin_x + pos[flat, 0] * cs
            cy = origin_y + pos[flat, 1] * cs
            cells.append(f'<polygon class="cell" points="{_hex_points(cx, cy, radius)}" fill="{color}"/>')
        else:
            x = origin_x + c * cs
            y = origin_y + r * cs
            cells.append(
                f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" '
                f'width="{_f(cs)}" height="{_f(cs)}" fill="{color}"/>'
            )

    bar_x = origin_x + content_w + 14.0
    if categorical:
        y = top
        for i, v in enumerate(cats):
            legend_lines.append(
                f'<rect class="legend-swatch" x="{_f(bar_x)}" y="{_f(y)}" '
                f'width="12.00" height="12.00" fill="{categorical_color(i)}"/>'
            )
            legend_lines.append(
                f'<text class="legend-item" x="{_f(bar_x + 16.0)}" y="{_f(y + 10.0)}">'
                f"{escape(_format_value(v))}</text>"
            )
            y += 16.0
        if len(cats) > len(_CATEGORICAL):
            legend_lines.append(
                f'<text class="legend-note" x="{_f(bar_x)}" y="{_f(y + 10.0)}">'
                f"colors repeat beyond {len(_CATEGORICAL)} categories</text>"
            )
            y += 16.0
        if not cats:
            legend_lines.append(
                f'<text class="legend-note" x="{_f(bar_x)}" y="{_f(top + 10.0)}">no data</text>'
            )
            y = top + 16.0
        side_w = 110.0
    elif style.show_colorbar:
        if present.any():
            steps = 24
            step_h = content_h / steps
            for i in range(steps):
                t = (i + 0.5) / steps
                y = origin_y + content_h - (i + 1) * step_h
                legend_lines.append(
                    f'<rect class="colorbar-step" x="{_f(bar_x)}" y="{_f(y)}" '
                    f'width="14.00" height="{_f(step_h + 0.5)}" fill="{sequential_color(t)}"/>'
                )
            legend_lines.append(
                f'<text class="colorbar-label" x="{_f(bar_x + 18.0)}" '
                f'y="{_f(origin_y + content_h)}">{escape(_format_value(vmin))}</text>'
            )
            legend_lines.append(
                f'<text class="colorbar-label" x="{_f(bar_x + 18.0)}" '
                f'y="{_f(origin_y + 10.0)}">{escape(_format_value(vmax))}</text>'
            )
        else:
            legend_lines.append(
                f'<text class="legend-note" x="{_f(bar_x)}" y="{_f(top + 10.0)}">no data</text>'
            )
        side_w = 90.0

    width = margin + content_w + (14.0 + side_w if legend_lines else 0.0) + margin
    height = top + content_h + margin
    parts = _svg_open(width, height)
    if style.title:
        parts.append(
            f'<text class="title" x="{_f(margin)}" y="{_f(margin + 12.0)}" '
            f'font-size="13">{escape(style.title)}</text>'
        )
    parts.extend(cells)
    parts.extend(legend_lines)
    return _svg_close(parts)


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _panel_axes(
    parts: list[str],
    x0: float,
    y0: float,
    w: float,
    h: float,
    xdom: tuple[float, float],
    ydom: tuple[float, float],
    x_integer: bool,
) -> None:
    parts.append(
        f'<line class="axis" x1="{_f(x0)}" y1="{_f(y0 + h)}" '
        f'x2="{_f(x0 + w)}" y2="{_f(y0 + h)}" stroke="#333333"/>'
    )
    parts.append(
        f'<line class="axis" x1="{_f(x0)}" y1="{_f(y0)}" '
        f'x2="{_f(x0)}" y2="{_f(y0 + h)}" stroke="#333333"/>'
    )
    for tx in _nice_ticks(*xdom):
        px = x0 + (tx - xdom[0]) / (xdom[1] - xdom[0]) * w
        label = str(int(round(tx))) if x_integer else _format_value(tx)
        parts.append(
            f'<line class="tick" x1="{_f(px)}" y1="{_f(y0 + h)}" '
            f'x2="{_f(px)}" y2="{_f(y0 + h + 4.0)}" stroke="#333333"/>'
        )
        parts.append(
            f'<text class="tick-label" x="{_f(px)}" y="{_f(y0 + h + 15.0)}" '
            f'text-anchor="middle" font-size="10">{escape(label)}</text>'
        )
    for ty in _nice_ticks(*ydom):
        py = y0 + h - (ty - ydom[0]) / (ydom[1] - ydom[0]) * h
        parts.append(
            f'<line class="tick" x1="{_f(x0 - 4.0)}" y1="{_f(py)}" '
            f'x2="{_f(x0)}" y2="{_f(py)}" stroke="#333333"/>'
        )
        parts.append(
            f'<text class="tick-label" x="{_f(x0 - 6.0)}" y="{_f(py + 3.0)}" '
            f'text-anchor="end" font-size="10">{escape(_format_value(ty))}</text>'
        )


def render_curves(
    series: dict[str, "list[float] | np.ndarray"],
    style: RenderStyle | None = None,
    panels: list[list[str]] | None = None,
) -> str:
    """Render named value-per-epoch series as line panels.

    ``panels`` groups series names into vertically stacked panels; by
    default all series share one panel.  A length-1 series draws a single
    marker instead of a polyline.
    """
    style = style or RenderStyle()
    if not series:
        raise ParameterError("render_curves needs at least one series")
    arrays: dict[str, np.ndarray] = {}
    for name, vals in series.items():
        arr = np.asarray(vals, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ParameterError(f"series {name!r} must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise ParameterError(f"series {name!r} contains non-finite values")
        arrays[name] = arr
    if panels is None:
        panels = [list(arrays)]
    for group in panels:
        for name in group:
            if name not in arrays:
                raise ParameterError(f"panel references unknown series {name!r}")

    pw, ph = 460.0, 150.0
    left, right, p_top, p_bottom, gap = 56.0, 14.0, 26.0, 30.0, 8.0
    margin = 10.0
    top = margin + (22.0 if style.title else 0.0)
    width = margin + left + pw + right + margin
    height = top + len(panels) * (p_top + ph + p_bottom + gap) - gap + margin

    color_of = {name: categorical_color(i) for i, name in enumerate(arrays)}
    parts = _svg_open(width, height)
    if style.title:
        parts.append(
            f'<text class="title" x="{_f(margin)}" y="{_f(margin + 12.0)}" '
            f'font-size="13">{escape(style.title)}</text>'
        )
    py0 = top
    for group in panels:
        x0 = margin + left
        y0 = py0 + p_top
        max_len = max(arrays[n].size for n in group)
        xdom = (0.0, float(max_len - 1)) if max_len > 1 else (0.0, 1.0)
        lo = min(float(arrays[n].min()) for n in group)
        hi = max(float(arrays[n].max()) for n in group)
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        ydom = (lo - pad, hi + pad)
        parts.append(
            f'<text class="panel-title" x="{_f(x0)}" y="{_f(py0 + 14.0)}" '
            f'font-size="12">{escape(" / ".join(group))}</text>'
        )
        _panel_axes(parts, x0, y0, pw, ph, xdom, ydom, x_integer=True)

        def sx(t: float) -> float:
            return x0 + (t - xdom[0]) / (xdom[1] - xdom[0]) * pw

        def sy(v: float) -> float:
            return y0 + ph - (v - ydom[0]) / (ydom[1] - ydom[0]) * ph

        for name in group:
            arr = arrays[name]
            color = color_of[name]
            if arr.size == 1:
                parts.append(
                    f'<circle class="series" cx="{_f(sx(0.0))}" cy="{_f(sy(arr[0]))}" '
                    f'r="3.00" fill="{color}"/>'
                )
            else:
                pts = " ".join(f"{_f(sx(i))},{_f(sy(v))}" for i, v in enumerate(arr))
                parts.append(
                    f'<polyline class="series" points="{pts}" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>'
                )
        ly = y0 + 4.0
        for name in group:
            lx = x0 + pw - 110.0
            parts.append(
                f'<line class="legend-swatch" x1="{_f(lx)}" y1="{_f(ly + 4.0)}" '
                f'x2="{_f(lx + 16.0)}" y2="{_f(ly + 4.0)}" stroke="{color_of[name]}" '
                f'stroke-width="2"/>'
            )
            parts.append(
                f'<text class="legend-item" x="{_f(lx + 20.0)}" y="{_f(ly + 8.0)}" '
                f'font-size="10">{escape(name)}</text>'
            )
            ly += 14.0
        py0 += p_top + ph + p_bottom + gap
    return _svg_close(parts)


def render_bars(rows, style: RenderStyle | None = None) -> str:
    """Render cluster comparison rows as grouped bars, one panel per metric.

    ``rows`` are objects with ``space``, ``algorithm``, ``silhouette``,
    ``davies_bouldin``, and ``calinski_harabasz`` attributes.  Bars group
    by space; colors encode the algorithm.  Negative values extend below
    the zero baseline.
    """
    style = style or RenderStyle()
    rows = list(rows)
    if not rows:
        raise ParameterError("render_bars needs at least one row")
    metrics = ("silhouette", "davies_bouldin", "calinski_harabasz")
    spaces: list[str] = []
    algos: list[str] = []
    for r in rows:
        if r.space not in spaces:
            spaces.append(r.space)
        if r.algorithm not in algos:
            algos.append(r.algorithm)
        for m in metrics:
            if not math.isfinite(float(getattr(r, m))):
                raise ParameterError(f"non-finite {m} value for {r.space}/{r.algorithm}")
    value = {(r.space, r.algorithm, m): float(getattr(r, m)) for r in rows for m in metrics}

    bar_w, bar_gap, group_gap = 26.0, 4.0, 26.0
    group_w = len(algos) * bar_w + (len(algos) - 1) * bar_gap
    pw = len(spaces) * (group_w + group_gap) - group_gap
    ph = 130.0
    left, right, p_top, p_bottom, gap = 64.0, 120.0, 24.0, 34.0, 8.0
    margin = 10.0
    top = margin + (22.0 if style.title else 0.0)
    width = margin + left + pw + right + margin
    height = top + len(metrics) * (p_top + ph + p_bottom + gap) - gap + margin

    color_of = {a: categorical_color(i) for i, a in enumerate(algos)}
    parts = _svg_open(width, height)
    if style.title:
        parts.append(
            f'<text class="title" x="{_f(margin)}" y="{_f(margin + 12.0)}" '
            f'font-size="13">{escape(style.title)}</text>'
        )
    py0 = top
    for m in metrics:
        x0 = margin + left
        y0 = py0 + p_top
        vals = [value.get((s, a, m)) for s in spaces for a in algos]
        vals = [v for v in vals if v is not None]
        lo = min(0.0, min(vals))
        hi = max(0.0, max(vals))
        pad = 0.05 * (hi - lo) if hi > lo else 1.0
        ydom = (lo - (pad if lo < 0 else 0.0), hi + pad)

        def sy(v: float) -> float:
            return y0 + ph - (v - ydom[0]) / (ydom[1] - ydom[0]) * ph

        parts.append(
            f'<text class="panel-title" x="{_f(x0)}" y="{_f(py0 + 14.0)}" '
            f'font-size="12">{escape(m)}</text>'
        )
        for ty in _nice_ticks(*ydom):
            pyt = sy(ty)
            parts.append(
                f'<line class="tick" x1="{_f(x0 - 4.0)}" y1="{_f(pyt)}" '
                f'x2="{_f(x0)}" y2="{_f(pyt)}" stroke="#333333"/>'
            )
            parts.append(
                f'<text class="tick-label" x="{_f(x0 - 6.0)}" y="{_f(pyt + 3.0)}" '
                f'text-anchor="end" font-size="10">{escape(_format_value(ty))}</text>'
            )
        base = sy(0.0)
        parts.append(
            f'<line class="axis" x1="{_f(x0)}" y1="{_f(base)}" '
            f'x2="{_f(x0 + pw)}" y2="{_f(base)}" stroke="#333333"/>'
        )
        parts.append(
            f'<line class="axis" x1="{_f(x0)}" y1="{_f(y0)}" '
            f'x2="{_f(x0)}" y2="{_f(y0 + ph)}" stroke="#333333"/>'
        )
        gx = x0
        for s in spaces:
            for i, a in enumerate(algos):
                v = value.get((s, a, m))
                if v is not None:
                    bx = gx + i * (bar_w + bar_gap)
                    ytop = min(sy(v), base)
                    hgt = abs(sy(v) - base)
                    parts.append(
                        f'<rect class="bar" x="{_f(bx)}" y="{_f(ytop)}" '
                        f'width="{_f(bar_w)}" height="{_f(hgt)}" fill="{color_of[a]}"/>'
                    )
            parts.append(
                f'<text class="tick-label" x="{_f(gx + group_w / 2.0)}" '
                f'y="{_f(y0 + ph + 16.0)}" text-anchor="middle" font-size="10">'
                f"{escape(s)}</text>"
            )
            gx += group_w + group_gap
        ly = y0
        for a in algos:
            lx = x0 + pw + 18.0
            parts.append(
                f'<rect class="legend-swatch" x="{_f(lx)}" y="{_f(ly)}" '
                f'width="12.00" height="12.00" fill="{color_of[a]}"/>'
            )
            parts.append(
                f'<text class="legend-item" x="{_f(lx + 16.0)}" y="{_f(ly + 10.0)}" '
                f'font-size="10">{escape(a)}</text>'
            )
            ly += 16.0
        py0 += p_top + ph + p_bottom + gap
    return _svg_close(parts)
