"""Zigzag layout of alternating 1D and 2D panels, rendered to SVG.

2D panels occupy cells of an occupancy grid driven by a direction sequence
over {u, d, l, r}; 1D panels (variate labels, group separators, order
arrows) live in the gap strips between cells.  Rendering is a pure
function of (grid, panel specs, style): identical inputs give identical
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .margins import QQEnvelope, scaled_t_quantile
from .zenpath import Zenpath

__all__ = [
    "DirectionSeq",
    "LayoutGrid",
    "PanelSpec",
    "default_zigzag",
    "zigzag_cells",
    "layout",
    "render",
    "scatter_panel",
    "acf_panel",
    "qq_panel",
    "DEFAULT_STYLE",
]

DirectionSeq = list[str]

_DELTA = {"u": (-1, 0), "d": (1, 0), "l": (0, -1), "r": (0, 1)}

DEFAULT_STYLE = {
    "panel_size": 100.0,
    "gap_frac": 0.2,  # 1D strips take this fraction of a panel unit
    "point_radius_frac": 0.008,
    "point_opacity": 0.25,
    "point_color": "#000000",
    "frame_color": "#cccccc",
    "stroke_color": "#333333",
    "band_color": "#4477aa",
    # Darkest to lightest: central 90 / 95 / 99% and the full range.
    "envelope_colors": ("#737373", "#a0a0a0", "#c8c8c8", "#e8e8e8"),
    "font_size": 9.0,
    "font_family": "sans-serif",
    "connector": "label",  # or "arrow"
}


@dataclass(frozen=True)
class PanelSpec:
    """Data payload plus kind for one 2D panel."""

    kind: str
    data: dict
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("scatter", "acf", "qq", "label", "arrow"):
            raise ValueError(f"unknown panel kind {self.kind!r}")


@dataclass(frozen=True)
class Placed2D:
    """A 2D panel on the occupancy grid."""

    row: int
    col: int
    hvar: int
    vvar: int
    group: int
    entered: str | None  # direction used to reach this panel


@dataclass(frozen=True)
class Placed1D:
    """A 1D strip: axis label, shared-variate connector or group separator."""

    gap: tuple  # ("h", row, col) strip above cell row / ("v", row, col) strip left of col
    role: str  # "axis" | "connector" | "separator"
    labels: tuple[str, ...]
    direction: str | None = None  # travel direction, for arrow connectors


@dataclass(frozen=True)
class LayoutGrid:
    cells_2d: tuple[Placed2D, ...]
    cells_1d: tuple[Placed1D, ...]
    n_rows: int
    n_cols: int


def default_zigzag(n2d: int, width: int = 8) -> DirectionSeq:
    """Boustrophedon zigzag directions for ``n2d`` panels.

    Panels weave across two-row bands (right of the first, below the
    second, right, above, ...); at the column limit the pattern descends
    one row and reverses.  Returns n2d - 1 directions.
    """
    dirs, _ = _zigzag(n2d, width)
    return dirs


def zigzag_cells(n2d: int, width: int = 8) -> list[tuple[int, int]]:
    """Grid cells visited by the default zigzag (first cell is (0, 0))."""
    _, cells = _zigzag(n2d, width)
    return cells


def _zigzag(n2d: int, width: int) -> tuple[DirectionSeq, list[tuple[int, int]]]:
    if n2d < 1:
        raise ValueError("n2d must be at least 1")
    if width < 2:
        raise ValueError("width must be at least 2")
    r, c = 0, 0
    band_top = 0
    hdir = 1
    next_kind = "h"
    dirs: DirectionSeq = []
    cells = [(0, 0)]
    while len(cells) < n2d:
        at_edge = not (0 <= c + hdir < width)
        if r == band_top + 1 and at_edge:
            # Bottom of the band at the travel edge: descend and reverse.
            dirs.append("d")
            band_top += 2
            r = band_top
            hdir = -hdir
            next_kind = "h"
        elif next_kind == "h":
            if at_edge:
                raise RuntimeError("zigzag internal error: blocked at top edge")
            c += hdir
            dirs.append("r" if hdir > 0 else "l")
            next_kind = "v"
        else:
            if r == band_top:
                r += 1
                dirs.append("d")
            else:
                r -= 1
                dirs.append("u")
            next_kind = "h"
        cells.append((r, c))
    return dirs, cells


def layout(
    path: Zenpath,
    dirs: DirectionSeq | None = None,
    width: int = 8,
    var_names=None,
) -> LayoutGrid:
    """Place a zenpath's panels on the occupancy grid.

    Consecutive same-group panels get a 1D connector strip naming the
    shared variate; group boundaries get a separator strip and no shared
    axis.  A panel entered sideways keeps its predecessor's vertical
    variate; a panel entered vertically keeps the horizontal one.
    """
    n2d = path.n_panels
    if dirs is None:
        dirs = default_zigzag(n2d, width)
    if len(dirs) != n2d - 1:
        raise ValueError(f"need {n2d - 1} directions for {n2d} panels, got {len(dirs)}")
    for step, dd in enumerate(dirs, start=2):
        if dd not in _DELTA:
            raise ValueError(f"unknown direction {dd!r} at step {step}")

    def name(v: int) -> str:
        if var_names is not None:
            return str(var_names[v])
        return f"V{v + 1}"

    cells_2d: list[Placed2D] = []
    one_d: dict[tuple, Placed1D] = {}
    occupied: set[tuple[int, int]] = set()
    r, c = 0, 0
    k = 0  # panel counter across groups

    def gap_between(a: tuple[int, int], b: tuple[int, int]) -> tuple:
        (r1, c1), (r2, c2) = a, b
        if r1 == r2:
            return ("v", r1, max(c1, c2))
        return ("h", max(r1, r2), c1)

    def add_axis_labels(row: int, col: int, hvar: int, vvar: int):
        # Horizontal-axis label below, vertical-axis label to the left;
        # silently skipped when the strip already holds a connector.
        for gap, label in ((("h", row + 1, col), name(hvar)), (("v", row, col), name(vvar))):
            if gap not in one_d:
                one_d[gap] = Placed1D(gap=gap, role="axis", labels=(label,))

    for gi, group in enumerate(path.groups):
        for pi in range(len(group) - 1):
            va, vb = group[pi], group[pi + 1]
            if k == 0:
                cells_2d.append(Placed2D(row=0, col=0, hvar=va, vvar=vb, group=gi, entered=None))
                occupied.add((0, 0))
                add_axis_labels(0, 0, va, vb)
                k += 1
                continue
            direction = dirs[k - 1]
            dr, dc = _DELTA[direction]
            prev_cell = (r, c)
            r, c = r + dr, c + dc
            if (r, c) in occupied:
                raise ValueError(f"layout collision at step {k + 1}: cell ({r}, {c}) occupied")
            occupied.add((r, c))
            gap = gap_between(prev_cell, (r, c))
            if pi == 0:
                # New group: separator strip, fresh axis orientation.
                prev_last = path.groups[gi - 1][-1]
                one_d[gap] = Placed1D(
                    gap=gap, role="separator", labels=(name(prev_last), name(va))
                )
                cells_2d.append(Placed2D(row=r, col=c, hvar=va, vvar=vb, group=gi, entered=direction))
                add_axis_labels(r, c, va, vb)
            else:
                if direction in ("l", "r"):
                    hvar, vvar = vb, va  # shared variate stays vertical
                else:
                    hvar, vvar = va, vb  # shared variate stays horizontal
                one_d[gap] = Placed1D(
                    gap=gap, role="connector", labels=(name(va),), direction=direction
                )
                cells_2d.append(Placed2D(row=r, col=c, hvar=hvar, vvar=vvar, group=gi, entered=direction))
            k += 1
        if gi == 0 and len(cells_2d) == 1:
            pass
    rows = [p.row for p in cells_2d]
    cols = [p.col for p in cells_2d]
    rmin, cmin = min(rows), min(cols)
    if rmin != 0 or cmin != 0:
        # Normalize so the grid starts at (0, 0); gaps shift alongside.
        cells_2d = [
            Placed2D(p.row - rmin, p.col - cmin, p.hvar, p.vvar, p.group, p.entered)
            for p in cells_2d
        ]
        one_d = {
            (axis, rr - rmin, cc - cmin): Placed1D(
                (axis, rr - rmin, cc - cmin), cell.role, cell.labels, cell.direction
            )
            for (axis, rr, cc), cell in one_d.items()
        }
    return LayoutGrid(
        cells_2d=tuple(cells_2d),
        cells_1d=tuple(one_d[g] for g in sorted(one_d)),
        n_rows=max(p.row for p in cells_2d) + 1,
        n_cols=max(p.col for p in cells_2d) + 1,
    )


# ---------------------------------------------------------------------------
# Panel constructors
# ---------------------------------------------------------------------------


def scatter_panel(u, v, style: dict | None = None) -> PanelSpec:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("scatter coordinates must have equal length")
    return PanelSpec("scatter", {"u": u, "v": v}, style or {})


def acf_panel(values, band: float, style: dict | None = None) -> PanelSpec:
    values = np.asarray(values, dtype=float)
    return PanelSpec("acf", {"values": values, "band": float(band)}, style or {})


def qq_panel(sample, nu_hat: float, envelope: QQEnvelope | None = None, style: dict | None = None) -> PanelSpec:
    sample = np.sort(np.asarray(sample, dtype=float))
    if envelope is not None and envelope.n != sample.size:
        raise ValueError("envelope size does not match the sample")
    return PanelSpec("qq", {"sample": sample, "nu_hat": float(nu_hat), "envelope": envelope}, style or {})


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def render(grid: LayoutGrid, panels: list[PanelSpec], style: dict | None = None) -> str:
    """Render the laid-out panels into one standalone SVG document."""
    st = dict(DEFAULT_STYLE)
    if style:
        st.update(style)
    if len(panels) != len(grid.cells_2d):
        raise ValueError(f"need one PanelSpec per 2D cell: {len(grid.cells_2d)} cells, {len(panels)} specs")

    size = float(st["panel_size"])
    gap = size * float(st["gap_frac"])
    pitch = size + gap
    margin = gap
    total_w = margin + grid.n_cols * pitch + margin - gap if grid.cells_2d else 2 * margin
    total_h = margin + grid.n_rows * pitch + margin - gap if grid.cells_2d else 2 * margin

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(total_w)}" height="{_fmt(total_h)}" '
        f'viewBox="0 0 {_fmt(total_w)} {_fmt(total_h)}">',
        f'<rect x="0" y="0" width="{_fmt(total_w)}" height="{_fmt(total_h)}" fill="#ffffff"/>',
    ]

    def origin(row: int, col: int) -> tuple[float, float]:
        return margin + col * pitch, margin + row * pitch

    for cell, spec in zip(grid.cells_2d, panels):
        x0, y0 = origin(cell.row, cell.col)
        out.append(_render_panel(spec, x0, y0, size, st))

    for strip in grid.cells_1d:
        out.append(_render_strip(strip, origin, size, gap, st))

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _render_panel(spec: PanelSpec, x0: float, y0: float, size: float, st: dict) -> str:
    pst = dict(st)
    pst.update(spec.style)
    parts = [
        f'<g transform="translate({_fmt(x0)},{_fmt(y0)})">',
        f'<rect x="0" y="0" width="{_fmt(size)}" height="{_fmt(size)}" '
        f'fill="none" stroke="{pst["frame_color"]}" stroke-width="0.5"/>',
    ]
    if spec.kind == "scatter":
        parts.append(_scatter_body(spec.data, size, pst))
    elif spec.kind == "acf":
        parts.append(_acf_body(spec.data, size, pst))
    elif spec.kind == "qq":
        parts.append(_qq_body(spec.data, size, pst))
    elif spec.kind == "label":
        parts.append(_text(size / 2, size / 2, str(spec.data.get("text", "")), pst))
    elif spec.kind == "arrow":
        parts.append(_arrow_body(spec.data.get("direction", "d"), size / 2, size / 2, size * 0.2, pst))
    parts.append("</g>")
    return "".join(parts)


def _scatter_body(data: dict, size: float, st: dict) -> str:
    u = data["u"]
    v = data["v"]
    r = float(st["point_radius_frac"]) * size
    op = float(st["point_opacity"])
    color = st["point_color"]
    pts = []
    for ui, vi in zip(u, v):
        cx = ui * size
        cy = (1.0 - vi) * size  # data grows upward, SVG grows downward
        pts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
            f'fill="{color}" fill-opacity="{_fmt(op)}"/>'
        )
    return "".join(pts)


def _acf_body(data: dict, size: float, st: dict) -> str:
    vals = data["values"]
    band = data["band"]
    n = len(vals)
    # y in [-1, 1] maps onto the panel; lag bars rise from the zero line.
    def ymap(y: float) -> float:
        return (1.0 - (y + 1.0) / 2.0) * size

    parts = [
        f'<line x1="0" y1="{_fmt(ymap(0.0))}" x2="{_fmt(size)}" y2="{_fmt(ymap(0.0))}" '
        f'stroke="{st["stroke_color"]}" stroke-width="0.5"/>'
    ]
    for yb in (band, -band):
        parts.append(
            f'<line x1="0" y1="{_fmt(ymap(yb))}" x2="{_fmt(size)}" y2="{_fmt(ymap(yb))}" '
            f'stroke="{st["band_color"]}" stroke-width="0.5" stroke-dasharray="3,2"/>'
        )
    for k, v in enumerate(vals):
        x = (k + 0.5) / n * size
        vc = min(max(float(v), -1.0), 1.0)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_fmt(ymap(0.0))}" x2="{_fmt(x)}" y2="{_fmt(ymap(vc))}" '
            f'stroke="{st["stroke_color"]}" stroke-width="1"/>'
        )
    return "".join(parts)


def _qq_body(data: dict, size: float, st: dict) -> str:
    sample = data["sample"]
    nu = data["nu_hat"]
    env: QQEnvelope | None = data["envelope"]
    n = sample.size
    theo = scaled_t_quantile((np.arange(1, n + 1)) / (n + 1.0), nu)
    ys = [sample]
    if env is not None:
        ys += [env.lo, env.hi]
    lo = min(float(np.min(theo)), min(float(np.min(y)) for y in ys))
    hi = max(float(np.max(theo)), max(float(np.max(y)) for y in ys))
    span = hi - lo if hi > lo else 1.0

    def xmap(v: float) -> float:
        return (v - lo) / span * size

    def ymap(v: float) -> float:
        return (1.0 - (v - lo) / span) * size

    parts = []
    if env is not None:
        # Lightest (range) first so darker central bands draw on top.
        layers = [(env.lo, env.hi, st["envelope_colors"][3])]
        for lev, color in zip(sorted(env.levels, reverse=True), st["envelope_colors"][2::-1]):
            blo, bhi = env.bands[lev]
            layers.append((blo, bhi, color))
        for blo, bhi, color in layers:
            fwd = [f"{_fmt(xmap(t))},{_fmt(ymap(b))}" for t, b in zip(theo, blo)]
            rev = [f"{_fmt(xmap(t))},{_fmt(ymap(b))}" for t, b in zip(theo[::-1], bhi[::-1])]
            parts.append(f'<polygon points="{" ".join(fwd + rev)}" fill="{color}" stroke="none"/>')
    # Line of exact agreement.
    parts.append(
        f'<line x1="{_fmt(xmap(lo))}" y1="{_fmt(ymap(lo))}" x2="{_fmt(xmap(hi))}" y2="{_fmt(ymap(hi))}" '
        f'stroke="{st["stroke_color"]}" stroke-width="0.4"/>'
    )
    r = float(st["point_radius_frac"]) * size
    for t, s in zip(theo, sample):
        parts.append(
            f'<circle cx="{_fmt(xmap(t))}" cy="{_fmt(ymap(s))}" r="{_fmt(r)}" '
            f'fill="{st["point_color"]}" fill-opacity="{_fmt(float(st["point_opacity"]))}"/>'
        )
    return "".join(parts)


def _text(x: float, y: float, text: str, st: dict, rotate: float | None = None) -> str:
    esc = text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    transform = f' transform="rotate({_fmt(rotate)} {_fmt(x)} {_fmt(y)})"' if rotate else ""
    return (
        f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="{st["font_family"]}" '
        f'font-size="{_fmt(float(st["font_size"]))}" text-anchor="middle" '
        f'dominant-baseline="middle"{transform}>{esc}</text>'
    )


def _arrow_body(direction: str, cx: float, cy: float, half: float, st: dict) -> str:
    # "V" marker opening along the travel direction.
    tips = {
        "d": [(-half, -half), (0.0, half), (half, -half)],
        "u": [(-half, half), (0.0, -half), (half, half)],
        "r": [(-half, -half), (half, 0.0), (-half, half)],
        "l": [(half, -half), (-half, 0.0), (half, half)],
    }[direction]
    pts = " ".join(f"{_fmt(cx + dx)},{_fmt(cy + dy)}" for dx, dy in tips)
    return f'<polyline points="{pts}" fill="none" stroke="{st["stroke_color"]}" stroke-width="1"/>'


def _render_strip(strip: Placed1D, origin, size: float, gap: float, st: dict) -> str:
    axis, row, col = strip.gap
    if axis == "v":
        # Vertical strip left of (row, col): x span [x0 - gap, x0].
        x0, y0 = origin(row, col)
        cx, cy = x0 - gap / 2.0, y0 + size / 2.0
        rotate = -90.0
    else:
        # Horizontal strip above (row, col): y span [y0 - gap, y0].
        x0, y0 = origin(row, col)
        cx, cy = x0 + size / 2.0, y0 - gap / 2.0
        rotate = None
    if strip.role == "separator":
        a, b = strip.labels
        return _text(cx, cy, f"{a} | {b}", st, rotate)
    if strip.role == "connector" and st.get("connector") == "arrow" and strip.direction:
        return _arrow_body(strip.direction, cx, cy, gap * 0.3, st)
    return _text(cx, cy, strip.labels[0], st, rotate)
