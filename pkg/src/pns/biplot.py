"""Variable-effect paths swept through the inverse score map, and plotting.

For each original variable the first two score components are swept over
plus/minus two standard deviations (all other scores held at zero), the
swept points are mapped back to the ambient space and the fitted mean is
subtracted. Long paths mark variables that drive the leading scores. The
plot is an SVG document built directly, so output bytes depend only on the
inputs.
"""

from __future__ import annotations

import colorsys
import csv
import io as _io
from dataclasses import dataclass

import numpy as np

from .core import NestedSphereModel, _score_bounds, inverse_score_map
from .fastpns import FastPnsBasis, lift_exact

__all__ = ["BiplotPath", "backfit_paths", "rank_variables", "emit_biplot"]


@dataclass(frozen=True)
class BiplotPath:
    variable_index: int
    lambda_grid: np.ndarray  # in units of score standard deviations
    x_path: np.ndarray
    y_path: np.ndarray
    path_length: float
    clipped: bool = False


def _sweep(model, basis, column: int, values: np.ndarray) -> tuple[np.ndarray, bool]:
    """Back-fit score column sweeps to mean-centered ambient coordinates."""
    d = model.ambient_dim
    lo, hi = _score_bounds(model)
    lo_s = lo[column] * model.cumulative_radii[column]
    hi_s = hi[column] * model.cumulative_radii[column]
    clippedvals = np.clip(values, lo_s, hi_s)
    clipped = bool(np.any(clippedvals != values))
    scores = np.zeros((values.size, d))
    scores[:, column] = clippedvals
    points = inverse_score_map(scores, model)
    mean = model.pns_mean
    if basis is not None:
        points = lift_exact(points, basis)
        mean = lift_exact(model.pns_mean, basis)
    return points - mean[None, :], clipped


def backfit_paths(model: NestedSphereModel, scores, basis: FastPnsBasis | None = None,
                  grid_points: int = 41, pair: tuple[int, int] = (1, 2)) -> list[BiplotPath]:
    """One path per ambient variable from sweeping the score pair.

    The sweep covers -2..+2 standard deviations of each chosen score on a
    common odd-length grid (so zero is always a grid point); sweeps that
    would leave a score's validity interval are clipped at the boundary and
    flagged on the affected paths.
    """
    if grid_points < 3 or grid_points % 2 == 0:
        raise ValueError("grid_points must be odd and at least 3")
    sc = np.asarray(scores, dtype=float)
    d = model.ambient_dim
    if sc.ndim != 2 or sc.shape[1] != d:
        raise ValueError(f"scores must be n x {d}")
    ci, cj = pair[0] - 1, pair[1] - 1
    if not (0 <= ci < d and 0 <= cj < d and ci != cj):
        raise ValueError(f"invalid score pair {pair} for d = {d}")
    sd_x = float(np.std(sc[:, ci], ddof=1)) if sc.shape[0] > 1 else 0.0
    sd_y = float(np.std(sc[:, cj], ddof=1)) if sc.shape[0] > 1 else 0.0
    grid = np.linspace(-2.0, 2.0, grid_points)
    xs, clip_x = _sweep(model, basis, ci, grid * sd_x)
    ys, clip_y = _sweep(model, basis, cj, grid * sd_y)
    clipped = clip_x or clip_y
    n_var = xs.shape[1]
    paths = []
    for var in range(n_var):
        x = xs[:, var]
        y = ys[:, var]
        length = float(np.sum(np.hypot(np.diff(x), np.diff(y))))
        paths.append(
            BiplotPath(
                variable_index=var,
                lambda_grid=grid,
                x_path=x,
                y_path=y,
                path_length=length,
                clipped=clipped,
            )
        )
    return paths


def rank_variables(paths: list[BiplotPath], k: int) -> list[int]:
    """Indices of the k longest paths, descending; ties go to lower index."""
    if not paths:
        raise ValueError("no paths given")
    if not 1 <= k <= len(paths):
        raise ValueError(f"k must lie in 1..{len(paths)}")
    order = sorted(paths, key=lambda p: (-p.path_length, p.variable_index))
    return [p.variable_index for p in order[:k]]


# -- SVG / CSV emission -------------------------------------------------------

_PANEL = 400.0
_MARGIN = 55.0
_GAP = 70.0
_SYMBOLS = ("circle", "triangle", "plus", "cross", "diamond", "nabla")
_GROUP_COLORS = ("#000000", "#d62728", "#2ca02c", "#1f77b4", "#17becf", "#e377c2")


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _rainbow(i: int, n: int) -> str:
    hue = 0.85 * i / max(n - 1, 1)
    r, g, b = colorsys.hsv_to_rgb(hue, 0.9, 0.85)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


class _Frame:
    """Maps data coordinates to screen coordinates of one square panel."""

    def __init__(self, x0: float, xs, ys):
        span = max(float(np.abs(xs).max()), float(np.abs(ys).max()), 1e-12)
        self.scale = (_PANEL / 2.0) / (1.08 * span)
        self.cx = x0 + _PANEL / 2.0
        self.cy = _MARGIN + _PANEL / 2.0
        self.x0 = x0
        self.span = 1.08 * span

    def to_screen(self, x: float, y: float) -> tuple[str, str]:
        return _fmt(self.cx + x * self.scale), _fmt(self.cy - y * self.scale)


def _panel_frame(out, frame: _Frame, xlabel: str, ylabel: str, title: str):
    x0, y0 = frame.x0, _MARGIN
    out.append(
        f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(_PANEL)}" height="{_fmt(_PANEL)}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    out.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(frame.cy)}" x2="{_fmt(x0 + _PANEL)}" y2="{_fmt(frame.cy)}" '
        'stroke="#bbbbbb" stroke-width="0.7"/>'
    )
    out.append(
        f'<line x1="{_fmt(frame.cx)}" y1="{_fmt(y0)}" x2="{_fmt(frame.cx)}" y2="{_fmt(y0 + _PANEL)}" '
        'stroke="#bbbbbb" stroke-width="0.7"/>'
    )
    out.append(
        f'<text x="{_fmt(frame.cx)}" y="{_fmt(y0 + _PANEL + 34)}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">{xlabel}</text>'
    )
    out.append(
        f'<text x="{_fmt(x0 - 38)}" y="{_fmt(frame.cy)}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 {_fmt(x0 - 38)} {_fmt(frame.cy)})">{ylabel}</text>'
    )
    out.append(
        f'<text x="{_fmt(frame.cx)}" y="{_fmt(y0 - 14)}" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{title}</text>'
    )


def _arrowhead(out, pts_screen, color):
    """Filled triangle whose tip is exactly the last path point."""
    (x1, y1), (x2, y2) = pts_screen[-2], pts_screen[-1]
    tip = np.array([float(x2), float(y2)])
    prev = np.array([float(x1), float(y1)])
    direction = tip - prev
    nrm = np.linalg.norm(direction)
    if nrm < 1e-9:
        direction = np.array([1.0, 0.0])
        nrm = 1.0
    direction /= nrm
    ortho = np.array([-direction[1], direction[0]])
    base = tip - 8.0 * direction
    left = base + 3.2 * ortho
    right = base - 3.2 * ortho
    out.append(
        f'<polygon points="{x2},{y2} {_fmt(left[0])},{_fmt(left[1])} '
        f'{_fmt(right[0])},{_fmt(right[1])}" fill="{color}"/>'
    )


def _marker(out, sym: str, x: str, y: str, color: str):
    xf, yf = float(x), float(y)
    if sym == "circle":
        out.append(f'<circle cx="{x}" cy="{y}" r="3" fill="none" stroke="{color}" stroke-width="1.2"/>')
    elif sym == "triangle":
        out.append(
            f'<polygon points="{_fmt(xf)},{_fmt(yf - 3.6)} {_fmt(xf - 3.2)},{_fmt(yf + 2.6)} '
            f'{_fmt(xf + 3.2)},{_fmt(yf + 2.6)}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )
    elif sym == "plus":
        out.append(f'<path d="M {_fmt(xf - 3.5)} {y} H {_fmt(xf + 3.5)} M {x} {_fmt(yf - 3.5)} V {_fmt(yf + 3.5)}" stroke="{color}" stroke-width="1.2"/>')
    elif sym == "cross":
        out.append(f'<path d="M {_fmt(xf - 3)} {_fmt(yf - 3)} L {_fmt(xf + 3)} {_fmt(yf + 3)} M {_fmt(xf - 3)} {_fmt(yf + 3)} L {_fmt(xf + 3)} {_fmt(yf - 3)}" stroke="{color}" stroke-width="1.2"/>')
    elif sym == "diamond":
        out.append(
            f'<polygon points="{_fmt(xf)},{_fmt(yf - 4)} {_fmt(xf + 4)},{_fmt(yf)} '
            f'{_fmt(xf)},{_fmt(yf + 4)} {_fmt(xf - 4)},{_fmt(yf)}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )
    else:  # nabla
        out.append(
            f'<polygon points="{_fmt(xf)},{_fmt(yf + 3.6)} {_fmt(xf - 3.2)},{_fmt(yf - 2.6)} '
            f'{_fmt(xf + 3.2)},{_fmt(yf - 2.6)}" fill="none" stroke="{color}" stroke-width="1.2"/>'
        )


def emit_biplot(paths: list[BiplotPath], scores, labels=None,
                pair: tuple[int, int] = (1, 2)) -> tuple[str, str, str]:
    """Render the two-panel biplot; returns (svg, paths_csv, scores_csv).

    Left panel: one rainbow-colored back-fitted curve per variable with an
    arrowhead at the +2 sd end. Right panel: scatter of the two chosen
    scores, with a symbol per group when labels are given. The CSV
    companions hold the path coordinates (variable, lambda, x, y) and the
    plotted scores (row, pns1, pns2, label).
    """
    if not paths:
        raise ValueError("no paths to plot")
    sc = np.asarray(scores, dtype=float)
    ci, cj = pair[0] - 1, pair[1] - 1
    sx = sc[:, ci]
    sy = sc[:, cj]
    if labels is not None and len(labels) not in (0, sc.shape[0]):
        raise ValueError("labels length must match the number of score rows")
    if labels is not None and len(labels) == 0:
        labels = None

    width = 2 * _PANEL + 2 * _MARGIN + _GAP
    height = _PANEL + 2 * _MARGIN
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]

    all_x = np.concatenate([p.x_path for p in paths])
    all_y = np.concatenate([p.y_path for p in paths])
    left = _Frame(_MARGIN, all_x, all_y)
    _panel_frame(out, left, f"PNS{pair[0]} path", f"PNS{pair[1]} path", "Back-fitted variable paths")
    n_var = len(paths)
    for p in paths:
        color = _rainbow(p.variable_index, n_var)
        pts = [left.to_screen(x, y) for x, y in zip(p.x_path, p.y_path)]
        coords = " ".join(f"{x},{y}" for x, y in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.1" '
            f'data-variable="{p.variable_index}"/>'
        )
        _arrowhead(out, pts, color)

    right = _Frame(_MARGIN + _PANEL + _GAP, sx, sy)
    _panel_frame(out, right, f"PNS{pair[0]} score", f"PNS{pair[1]} score", "Scores")
    if labels is None:
        group_of = {None: 0}
        row_groups = [None] * sc.shape[0]
    else:
        uniq = sorted(set(labels))
        group_of = {g: i for i, g in enumerate(uniq)}
        row_groups = list(labels)
    for i in range(sc.shape[0]):
        g = group_of[row_groups[i]]
        x, y = right.to_screen(sx[i], sy[i])
        _marker(out, _SYMBOLS[g % len(_SYMBOLS)], x, y, _GROUP_COLORS[g % len(_GROUP_COLORS)])
    if labels is not None:
        for g, name in enumerate(sorted(group_of, key=group_of.get)):
            yleg = _MARGIN + 16 + 16 * g
            xleg = right.x0 + _PANEL - 90
            _marker(out, _SYMBOLS[g % len(_SYMBOLS)], _fmt(xleg), _fmt(yleg),
                    _GROUP_COLORS[g % len(_GROUP_COLORS)])
            out.append(
                f'<text x="{_fmt(xleg + 9)}" y="{_fmt(yleg + 4)}" font-size="11" '
                f'font-family="sans-serif">{name}</text>'
            )
    out.append("</svg>")
    svg = "\n".join(out) + "\n"

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["variable", "lambda", "x", "y"])
    for p in paths:
        for lam, x, y in zip(p.lambda_grid, p.x_path, p.y_path):
            writer.writerow([p.variable_index, repr(float(lam)), repr(float(x)), repr(float(y))])
    paths_csv = buf.getvalue()

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", f"pns{pair[0]}", f"pns{pair[1]}", "label"])
    for i in range(sc.shape[0]):
        writer.writerow([i, repr(float(sx[i])), repr(float(sy[i])),
                         "" if labels is None else labels[i]])
    scores_csv = buf.getvalue()
    return svg, paths_csv, scores_csv
