"""Deterministic SVG emission for scatter layouts and rate bar charts."""

from __future__ import annotations

import os

import numpy as np

from ..errors import ValidationError

_PALETTE = (
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
)
_W, _H = 640.0, 480.0
_MARGIN = 40.0
_LEGEND_W = 130.0


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _group_names(groups) -> list[str]:
    return ["unlabeled" if g == "" else str(g) for g in groups]


def _scale(values: np.ndarray, lo_px: float, hi_px: float) -> np.ndarray:
    vmin, vmax = float(values.min()), float(values.max())
    if vmax == vmin:
        return np.full(len(values), 0.5 * (lo_px + hi_px))
    return lo_px + (values - vmin) / (vmax - vmin) * (hi_px - lo_px)


def _legend(names: list[str], x: float, y: float) -> list[str]:
    parts = []
    for rank, name in enumerate(names):
        color = _PALETTE[rank % len(_PALETTE)]
        row_y = y + 20.0 * rank
        parts.append(
            f'<rect class="legend-swatch" x="{_fmt(x)}" y="{_fmt(row_y)}" '
            f'width="12" height="12" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + 18.0)}" y="{_fmt(row_y + 10.0)}" '
            f'font-size="12" font-family="sans-serif">{name}</text>'
        )
    return parts


def emit_scatter(layout, groups, path: str, title: str = "") -> str:
    """One <circle> per point colored by group, plus a swatch legend."""
    coords = np.asarray(getattr(layout, "coordinates", layout), dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError("layout must provide [n, 2] coordinates")
    names = _group_names(groups)
    if len(names) != len(coords):
        raise ValidationError("grouping length must match the layout")

    unique = sorted(set(names))
    color_of = {name: _PALETTE[rank % len(_PALETTE)]
                for rank, name in enumerate(unique)}
    xs = _scale(coords[:, 0], _MARGIN, _W - _LEGEND_W - _MARGIN)
    ys = _scale(-coords[:, 1], _MARGIN, _H - _MARGIN)  # SVG y grows downward

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_W)}" '
        f'height="{_fmt(_H)}" viewBox="0 0 {_fmt(_W)} {_fmt(_H)}">'
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(_W / 2)}" y="24" text-anchor="middle" '
            f'font-size="14" font-family="sans-serif">{title}</text>'
        )
    for (px, py), name in zip(zip(xs, ys), names):
        parts.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" '
            f'fill="{color_of[name]}" fill-opacity="0.7"/>'
        )
    parts.extend(_legend(unique, _W - _LEGEND_W, _MARGIN))
    parts.append("</svg>")
    _write_text(path, "\n".join(parts) + "\n")
    return path


def emit_bars(names, heights, path: str, title: str = "",
              y_max: float | None = None) -> str:
    """One <rect class="bar"> per named value, y axis from 0."""
    heights = np.asarray(heights, dtype=np.float64)
    names = [str(n) for n in names]
    if len(names) != len(heights) or len(names) == 0:
        raise ValidationError("names and heights must align and be non-empty")
    if not np.isfinite(heights).all() or (heights < 0).any():
        raise ValidationError("bar heights must be finite and non-negative")
    top = float(y_max) if y_max is not None else max(1.0, float(heights.max()))

    plot_w = _W - 2 * _MARGIN
    plot_h = _H - 2 * _MARGIN - 20.0
    slot = plot_w / len(names)
    bar_w = slot * 0.7

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_W)}" '
        f'height="{_fmt(_H)}" viewBox="0 0 {_fmt(_W)} {_fmt(_H)}">'
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(_W / 2)}" y="24" text-anchor="middle" '
            f'font-size="14" font-family="sans-serif">{title}</text>'
        )
    base_y = _MARGIN + 20.0 + plot_h
    parts.append(
        f'<line x1="{_fmt(_MARGIN)}" y1="{_fmt(base_y)}" '
        f'x2="{_fmt(_W - _MARGIN)}" y2="{_fmt(base_y)}" stroke="#333"/>'
    )
    for rank, (name, height) in enumerate(zip(names, heights)):
        h_px = plot_h * min(height, top) / top
        x = _MARGIN + slot * rank + (slot - bar_w) / 2
        parts.append(
            f'<rect class="bar" x="{_fmt(x)}" y="{_fmt(base_y - h_px)}" '
            f'width="{_fmt(bar_w)}" height="{_fmt(h_px)}" '
            f'fill="{_PALETTE[0]}"/>'
        )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(base_y - h_px - 4.0)}" '
            f'text-anchor="middle" font-size="10" '
            f'font-family="sans-serif">{height:.2f}</text>'
        )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(base_y + 14.0)}" '
            f'text-anchor="middle" font-size="10" '
            f'font-family="sans-serif">{name}</text>'
        )
    parts.append("</svg>")
    _write_text(path, "\n".join(parts) + "\n")
    return path


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))
