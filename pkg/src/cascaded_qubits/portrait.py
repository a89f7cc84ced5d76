"""Phase portraits: the two correlated planes drawn as unit circles.

The correlated (E+) and anti-correlated (E-) planes are rendered as unit
disks with the Bell states marked on dotted diameters.  Between jumps the
unnormalized state spirals into the interior (its norm is the survival
probability); each click draws a chord to the renormalized post-jump
point on the circumference of the other circle.  Coordinates are the real
amplitude pairs (c00, c11) in E+ and (c01, c10) in E-; with real drive
ratios the conditional amplitudes stay real for the initial states used
here, and any residual imaginary part is dropped from the drawing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .model import ModelOperators
from .trajectory import TrajectoryRecord

PLANE_PLUS = 1
PLANE_MINUS = -1

_COMPONENT_FLOOR = 1e-7  # plane projections smaller than this are not drawn


@dataclass(frozen=True)
class PathSegment:
    plane: int                # PLANE_PLUS or PLANE_MINUS
    interval: int             # which between-jump interval produced it
    times: np.ndarray
    points: np.ndarray        # (n, 2) real coordinates in the unit disk


@dataclass(frozen=True)
class JumpChord:
    time: float
    detector: int
    from_plane: int
    from_point: tuple[float, float]
    to_plane: int
    to_point: tuple[float, float]


@dataclass(frozen=True)
class PortraitData:
    segments: list[PathSegment]
    chords: list[JumpChord]


def _plane_points(states: np.ndarray) -> dict[int, np.ndarray]:
    """Real (x, y) coordinates of both plane projections, rows per state."""
    plus = np.column_stack(
        [states[:, model.IDX_00].real, states[:, model.IDX_11].real])
    minus = np.column_stack(
        [states[:, model.IDX_01].real, states[:, model.IDX_10].real])
    return {PLANE_PLUS: plus, PLANE_MINUS: minus}


def _dominant_plane(state: np.ndarray) -> int:
    w_plus = abs(state[model.IDX_00]) ** 2 + abs(state[model.IDX_11]) ** 2
    w_minus = abs(state[model.IDX_01]) ** 2 + abs(state[model.IDX_10]) ** 2
    return PLANE_PLUS if w_plus >= w_minus else PLANE_MINUS


def _point_in(state: np.ndarray, plane: int) -> tuple[float, float]:
    if plane == PLANE_PLUS:
        return (float(state[model.IDX_00].real), float(state[model.IDX_11].real))
    return (float(state[model.IDX_01].real), float(state[model.IDX_10].real))


def build_portrait(record: TrajectoryRecord, ops: ModelOperators | None = None,
                   points_per_unit: float = 200.0,
                   max_points: int = 40_000) -> PortraitData:
    """Reconstruct the unnormalized between-jump paths of a record."""
    if ops is None:
        ops = model.build_operators(record.params)
    prop = ops.nojump_propagator

    starts = [(0.0, record.initial / np.linalg.norm(record.initial))]
    click_states = record.click_states()
    for event, state in zip(record.events, click_states):
        starts.append((event.time, state))
    boundaries = [e.time for e in record.events] + [record.t_end]

    total_span = max(record.t_end, 1e-12)
    step = max(1.0 / points_per_unit, total_span / max_points)

    segments: list[PathSegment] = []
    chords: list[JumpChord] = []
    for k, (t0, phi0) in enumerate(starts):
        t1 = boundaries[k]
        if t1 < t0:
            continue
        offsets = np.arange(0.0, max(t1 - t0, 0.0), step)
        offsets = np.append(offsets, t1 - t0)
        states = prop.apply_grid(phi0, offsets)
        for plane, pts in _plane_points(states).items():
            norms = np.hypot(pts[:, 0], pts[:, 1])
            if np.max(norms) < _COMPONENT_FLOOR:
                continue
            segments.append(PathSegment(
                plane=plane, interval=k, times=t0 + offsets, points=pts))
        if k < len(record.events):
            event = record.events[k]
            pre = states[-1]
            post = click_states[k]
            from_plane = _dominant_plane(pre)
            to_plane = _dominant_plane(post)
            chords.append(JumpChord(
                time=event.time,
                detector=event.detector,
                from_plane=from_plane,
                from_point=_point_in(pre, from_plane),
                to_plane=to_plane,
                to_point=_point_in(post, to_plane),
            ))
    return PortraitData(segments=segments, chords=chords)


def portrait_rows(data: PortraitData):
    """Flat rows (kind, index, plane, t, x, y) for CSV emission."""
    rows = []
    for i, seg in enumerate(data.segments):
        for t, (x, y) in zip(seg.times, seg.points):
            rows.append(("path", i, seg.plane, float(t), float(x), float(y)))
    for i, chord in enumerate(data.chords):
        rows.append(("chord", i, chord.from_plane, chord.time,
                     chord.from_point[0], chord.from_point[1]))
        rows.append(("chord", i, chord.to_plane, chord.time,
                     chord.to_point[0], chord.to_point[1]))
    return rows


# SVG geometry.
_W, _H, _R = 960, 540, 200
_CENTERS = {PLANE_PLUS: (250.0, 270.0), PLANE_MINUS: (710.0, 270.0)}
_PATH_COLORS = {PLANE_PLUS: "#1f6fb4", PLANE_MINUS: "#2c8c4e"}


def _pix(plane: int, x: float, y: float) -> tuple[float, float]:
    cx, cy = _CENTERS[plane]
    return (cx + x * _R, cy - y * _R)


def _fmt(v: float) -> str:
    return format(v, ".2f")


def render_svg(data: PortraitData, title: str = "") -> str:
    """Deterministic SVG drawing of a portrait."""
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_W // 2}" y="28" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>')
    diag = _R / np.sqrt(2.0)
    labels = {
        PLANE_PLUS: ("E+", [("Φ+", diag, diag), ("Φ−", diag, -diag)]),
        PLANE_MINUS: ("E−", [("Ψ+", diag, diag), ("Ψ−", diag, -diag)]),
    }
    for plane, (name, bells) in labels.items():
        cx, cy = _CENTERS[plane]
        out.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_R}" fill="none" '
            f'stroke="black" stroke-width="1.5"/>')
        for ddx, ddy in ((diag, diag), (diag, -diag)):
            out.append(
                f'<line x1="{_fmt(cx - ddx)}" y1="{_fmt(cy + ddy)}" '
                f'x2="{_fmt(cx + ddx)}" y2="{_fmt(cy - ddy)}" '
                f'stroke="gray" stroke-width="1" stroke-dasharray="3,4"/>')
        out.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy - _R - 14)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{name}</text>')
        for text, bx, by in bells:
            px, py = cx + bx + 10, cy - by
            out.append(
                f'<text x="{_fmt(px)}" y="{_fmt(py)}" font-family="sans-serif" '
                f'font-size="12" fill="gray">{text}</text>')
    for chord in data.chords:
        x1, y1 = _pix(chord.from_plane, *chord.from_point)
        x2, y2 = _pix(chord.to_plane, *chord.to_point)
        out.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="#c44024" stroke-width="0.8" stroke-dasharray="5,3"/>')
    for seg in data.segments:
        pts = " ".join(
            f"{_fmt(px)},{_fmt(py)}"
            for px, py in (_pix(seg.plane, x, y) for x, y in seg.points))
        out.append(
            f'<polyline points="{pts}" fill="none" '
            f'stroke="{_PATH_COLORS[seg.plane]}" stroke-width="1.2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
