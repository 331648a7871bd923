"""
Static PNG figures: episode trajectories, learning curves and payoff tables.

Drawing is aliasing-free (no anti-aliasing, integer coordinates), so the same
input always yields the same bytes.
"""
from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image, ImageDraw

from .analysis import NashResult, PayoffMatrix
from .gridworld import MOVE_DELTAS, Edge, Move
from .harness import EpisodeRecord, read_metrics_csv
from .trajectory import ParseError, TrajectoryFile, read_trajectory_csv

logger = logging.getLogger(__name__)

Color = Tuple[int, int, int]

CELL = 24
MARGIN = 24
BACKGROUND: Color = (255, 255, 255)
GRID: Color = (210, 210, 210)
INK: Color = (40, 40, 40)
AGENT_COLORS: Tuple[Color, Color] = ((200, 30, 30), (30, 60, 200))
TARGET_COLORS: Tuple[Color, Color] = ((245, 170, 170), (170, 185, 245))
SPAWN_COLORS: Tuple[Color, Color] = ((120, 0, 0), (0, 20, 120))


def _center(cell: Tuple[int, int]) -> Tuple[int, int]:
    return (MARGIN + cell[0] * CELL + CELL // 2, MARGIN + cell[1] * CELL + CELL // 2)


def _arrow(
    draw: ImageDraw.ImageDraw,
    start: Tuple[int, int],
    delta: Tuple[int, int],
    length: int,
    color: Color,
) -> None:
    "Shaft plus triangular head along a unit grid direction."
    dx, dy = delta
    tip = (start[0] + dx * length, start[1] + dy * length)
    draw.line([start, tip], fill=color, width=2)
    head = max(length // 3, 3)
    back = (tip[0] - dx * head, tip[1] - dy * head)
    # (dy, -dx) is perpendicular to the shaft.
    side = (dy * head // 2, -dx * head // 2)
    draw.polygon(
        [tip, (back[0] + side[0], back[1] + side[1]), (back[0] - side[0], back[1] - side[1])],
        fill=color,
    )


def _edge_band(edge: Edge, width: int, height: int) -> Tuple[int, int, int, int]:
    "Strip just outside the grid along `edge`."
    x0, y0 = MARGIN, MARGIN
    x1, y1 = MARGIN + width * CELL, MARGIN + height * CELL
    band = MARGIN // 3
    if edge is Edge.NORTH:
        return (x0, y0 - band, x1 - 1, y0 - 1)
    if edge is Edge.SOUTH:
        return (x0, y1, x1 - 1, y1 + band - 1)
    if edge is Edge.WEST:
        return (x0 - band, y0, x0 - 1, y1 - 1)
    return (x1, y0, x1 + band - 1, y1 - 1)


def render_trajectory(traj: TrajectoryFile) -> Image.Image:
    """
    Grid, both agents' target edges, spawn markers and one arrow per move.
    A `STAY` is drawn as a small ring on the waiting cell.
    """
    w, h = traj.width, traj.height
    image = Image.new("RGB", (w * CELL + 2 * MARGIN, h * CELL + 2 * MARGIN), BACKGROUND)
    draw = ImageDraw.Draw(image)
    for i in range(w + 1):
        x = MARGIN + i * CELL
        draw.line([(x, MARGIN), (x, MARGIN + h * CELL)], fill=GRID)
    for j in range(h + 1):
        y = MARGIN + j * CELL
        draw.line([(MARGIN, y), (MARGIN + w * CELL, y)], fill=GRID)

    for agent, edge in enumerate(traj.targets):
        draw.rectangle(_edge_band(edge, w, h), fill=TARGET_COLORS[agent])

    for agent in range(2):
        spawn = traj.rows[0].cells[agent]
        if spawn is None:
            continue
        cx, cy = _center(spawn)
        r = CELL // 3
        draw.rectangle((cx - r, cy - r, cx + r, cy + r), outline=SPAWN_COLORS[agent], width=2)

    for row in traj.rows:
        for agent in range(2):
            cell = row.cells[agent]
            if cell is None:
                continue
            color = AGENT_COLORS[agent]
            start = _center(cell)
            move = row.moves[agent]
            if move is Move.STAY:
                r = CELL // 6
                x, y = start
                draw.ellipse((x - r, y - r, x + r, y + r), outline=color)
            else:
                _arrow(draw, start, MOVE_DELTAS[move], CELL * 3 // 4, color)
    return image


def render_curves(
    records: Sequence[EpisodeRecord], width: int = 640, height: int = 320
) -> Image.Image:
    "Per-episode returns of both agents against episode index, with a zero line."
    if not records:
        raise ValueError("no episode records to plot")
    image = Image.new("RGB", (width, height), BACKGROUND)
    draw = ImageDraw.Draw(image)
    returns = np.array([r.returns for r in records], dtype=np.float64)
    lo = min(float(returns.min()), 0.0)
    hi = max(float(returns.max()), 0.0)
    if hi - lo < 1e-9:
        hi, lo = hi + 1.0, lo - 1.0
    left, right, top, bottom = MARGIN, width - MARGIN, MARGIN, height - MARGIN
    n = len(records)

    def to_px(k: int, value: float) -> Tuple[int, int]:
        x = left + (k * (right - left)) // max(n - 1, 1)
        y = bottom - int(round((value - lo) / (hi - lo) * (bottom - top)))
        return (x, y)

    draw.rectangle((left, top, right, bottom), outline=INK)
    zero = to_px(0, 0.0)[1]
    draw.line([(left, zero), (right, zero)], fill=GRID)
    for agent in range(2):
        points = [to_px(k, float(returns[k, agent])) for k in range(n)]
        if len(points) == 1:
            draw.point(points, fill=AGENT_COLORS[agent])
        else:
            draw.line(points, fill=AGENT_COLORS[agent], width=1)
    draw.text((left, 4), f"returns, episodes 1..{records[-1].episode}", fill=INK)
    draw.text((left, bottom + 4), f"[{lo:.2f}, {hi:.2f}]", fill=INK)
    return image


def render_payoff(matrix: PayoffMatrix, nash: NashResult, cell: int = 140) -> Image.Image:
    """
    2 x 2 bimatrix: rows are agent 0's strategy, columns agent 1's. Equilibria
    get a heavy border; arrows show strictly improving unilateral deviations.
    """
    size = 2 * cell + 2 * MARGIN
    image = Image.new("RGB", (size, size), BACKGROUND)
    draw = ImageDraw.Draw(image)
    names = [s.value for s in matrix.strategies]
    for k, name in enumerate(names):
        draw.text((MARGIN + k * cell + 8, 6), name, fill=AGENT_COLORS[1])
        draw.text((2, MARGIN + k * cell + cell // 2), name[:2], fill=AGENT_COLORS[0])
    for i in range(2):
        for j in range(2):
            x0, y0 = MARGIN + j * cell, MARGIN + i * cell
            box = (x0, y0, x0 + cell, y0 + cell)
            border = 4 if (i, j) in nash.pure_equilibria else 1
            draw.rectangle(box, outline=INK, width=border)
            a, b = matrix.cell(i, j)
            draw.text((box[0] + 10, box[1] + 10), f"{a:+.3f}", fill=AGENT_COLORS[0])
            draw.text((box[0] + 10, box[1] + 26), f"{b:+.3f}", fill=AGENT_COLORS[1])
    for arrow in nash.arrows:
        (si, sj), (ti, tj) = arrow.source, arrow.target
        start = (MARGIN + sj * cell + cell // 2, MARGIN + si * cell + cell // 2)
        delta = (tj - sj, ti - si)
        # Player 0 arrows sit right of center, player 1 arrows above it.
        shift = 10 if arrow.player == 0 else -10
        start = (start[0] + shift * abs(delta[1]), start[1] + shift * abs(delta[0]))
        _arrow(draw, start, delta, cell * 2 // 3, AGENT_COLORS[arrow.player])
    return image


def png_bytes(image: Image.Image) -> bytes:
    buf = io.BytesIO()
    image.save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def write_png(image: Image.Image, path: Union[str, Path]) -> None:
    data = png_bytes(image)
    Path(path).write_bytes(data)


def plot_file(source: Union[str, Path], out: Union[str, Path]) -> str:
    """
    Render a trajectory CSV (first line `# width=..`) or a `metrics.csv`
    (first line `episode,..`) to `out`. Nothing is written if parsing fails.

    Returns:
        `"trajectory"` or `"curves"`.

    Raises:
        ParseError : unreadable or malformed input.
    """
    try:
        first: Optional[str] = next(iter(Path(source).read_text().splitlines()), None)
    except OSError as e:
        raise ParseError(source, 0, e.strerror or str(e)) from e
    if first is None:
        raise ParseError(source, 1, "empty file")
    if first.startswith("#"):
        kind, image = "trajectory", render_trajectory(read_trajectory_csv(source))
    elif first.startswith("episode,"):
        kind, image = "curves", render_curves(read_metrics_csv(source))
    else:
        raise ParseError(source, 1, "neither a trajectory nor a metrics file")
    write_png(image, out)
    logger.info("wrote %s plot to %s", kind, out)
    return kind

