"""Run CSV reading/writing and the static SVG report."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from html import escape
from typing import TextIO

import numpy as np

from gpopt.bo import BOHistory, feasible_mask
from gpopt.pareto import pareto_front

PROGRESS_COLUMN = "incumbent_or_hypervolume"
TIME_COLUMN = "elapsed_seconds"


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def fmt(value: float) -> str:
    """17 significant digits, so floats round-trip exactly."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def run_header(d: int, m: int, q: int) -> list[str]:
    return (
        ["iteration", "phase"]
        + [f"x_{i + 1}" for i in range(d)]
        + [f"y_{i + 1}" for i in range(m)]
        + [f"c_{i + 1}" for i in range(q)]
        + [PROGRESS_COLUMN, TIME_COLUMN]
    )


def write_run_csv(
    stream: TextIO, history: BOHistory, meta: dict, record_time: bool = False
) -> None:
    """Write one row per evaluation, preceded by ``#`` comment lines holding ``meta``.

    ``elapsed_seconds`` stays empty unless ``record_time`` is set, so that
    repeated runs produce identical bytes.
    """
    for key in sorted(meta):
        stream.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
    d = history.domain.dimension
    m = len(history.objective_senses)
    q = history.n_constraints
    stream.write(",".join(run_header(d, m, q)) + "\n")
    for r in history.records:
        cells = [str(r.iteration), r.phase]
        cells += [fmt(v) for v in r.x]
        cells += [fmt(v) for v in r.y]
        cells += [fmt(v) for v in r.c]
        cells.append(fmt(r.incumbent))
        cells.append(fmt(r.wall_time) if record_time else "")
        stream.write(",".join(cells) + "\n")


@dataclass
class RunTable:
    meta: dict
    iteration: np.ndarray
    phase: list[str]
    X: np.ndarray
    Y: np.ndarray
    C: np.ndarray
    progress: np.ndarray
    elapsed: np.ndarray  # NaN where the cell was left blank

    @property
    def n_objectives(self) -> int:
        return self.Y.shape[1]

    @property
    def pof_threshold(self) -> float:
        config = self.meta.get("config") or {}
        return float((config.get("acquisition") or {}).get("pof_threshold", 0.0))

    @property
    def senses(self) -> list[str]:
        return list(self.meta.get("senses") or ["min"] * self.n_objectives)


def _float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(line, f"column {column!r}: {text!r} is not a number") from None


def read_run_csv(path) -> RunTable:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().split("\n")
    except UnicodeDecodeError:
        raise ParseError(1, "file is not UTF-8 text") from None
    except OSError as exc:
        raise ParseError(0, f"cannot read {path}: {exc.strerror or exc}") from None
    meta: dict = {}
    header = None
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                try:
                    meta[key.strip()] = json.loads(value)
                except json.JSONDecodeError:
                    meta[key.strip()] = value.strip()
            continue
        cells = line.split(",")
        if header is None:
            if cells[:2] != ["iteration", "phase"] or PROGRESS_COLUMN not in cells:
                raise ParseError(lineno, "not a run CSV header (expected 'iteration,phase,...')")
            header = cells
            continue
        if len(cells) != len(header):
            raise ParseError(lineno, f"expected {len(header)} fields, found {len(cells)}")
        rows.append((lineno, cells))
    if header is None:
        raise ParseError(max(len(lines), 1), "no header row found")
    if not rows:
        raise ParseError(len(lines), "no data rows")

    xcols = [i for i, h in enumerate(header) if h.startswith("x_")]
    ycols = [i for i, h in enumerate(header) if h.startswith("y_")]
    ccols = [i for i, h in enumerate(header) if h.startswith("c_")]
    pcol = header.index(PROGRESS_COLUMN)
    if not ycols:
        raise ParseError(1, "run CSV has no objective columns")
    iteration, phase, X, Y, C, progress, elapsed = [], [], [], [], [], [], []
    for lineno, cells in rows:
        try:
            iteration.append(int(cells[0]))
        except ValueError:
            raise ParseError(lineno, f"iteration {cells[0]!r} is not an integer") from None
        if cells[1] not in ("init", "bo"):
            raise ParseError(lineno, f"phase must be 'init' or 'bo', got {cells[1]!r}")
        phase.append(cells[1])
        X.append([_float(cells[i], lineno, header[i]) for i in xcols])
        Y.append([_float(cells[i], lineno, header[i]) for i in ycols])
        C.append([_float(cells[i], lineno, header[i]) for i in ccols])
        progress.append(_float(cells[pcol], lineno, PROGRESS_COLUMN))
        tcol = cells[-1] if header[-1] == TIME_COLUMN else ""
        elapsed.append(_float(tcol, lineno, TIME_COLUMN) if tcol else np.nan)
    n = len(rows)
    return RunTable(
        meta,
        np.array(iteration),
        phase,
        np.array(X, dtype=float).reshape(n, len(xcols)),
        np.array(Y, dtype=float).reshape(n, len(ycols)),
        np.array(C, dtype=float).reshape(n, len(ccols)),
        np.array(progress, dtype=float),
        np.array(elapsed, dtype=float),
    )


# --- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 640, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 50, 60


def _n(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str, xlim, ylim):
        self.parts: list[str] = []
        self.xlim = self._pad(xlim)
        self.ylim = self._pad(ylim)
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">'
        )
        self.parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
        self.parts.append(
            f'<text x="{WIDTH / 2}" y="25" text-anchor="middle" font-size="15">{escape(title)}</text>'
        )
        self._axes(xlabel, ylabel)

    @staticmethod
    def _pad(lim):
        lo, hi = float(lim[0]), float(lim[1])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            lo, hi = 0.0, 1.0
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def sx(self, v):
        lo, hi = self.xlim
        return LEFT + (v - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)

    def sy(self, v):
        lo, hi = self.ylim
        return HEIGHT - BOTTOM - (v - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM)

    def _axes(self, xlabel, ylabel):
        x0, x1 = LEFT, WIDTH - RIGHT
        y0, y1 = HEIGHT - BOTTOM, TOP
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for v in _ticks(*self.xlim):
            px = self.sx(v)
            self.parts.append(f'<line x1="{_n(px)}" y1="{y0}" x2="{_n(px)}" y2="{y0 + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{_n(px)}" y="{y0 + 18}" text-anchor="middle">{v:.3g}</text>')
        for v in _ticks(*self.ylim):
            py = self.sy(v)
            self.parts.append(f'<line x1="{x0 - 5}" y1="{_n(py)}" x2="{x0}" y2="{_n(py)}" stroke="black"/>')
            self.parts.append(f'<text x="{x0 - 8}" y="{_n(py + 4)}" text-anchor="end">{v:.3g}</text>')
        self.parts.append(
            f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>'
        )
        self.parts.append(
            f'<text x="20" y="{(y0 + y1) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 20 {(y0 + y1) / 2})">{escape(ylabel)}</text>'
        )

    def polyline(self, xs, ys, color, cls, width=1.5):
        pts = " ".join(f"{_n(self.sx(x))},{_n(self.sy(y))}" for x, y in zip(xs, ys))
        self.parts.append(
            f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'
        )

    def circle(self, x, y, color, cls, r=3.5):
        self.parts.append(
            f'<circle class="{cls}" cx="{_n(self.sx(x))}" cy="{_n(self.sy(y))}" r="{r}" fill="{color}"/>'
        )

    def note(self, text, cls="note"):
        self.parts.append(
            f'<text class="{cls}" x="{WIDTH / 2}" y="{HEIGHT / 2}" text-anchor="middle" '
            f'font-size="16" fill="#b00">{escape(text)}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def convergence_svg(table: RunTable) -> str:
    it = table.iteration.astype(float)
    inc = table.progress
    ok = np.isfinite(inc)
    name = table.meta.get("problem", "run")
    if not ok.any():
        canvas = _Canvas(f"{name}: incumbent", "iteration", "best feasible objective", (0, max(it.max(), 1)), (0, 1))
        canvas.note("no feasible samples")
        return canvas.render()
    canvas = _Canvas(
        f"{name}: incumbent",
        "iteration",
        "best feasible objective",
        (it.min(), it.max()),
        (inc[ok].min(), inc[ok].max()),
    )
    canvas.polyline(it[ok], inc[ok], "#1f77b4", "trace")
    for x, y, ph in zip(it[ok], inc[ok], np.array(table.phase)[ok]):
        canvas.circle(x, y, "#888" if ph == "init" else "#1f77b4", "incumbent")
    return canvas.render()


def pareto_svg(table: RunTable) -> str:
    name = table.meta.get("problem", "run")
    Y = table.Y
    feasible = feasible_mask(table.C, table.pof_threshold) if table.C.shape[1] else np.ones(len(Y), bool)
    if not feasible.any():
        canvas = _Canvas(f"{name}: feasible objectives", "y_1", "y_2", (Y[:, 0].min(), Y[:, 0].max()), (Y[:, 1].min(), Y[:, 1].max()))
        canvas.note("no feasible samples")
        return canvas.render()
    F = Y[feasible]
    signs = np.array([1.0 if s == "min" else -1.0 for s in table.senses])
    front = pareto_front(F * signs).points * signs
    canvas = _Canvas(
        f"{name}: feasible objectives",
        "y_1",
        "y_2",
        (F[:, 0].min(), F[:, 0].max()),
        (F[:, 1].min(), F[:, 1].max()),
    )
    for y in F:
        canvas.circle(y[0], y[1], "#9ecae1", "sample")
    order = np.argsort(front[:, 0], kind="stable")
    canvas.polyline(front[order, 0], front[order, 1], "#d62728", "front-line", width=1.0)
    for y in front[order]:
        canvas.circle(y[0], y[1], "#d62728", "front", r=4.5)
    return canvas.render()


def render_report(table: RunTable) -> str:
    return convergence_svg(table) if table.n_objectives == 1 else pareto_svg(table)
