"""CSV result tables and minimal SVG charts drawn from them."""
from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence, Type, TypeVar, Union
from xml.sax.saxutils import escape

T = TypeVar("T")


@dataclass(frozen=True)
class ResultRow:
    scheduler: str
    workload: str
    qos_level: str
    bandwidth: float
    seed: int
    sla_rate: float
    misses: int
    energy_pj: float
    makespan: float
    runtime_ms: Optional[float] = None


@dataclass(frozen=True)
class SweepRow:
    scheduler: str
    workload: str
    bandwidth: float
    seeds: int
    sla_rate: float
    normalized_sla: float


@dataclass(frozen=True)
class OverheadRow:
    hidden: int
    period: int
    invocations: int
    policy_macs: int
    policy_energy_pj: float
    workload_energy_pj: float
    overhead_percent: float


@dataclass(frozen=True)
class CurveRow:
    episode: int
    mean_reward: float
    eval_sla_rate: Optional[float]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, typ):
    opt = "Optional" in str(typ)
    if text == "" and opt:
        return None
    base = str(typ).replace("Optional[", "").rstrip("]")
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    return text


def dumps_rows(rows: Iterable, cls: Type[T]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f.name for f in fields(cls)])
    for row in rows:
        w.writerow([_fmt(v) for v in astuple(row)])
    return buf.getvalue()


def loads_rows(text: str, cls: Type[T]) -> list[T]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    names = [f.name for f in fields(cls)]
    if header != names:
        raise ValueError(f"unexpected CSV header {header}; expected {names}")
    out = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(names):
            raise ValueError(f"line {lineno}: expected {len(names)} fields, got {len(rec)}")
        out.append(cls(*(_parse(v, f.type) for v, f in zip(rec, fields(cls)))))
    return out


def write_rows(path: Union[str, Path], rows: Iterable, cls: Type[T]) -> None:
    Path(path).write_text(dumps_rows(rows, cls), encoding="utf-8")


def read_rows(path: Union[str, Path], cls: Type[T]) -> list[T]:
    return loads_rows(Path(path).read_text(encoding="utf-8"), cls)


# -- SVG ---------------------------------------------------------------------------

PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7")
WIDTH, HEIGHT = 640, 360
LEFT, RIGHT, TOP, BOTTOM = 60, 150, 30, 50


def _frame(title: str, ylabel: str, ymax: float) -> list[str]:
    plot_h = HEIGHT - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{WIDTH - RIGHT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>',
        f'<text x="14" y="{TOP + plot_h / 2}" transform="rotate(-90 14 {TOP + plot_h / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]
    for k in range(5):
        v = ymax * k / 4
        y = HEIGHT - BOTTOM - plot_h * k / 4
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    return out


def _legend(names: Sequence[str]) -> list[str]:
    out = []
    for k, name in enumerate(names):
        y = TOP + 16 * k
        x = WIDTH - RIGHT + 12
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<rect x="{x}" y="{y}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{x + 14}" y="{y + 9}">{escape(name)}</text>')
    return out


def bar_chart_svg(groups: Sequence[str], series: Sequence[str], values: dict, title: str, ylabel: str) -> str:
    """Grouped bars; values[(group, series)] -> height. Each bar carries its value in data-value."""
    ymax = max([1.0] + [v for v in values.values() if v is not None])
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    out = _frame(title, ylabel, ymax)
    gw = plot_w / max(1, len(groups))
    bw = gw * 0.8 / max(1, len(series))
    for gi, g in enumerate(groups):
        x0 = LEFT + gi * gw + gw * 0.1
        for si, s in enumerate(series):
            v = values.get((g, s))
            if v is None:
                continue
            hgt = plot_h * v / ymax
            out.append(
                f'<rect x="{x0 + si * bw:.2f}" y="{HEIGHT - BOTTOM - hgt:.2f}" width="{bw:.2f}" height="{hgt:.2f}" '
                f'fill="{PALETTE[si % len(PALETTE)]}" data-group="{escape(g)}" data-series="{escape(s)}" '
                f'data-value="{v!r}"/>'
            )
        out.append(f'<text x="{LEFT + gi * gw + gw / 2:.2f}" y="{HEIGHT - BOTTOM + 16}" '
                   f'text-anchor="middle">{escape(g)}</text>')
    out += _legend(series)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart_svg(xs: Sequence[float], series: dict, title: str, ylabel: str, xlabel: str) -> str:
    """One polyline per series; series[name] is a list of y values aligned with xs."""
    ymax = max([1.0] + [v for ys in series.values() for v in ys])
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM
    out = _frame(title, ylabel, ymax)
    n = len(xs)

    def px(i: int) -> float:
        return LEFT + (plot_w * (i + 0.5) / n if n else 0)

    for i, x in enumerate(xs):
        out.append(f'<text x="{px(i):.2f}" y="{HEIGHT - BOTTOM + 16}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    for k, (name, ys) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(i):.2f},{HEIGHT - BOTTOM - plot_h * y / ymax:.2f}" for i, y in enumerate(ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2" '
                   f'data-series="{escape(name)}"/>')
        for i, y in enumerate(ys):
            out.append(f'<circle cx="{px(i):.2f}" cy="{HEIGHT - BOTTOM - plot_h * y / ymax:.2f}" r="3" '
                       f'fill="{color}" data-series="{escape(name)}" data-value="{y!r}"/>')
    out += _legend(list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"
