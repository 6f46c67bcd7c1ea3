"""Delimited tables and self-contained SVG figures.

The SVG emitter is deliberately minimal and fully deterministic: identical
input produces byte-identical files, every series maps to exactly one
element with ``class="series"``, and predicted series render dashed so they
stand apart from measured ones. Figures are a test surface as much as a
viewing artifact.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .advisor import CostedPoint, ParetoResult, compute_cost
from .dataset import (
    AppInput,
    BenchmarkRecord,
    Dataset,
    VmCatalog,
    check_against_catalog,
    record_sort_key,
    scenario_key,
)
from .errors import NoDataError, ValidationError

PLOT_KINDS = ("time_vs_vms", "cost_vs_vms", "pareto")

VIEW_WIDTH = 800
VIEW_HEIGHT = 500
_MARGIN_LEFT = 80
_MARGIN_RIGHT = 180
_MARGIN_TOP = 50
_MARGIN_BOTTOM = 60

_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
)

TABLE_COLUMNS = (
    "app_name", "param_name", "param_value", "sku_name", "n_vms",
    "procs_per_vm", "exec_time_s", "cost_usd", "provenance", "method",
)


@dataclass(frozen=True)
class PlotSeries:
    """One labelled line or point set; dashed marks predicted data."""

    label: str
    points: tuple[tuple[float, float], ...]
    dashed: bool = False
    staircase: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple((float(x), float(y)) for x, y in self.points)
        )
        if not self.points:
            raise ValidationError(f"series '{self.label}' has no points")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    series: tuple[PlotSeries, ...]
    x_label: str
    y_label: str
    title: str
    x_log2: bool = False

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValidationError(f"plot kind must be one of {PLOT_KINDS}")
        object.__setattr__(self, "series", tuple(self.series))
        if not self.series:
            raise ValidationError("a plot needs at least one series")


# ---------------------------------------------------------------------------
# tables


def _record_row(record: BenchmarkRecord, catalog: VmCatalog | None, billing: str) -> list[str]:
    s = record.scenario
    cost = ""
    if catalog is not None:
        sku = check_against_catalog(s, catalog)
        cost = f"{compute_cost(record.exec_time_s, s.n_vms, sku, billing=billing):.6f}"
    return [
        s.input.app_name, s.input.param_name, repr(s.input.value), s.sku_name,
        str(s.n_vms), str(s.procs_per_vm), repr(record.exec_time_s), cost,
        record.provenance, record.method or "",
    ]


def _costed_row(point: CostedPoint, rank: str) -> list[str]:
    s = point.scenario
    return [
        s.input.app_name, s.input.param_name, repr(s.input.value), s.sku_name,
        str(s.n_vms), str(s.procs_per_vm), repr(point.exec_time_s),
        f"{point.cost:.6f}", point.provenance, "", rank,
    ]


def emit_table(
    data: Dataset | ParetoResult | Sequence[BenchmarkRecord],
    path: str | Path,
    *,
    catalog: VmCatalog | None = None,
    billing: str = "per-minute",
) -> Path:
    """Write a comma-separated table with a header row, canonically sorted.

    Datasets (or record sequences) produce the standard columns, with
    cost_usd filled when a catalog is supplied. Pareto results gain a
    ``pareto`` column flagging each row front or dominated.
    """
    path = Path(path)
    header = list(TABLE_COLUMNS)
    rows: list[list[str]]
    if isinstance(data, ParetoResult):
        header.append("pareto")
        tagged = [(p, "front") for p in data.front] + [(p, "dominated") for p in data.dominated]
        tagged.sort(key=lambda pr: (scenario_key(pr[0].scenario), pr[0].provenance))
        rows = [_costed_row(point, rank) for point, rank in tagged]
    else:
        records = data.records if isinstance(data, Dataset) else list(data)
        records = sorted(records, key=record_sort_key)
        rows = [_record_row(r, catalog, billing) for r in records]
    if not rows:
        raise ValidationError("nothing to write: input is empty")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# figures


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if lo == hi:
        pad = max(1.0, abs(lo) * 0.1)
        lo, hi = lo - pad, hi + pad
    span = hi - lo
    raw = span / max(target - 1, 1)
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * magnitude
        if raw <= step:
            break
    start = math.floor(lo / step) * step
    ticks = [start]
    while ticks[-1] < hi - 1e-12 * span:
        ticks.append(ticks[-1] + step)
    return ticks


def _log2_ticks(lo: float, hi: float) -> list[float]:
    k0 = math.floor(lo + 1e-12)
    k1 = math.ceil(hi - 1e-12)
    return [float(k) for k in range(int(k0), int(k1) + 1)]


def _fmt_tick(value: float) -> str:
    return f"{value:g}"


def _px(value: float) -> str:
    return f"{value:.2f}"


def _series_xy(series: PlotSeries, x_log2: bool) -> list[tuple[float, float]]:
    if x_log2:
        return [(math.log2(x), y) for x, y in series.points]
    return [(x, y) for x, y in series.points]


def render_svg(spec: PlotSpec) -> str:
    """Render the figure to an SVG document string (deterministic)."""
    plot_w = VIEW_WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = VIEW_HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM
    x0px, y0px = _MARGIN_LEFT, _MARGIN_TOP

    if spec.x_log2 and any(x <= 0 for s in spec.series for x, _ in s.points):
        raise ValidationError("log2 x-axis requires positive x values")
    data = [_series_xy(s, spec.x_log2) for s in spec.series]
    xs = [x for pts in data for x, _ in pts]
    ys = [y for pts in data for _, y in pts]
    if spec.x_log2:
        x_ticks = _log2_ticks(min(xs), max(xs))
    else:
        x_ticks = _nice_ticks(min(xs), max(xs))
    y_ticks = _nice_ticks(min(ys), max(ys))
    x_lo, x_hi = x_ticks[0], x_ticks[-1]
    y_lo, y_hi = y_ticks[0], y_ticks[-1]
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def sx(x: float) -> float:
        return x0px + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return y0px + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW_WIDTH}" '
        f'height="{VIEW_HEIGHT}" viewBox="0 0 {VIEW_WIDTH} {VIEW_HEIGHT}" '
        'font-family="Helvetica, Arial, sans-serif">'
    )
    out.append(f'<rect x="0" y="0" width="{VIEW_WIDTH}" height="{VIEW_HEIGHT}" fill="#ffffff"/>')
    out.append(
        f'<text x="{VIEW_WIDTH // 2}" y="28" text-anchor="middle" font-size="16">'
        f"{escape(spec.title)}</text>"
    )

    # gridlines and ticks
    for tick in x_ticks:
        px = sx(tick)
        out.append(
            f'<line x1="{_px(px)}" y1="{_px(y0px)}" x2="{_px(px)}" '
            f'y2="{_px(y0px + plot_h)}" stroke="#e6e6e6" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="{_px(px)}" y1="{_px(y0px + plot_h)}" x2="{_px(px)}" '
            f'y2="{_px(y0px + plot_h + 5)}" stroke="#333333" stroke-width="1"/>'
        )
        label = _fmt_tick(2.0**tick) if spec.x_log2 else _fmt_tick(tick)
        out.append(
            f'<text x="{_px(px)}" y="{_px(y0px + plot_h + 20)}" text-anchor="middle" '
            f'font-size="11">{escape(label)}</text>'
        )
    for tick in y_ticks:
        py = sy(tick)
        out.append(
            f'<line x1="{_px(x0px)}" y1="{_px(py)}" x2="{_px(x0px + plot_w)}" '
            f'y2="{_px(py)}" stroke="#e6e6e6" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="{_px(x0px - 5)}" y1="{_px(py)}" x2="{_px(x0px)}" '
            f'y2="{_px(py)}" stroke="#333333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_px(x0px - 9)}" y="{_px(py + 4)}" text-anchor="end" '
            f'font-size="11">{escape(_fmt_tick(tick))}</text>'
        )

    # axis lines and labels
    out.append(
        f'<line x1="{_px(x0px)}" y1="{_px(y0px + plot_h)}" x2="{_px(x0px + plot_w)}" '
        f'y2="{_px(y0px + plot_h)}" stroke="#333333" stroke-width="1.5"/>'
    )
    out.append(
        f'<line x1="{_px(x0px)}" y1="{_px(y0px)}" x2="{_px(x0px)}" '
        f'y2="{_px(y0px + plot_h)}" stroke="#333333" stroke-width="1.5"/>'
    )
    out.append(
        f'<text x="{_px(x0px + plot_w / 2)}" y="{VIEW_HEIGHT - 14}" text-anchor="middle" '
        f'font-size="13">{escape(spec.x_label)}</text>'
    )
    out.append(
        f'<text x="20" y="{_px(y0px + plot_h / 2)}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 20 {_px(y0px + plot_h / 2)})">{escape(spec.y_label)}</text>'
    )

    # series: exactly one class="series" element each
    for index, (series, pts) in enumerate(zip(spec.series, data)):
        color = _PALETTE[index % len(_PALETTE)]
        dash = ' stroke-dasharray="7 5"' if series.dashed else ""
        coords = [(sx(x), sy(y)) for x, y in pts]
        if spec.kind == "pareto":
            out.append(f'<g class="series" fill="{color}" stroke="{color}">')
            if series.staircase and len(coords) > 1:
                # staircase: move right at constant cost, then drop
                steps = [coords[0]]
                for (x_prev, y_prev), (x_next, y_next) in zip(coords, coords[1:]):
                    steps.append((x_next, y_prev))
                    steps.append((x_next, y_next))
                step_points = " ".join(f"{_px(x)},{_px(y)}" for x, y in steps)
                out.append(
                    f'<polyline class="front-steps" fill="none" stroke-width="1.5"'
                    f'{dash} points="{step_points}"/>'
                )
            for cx, cy in coords:
                out.append(f'<circle cx="{_px(cx)}" cy="{_px(cy)}" r="4"/>')
            out.append("</g>")
        elif len(coords) == 1:
            cx, cy = coords[0]
            out.append(
                f'<g class="series" fill="{color}"><circle cx="{_px(cx)}" '
                f'cy="{_px(cy)}" r="4"/></g>'
            )
        else:
            point_list = " ".join(f"{_px(x)},{_px(y)}" for x, y in coords)
            out.append(
                f'<polyline class="series" fill="none" stroke="{color}" '
                f'stroke-width="2"{dash} points="{point_list}"/>'
            )

    # legend
    legend_x = x0px + plot_w + 18
    out.append('<g class="legend">')
    for index, series in enumerate(spec.series):
        color = _PALETTE[index % len(_PALETTE)]
        dash = ' stroke-dasharray="7 5"' if series.dashed else ""
        ly = y0px + 12 + index * 20
        out.append(
            f'<line x1="{_px(legend_x)}" y1="{_px(ly)}" x2="{_px(legend_x + 26)}" '
            f'y2="{_px(ly)}" stroke="{color}" stroke-width="2"{dash}/>'
        )
        out.append(
            f'<text x="{_px(legend_x + 32)}" y="{_px(ly + 4)}" font-size="11">'
            f"{escape(series.label)}</text>"
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(spec: PlotSpec, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(render_svg(spec), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# spec builders


def scaling_plot(
    dataset: Dataset,
    input: AppInput,
    *,
    kind: str = "time_vs_vms",
    catalog: VmCatalog | None = None,
    billing: str = "per-minute",
    x_log2: bool = False,
    title: str | None = None,
) -> PlotSpec:
    """Time-vs-VMs or cost-vs-VMs series for every SKU matching an input.

    Measured/simulated data renders solid, predicted data dashed. Within a
    bucket the most authoritative provenance wins per node count.
    """
    if kind not in ("time_vs_vms", "cost_vs_vms"):
        raise ValidationError("kind must be 'time_vs_vms' or 'cost_vs_vms'")
    if kind == "cost_vs_vms" and catalog is None:
        raise ValidationError("cost_vs_vms requires a catalog for pricing")
    records = dataset.match(input=input)
    if not records:
        raise NoDataError(f"no benchmark records for {input.describe()}")
    groups = sorted({(r.scenario.sku_name, r.scenario.procs_per_vm) for r in records})
    multi_procs = {sku for sku, _ in groups if sum(1 for s, _ in groups if s == sku) > 1}
    series = []
    for sku_name, procs in groups:
        for bucket, provenances, dashed in (
            ("measured", ("measured", "simulated"), False),
            ("predicted", ("predicted",), True),
        ):
            best: dict[int, BenchmarkRecord] = {}
            for record in records:
                s = record.scenario
                if s.sku_name != sku_name or s.procs_per_vm != procs:
                    continue
                if record.provenance not in provenances:
                    continue
                current = best.get(s.n_vms)
                if current is None or (
                    provenances.index(record.provenance) < provenances.index(current.provenance)
                ):
                    best[s.n_vms] = record
            if not best:
                continue
            points = []
            for n in sorted(best):
                record = best[n]
                if kind == "time_vs_vms":
                    y = record.exec_time_s
                else:
                    sku = check_against_catalog(record.scenario, catalog)
                    y = compute_cost(record.exec_time_s, n, sku, billing=billing)
                points.append((float(n), y))
            label = sku_name if sku_name not in multi_procs else f"{sku_name} p{procs}"
            suffix = bucket if bucket == "predicted" else best[min(best)].provenance
            series.append(
                PlotSeries(label=f"{label} ({suffix})", points=tuple(points), dashed=dashed)
            )
    y_label = "execution time (s)" if kind == "time_vs_vms" else "cost (USD)"
    return PlotSpec(
        kind=kind,
        series=tuple(series),
        x_label="number of VMs",
        y_label=y_label,
        title=title or f"{input.describe()}",
        x_log2=x_log2,
    )


def pareto_plot(result: ParetoResult, *, title: str = "time/cost trade-off") -> PlotSpec:
    """Scatter of all candidates with the front connected by a staircase."""
    series = [
        PlotSeries(
            label="front",
            points=tuple((p.exec_time_s, p.cost) for p in result.front),
            staircase=True,
        )
    ]
    if result.dominated:
        dominated = sorted(result.dominated, key=lambda p: (p.exec_time_s, p.cost))
        series.append(
            PlotSeries(
                label="dominated",
                points=tuple((p.exec_time_s, p.cost) for p in dominated),
            )
        )
    return PlotSpec(
        kind="pareto",
        series=tuple(series),
        x_label="execution time (s)",
        y_label="cost (USD)",
        title=title,
    )
