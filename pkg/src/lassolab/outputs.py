"""CSV, JSON and static SVG emitters.

Floats are written with ``repr`` and columns in a fixed order, so a given
result always serializes to the same bytes. SVGs are written by hand (no
plotting library) for the same reason.
"""
from __future__ import annotations

import csv
import io
import json
import math
from html import escape
from pathlib import Path

SWEEP_CELLS_CSV = "sweep_cells.csv"
SWEEP_RECORDS_CSV = "sweep_records.csv"
WIDTH_COLUMNS = ("p", "n", "k", "covariance_kind", "width_mean", "width_se", "normalized",
                 "samples", "seed")


def _fmt(v) -> str:
    if hasattr(v, "item") and not isinstance(v, (list, tuple)):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return _fmt(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_csv(path, columns, rows) -> Path:
    return _write(Path(path), csv_text(columns, rows))


def write_json(path, obj) -> Path:
    return _write(Path(path), json_text(obj))


# -- SVG -----------------------------------------------------------------

def _color(v: float) -> str:
    """White-to-navy ramp on [0, 1]; grey for missing values."""
    if v is None or not math.isfinite(v):
        return "#cccccc"
    v = min(max(v, 0.0), 1.0)
    r = round(255 - v * (255 - 16))
    g = round(255 - v * (255 - 42))
    b = round(255 - v * (255 - 110))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(xs, ys, values: dict, title: str, xlabel: str, ylabel: str,
                cell: int = 28) -> str:
    """Grid heatmap; ``values`` maps (x, y) to a number in [0, 1]."""
    xs, ys = sorted(set(xs)), sorted(set(ys))
    left, top = 70, 40
    w = left + cell * len(xs) + 20
    h = top + cell * len(ys) + 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'font-family="sans-serif" font-size="10">',
           f'<text x="{w // 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>']
    for j, y in enumerate(reversed(ys)):
        for i, x in enumerate(xs):
            v = values.get((x, y))
            fv = math.nan if v is None else float(v)
            out.append(f'<rect x="{left + i * cell}" y="{top + j * cell}" width="{cell}" '
                       f'height="{cell}" fill="{_color(fv)}" stroke="#ffffff">'
                       f'<title>{escape(xlabel)}={x!r} {escape(ylabel)}={y!r}: {_fmt(fv)}'
                       f'</title></rect>')
        out.append(f'<text x="{left - 4}" y="{top + j * cell + cell // 2 + 3}" '
                   f'text-anchor="end">{y:g}</text>')
    base = top + cell * len(ys)
    for i, x in enumerate(xs):
        out.append(f'<text x="{left + i * cell + cell // 2}" y="{base + 14}" '
                   f'text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + cell * len(xs) // 2}" y="{base + 34}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + cell * len(ys) // 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + cell * len(ys) // 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_svg(xs, series: dict, title: str, xlabel: str, ylabel: str, logx: bool = True,
             logy: bool = True, width: int = 420, height: int = 300) -> str:
    """Polyline plot of one or more series sharing x values."""
    tx = (lambda v: math.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: math.log10(max(v, 1e-300))) if logy else (lambda v: v)
    px = [tx(x) for x in xs]
    pys = {k: [ty(v) for v in vals] for k, vals in series.items()}
    allv = [v for vals in pys.values() for v in vals if math.isfinite(v)]
    x0, x1 = (min(px), max(px)) if px else (0.0, 1.0)
    y0, y1 = (min(allv), max(allv)) if allv else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    left, right, top, bottom = 60, 20, 30, 40
    sx = lambda v: left + (v - x0) / (x1 - x0) * (width - left - right)  # noqa: E731
    sy = lambda v: height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom)  # noqa: E731
    palette = ("#1f4e79", "#c0504d", "#4f8132", "#7f6084")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="10">',
           f'<text x="{width // 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" '
           f'stroke="#000000"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="#000000"/>']
    for x, p in zip(xs, px):
        out.append(f'<text x="{sx(p):.2f}" y="{height - bottom + 14}" '
                   f'text-anchor="middle">{x:g}</text>')
    for v in (y0, y1):
        lab = 10 ** v if logy else v
        out.append(f'<text x="{left - 4}" y="{sy(v) + 3:.2f}" text-anchor="end">{lab:.3g}</text>')
    for idx, (name, vals) in enumerate(pys.items()):
        col = palette[idx % len(palette)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(px, vals) if math.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        out.append(f'<text x="{width - right - 4}" y="{top + 12 * (idx + 1)}" text-anchor="end" '
                   f'fill="{col}">{escape(name)}</text>')
    out.append(f'<text x="{(left + width - right) // 2}" y="{height - 6}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{height // 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {height // 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- result emitters -----------------------------------------------------

def emit_sweep(result, outdir, formats=("csv", "json", "svg")) -> list[Path]:
    from .experiments import CellSummary, ReplicationRecord

    outdir = Path(outdir)
    written = []
    cells = [c.row() for c in result.cells]
    recs = [r.row() for r in result.records]
    if "csv" in formats:
        written.append(write_csv(outdir / SWEEP_CELLS_CSV, CellSummary.COLUMNS, cells))
        written.append(write_csv(outdir / SWEEP_RECORDS_CSV, ReplicationRecord.COLUMNS, recs))
    if "json" in formats:
        written.append(write_json(outdir / "sweep.json", {"cells": cells, "records": recs}))
    if "svg" in formats and result.cells:
        xs = [c.delta for c in result.cells]
        ys = [c.rho for c in result.cells]
        supp = {(c.delta, c.rho): c.support_q50 for c in result.cells}
        bp = {(c.delta, c.rho): c.bp_success_rate for c in result.cells}
        written.append(_write(outdir / "phase_support_fraction.svg",
                              heatmap_svg(xs, ys, supp, "median support fraction",
                                          "delta = n/p", "rho = k/n")))
        written.append(_write(outdir / "phase_bp_success.svg",
                              heatmap_svg(xs, ys, bp, "basis pursuit success rate",
                                          "delta = n/p", "rho = k/n")))
    return written


def emit_unbounded(result, outdir, formats=("csv", "json", "svg")) -> list[Path]:
    from .experiments import UnboundedRow

    outdir = Path(outdir)
    written = []
    rows = [r.row() for r in result.rows]
    summary = {
        "t_grid": result.t_grid, "median_risk": result.median_risk,
        "median_support_fraction": result.median_support_fraction,
        "median_l2_error": result.median_l2_error,
        "certified_seeds": result.certified_seeds, "seeds": result.seeds,
        "bp_failure_certified": result.bp_failure_certified,
        "width_normalized": result.width_normalized,
        "above_transition": result.above_transition,
    }
    if "csv" in formats:
        written.append(write_csv(outdir / "unbounded.csv", UnboundedRow.COLUMNS, rows))
    if "json" in formats:
        written.append(write_json(outdir / "unbounded.json", {"summary": summary, "rows": rows}))
    if "svg" in formats and result.t_grid:
        written.append(_write(outdir / "risk_vs_t.svg",
                              line_svg(result.t_grid, {"median risk": result.median_risk},
                                       "Lasso risk along the scaled signal", "t", "risk")))
    return written


def emit_equivalence(report, outdir, formats=("csv", "json", "svg")) -> list[Path]:
    from .experiments import EquivalenceRow

    outdir = Path(outdir)
    written = []
    rows = [r.row() for r in report.rows]
    if "csv" in formats:
        written.append(write_csv(outdir / "equivalence.csv", EquivalenceRow.COLUMNS, rows))
    if "json" in formats:
        written.append(write_json(outdir / "equivalence.json",
                                  {"summary": report.summary(), "rows": rows}))
    written += emit_unbounded(report.unbounded, outdir / "above", formats)
    return written


def width_rows(entries) -> list[dict]:
    """``entries``: iterable of (cone, estimate, n, seed)."""
    out = []
    for cone, est, n, seed in entries:
        kind = cone.covariance.kind if cone.covariance is not None else "identity"
        out.append({"p": cone.p, "n": n if n is not None else "", "k": cone.k,
                    "covariance_kind": kind, "width_mean": est.mean,
                    "width_se": est.std_error, "normalized": est.normalized,
                    "samples": est.samples, "seed": seed})
    return out


def emit_width(entries, outdir, formats=("csv", "json")) -> list[Path]:
    outdir = Path(outdir)
    rows = width_rows(entries)
    written = []
    if "csv" in formats:
        written.append(write_csv(outdir / "width.csv", WIDTH_COLUMNS, rows))
    if "json" in formats:
        written.append(write_json(outdir / "width.json", rows))
    return written


def emit_risk_bounds(reports, outdir, formats=("csv", "json")) -> list[Path]:
    from .re_analysis import RiskBoundReport

    outdir = Path(outdir)
    rows = [r.csv_row() for r in reports]
    written = []
    if "csv" in formats:
        written.append(write_csv(outdir / "risk_bounds.csv", RiskBoundReport.CSV_COLUMNS, rows))
    if "json" in formats:
        written.append(write_json(outdir / "risk_bounds.json", rows))
    return written
