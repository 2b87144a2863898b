"""Deterministic CSV, fit, and SVG emission for experiment results.

Output is byte-identical for identical results: floats are rendered with
``repr`` (shortest round-trip) and the SVG is assembled from a fixed
template with no timestamps or generated ids.
"""

from __future__ import annotations

import math
import os

from .experiments import ExperimentConfig, RateFit, SweepResult

SWEEP_COLUMNS = (
    "epsilon",
    "sup_err_sq",
    "sup_dafermos",
    "sup_eps_delta_E",
    "cross_term",
    "blowup",
    "first_threshold_violation_t",
)

ENERGY_COLUMNS = ("t", "e_base", "e_delta", "composite", "dafermos", "linf")


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_sweep_csv(path, rows):
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.eps,
                    r.sup_err_sq,
                    r.sup_dafermos,
                    r.sup_eps_delta_e,
                    r.cross_term,
                    r.blowup,
                    r.first_threshold_violation_t,
                )
            )
        )
    _write_text(path, "\n".join(lines) + "\n")


def write_energy_csv(path, reports):
    lines = [",".join(ENERGY_COLUMNS)]
    for rep in reports:
        lines.append(
            ",".join(_fmt(v) for v in (rep.t, rep.e_base, rep.e_delta, rep.composite, rep.dafermos, rep.linf))
        )
    _write_text(path, "\n".join(lines) + "\n")


def write_fit_txt(path, fit: RateFit | None, cfg: ExperimentConfig, note: str = ""):
    lines = []
    if fit is None:
        lines.append("fit: undefined")
        if note:
            lines.append(f"note: {note}")
    else:
        lines.append(f"slope = {fit.slope!r}")
        lines.append(f"intercept = {fit.intercept!r}")
        lines.append(f"r2 = {fit.r2!r}")
        lines.append(f"n_points = {fit.n_points}")
        lines.append(f"excluded = {fit.excluded}")
        lines.append(f"reference_slope = {cfg.s / 2.0!r}")
        lines.append(f"slope_floor = {cfg.s / 2.0 - cfg.slope_tol!r}")
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Minimal self-contained SVG log-log plot
# ---------------------------------------------------------------------------

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo: float, hi: float):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0**e for e in range(lo_e, hi_e + 1)]


def loglog_svg(points, fit: RateFit | None, ref_slope: float, title: str, xlabel: str, ylabel: str) -> str:
    """Scatter + fitted line + reference-slope guide, as one SVG string."""
    pts = [(x, y) for x, y in points if x > 0 and y > 0 and math.isfinite(y)]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xlo == xhi:
        xlo, xhi = xlo / 10.0, xhi * 10.0
    if ylo == yhi:
        ylo, yhi = ylo / 10.0, yhi * 10.0

    def sx(x):
        f = (math.log10(x) - math.log10(xlo)) / (math.log10(xhi) - math.log10(xlo))
        return _ML + f * (_W - _ML - _MR)

    def sy(y):
        f = (math.log10(y) - math.log10(ylo)) / (math.log10(yhi) - math.log10(ylo))
        return _H - _MB - f * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="18" text-anchor="middle">{title}</text>',
    ]
    # axes box
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="black"/>'
    )
    for tx in _ticks(xlo, xhi):
        if xlo <= tx <= xhi:
            parts.append(
                f'<line x1="{sx(tx):.2f}" y1="{_H - _MB}" x2="{sx(tx):.2f}" y2="{_H - _MB + 5}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{sx(tx):.2f}" y="{_H - _MB + 18}" text-anchor="middle">{tx:g}</text>'
            )
    for ty in _ticks(ylo, yhi):
        if ylo <= ty <= yhi:
            parts.append(
                f'<line x1="{_ML - 5}" y1="{sy(ty):.2f}" x2="{_ML}" y2="{sy(ty):.2f}" stroke="black"/>'
            )
            parts.append(
                f'<text x="{_ML - 8}" y="{sy(ty):.2f}" text-anchor="end" dominant-baseline="middle">{ty:g}</text>'
            )
    parts.append(f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>')
    parts.append(
        f'<text x="16" y="{_H // 2}" text-anchor="middle" transform="rotate(-90 16 {_H // 2})">{ylabel}</text>'
    )

    if fit is not None:
        y0 = math.exp(fit.intercept + fit.slope * math.log(xlo))
        y1 = math.exp(fit.intercept + fit.slope * math.log(xhi))
        y0c, y1c = max(min(y0, yhi), ylo), max(min(y1, yhi), ylo)
        parts.append(
            f'<line x1="{sx(xlo):.2f}" y1="{sy(y0c):.2f}" x2="{sx(xhi):.2f}" y2="{sy(y1c):.2f}" '
            'stroke="crimson" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_ML + 10}" y="{_MT + 18}" fill="crimson">fit slope {fit.slope:.4f} (R2 {fit.r2:.4f})</text>'
        )
    # reference slope anchored at the largest-eps point
    xa, ya = pts[0]
    for x, y in pts:
        if x > xa:
            xa, ya = x, y
    yref = ya * (xlo / xa) ** ref_slope
    yrefc = max(min(yref, yhi), ylo)
    parts.append(
        f'<line x1="{sx(xa):.2f}" y1="{sy(ya):.2f}" x2="{sx(xlo):.2f}" y2="{sy(yrefc):.2f}" '
        'stroke="steelblue" stroke-dasharray="6 4"/>'
    )
    parts.append(
        f'<text x="{_ML + 10}" y="{_MT + 34}" fill="steelblue">reference slope {ref_slope:.4f}</text>'
    )
    for x, y in pts:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(result: SweepResult, out_dir) -> list:
    """Write sweep.csv, per-eps energy series, fit.txt, and the log-log SVG.

    Byte-deterministic given identical results; returns written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "sweep.csv")
    write_sweep_csv(path, result.rows)
    written.append(path)

    for row in result.rows:
        path = os.path.join(out_dir, f"energies_{row.eps!r}.csv")
        write_energy_csv(path, row.reports)
        written.append(path)

    path = os.path.join(out_dir, "fit.txt")
    write_fit_txt(path, result.fit, result.config, result.fit_note)
    written.append(path)

    pts = [(r.eps, r.sup_err_sq) for r in result.rows if r.sup_err_sq > 0 and math.isfinite(r.sup_err_sq)]
    if pts:
        path = os.path.join(out_dir, "sweep_rate.svg")
        err_label = "sup_t ||u_eps - v||^2 (L2)" if result.config.dim == 2 else "sup_t ||u_eps - v||^2 (H^1/2)"
        svg = loglog_svg(
            pts,
            result.fit,
            result.config.s / 2.0,
            title="relaxation error vs eps",
            xlabel="eps",
            ylabel=err_label,
        )
        _write_text(path, svg)
        written.append(path)
    return written
