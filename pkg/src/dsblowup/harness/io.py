"""Fixed-schema CSV/JSON writers and readers for sweep artifacts.

Floats are written with 17 significant digits, which round-trips every
double exactly; NaN is written as ``nan`` in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, fields
from pathlib import Path

import numpy as np

from ..diagnostics import FunctionalSeries, inequality_ratios
from ..model import ModelParams
from .sweep import FitResult, SweepRecord

SCHEMA_VERSION = 1

SWEEP_COLUMNS = ("schema_version", "n", "H", "p", "kind", "epsilon", "m", "dt",
                 "status", "T_est", "T_err", "peak_sup")
SERIES_COLUMNS = ("t", "sup_u", "G", "Gpp", "G1", "energy", "rho1")
REGION_COLUMNS = ("schema_version", "i", "j", "p", "b1", "A", "R", "G0", "G0p",
                  "status", "T_star")
FIT_FIELDS = ("slope", "intercept", "r_squared", "n_points", "theoretical_exponent",
              "window_lo", "window_hi")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else format(float(x), ".17g")
    return str(x)


def _json_value(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (float, np.floating)) and not math.isfinite(x):
        return "null"
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in x) + "]"
    if isinstance(x, dict):
        return dump_json(x)
    return fmt(x)


def dump_json(obj: dict, indent: int = 2, level: int = 0) -> str:
    """JSON text with every float at 17 significant digits."""
    pad = " " * (indent * (level + 1))
    items = []
    for k, v in obj.items():
        val = dump_json(v, indent, level + 1) if isinstance(v, dict) else _json_value(v)
        items.append(f'{pad}"{k}": {val}')
    return "{\n" + ",\n".join(items) + "\n" + " " * (indent * level) + "}"


def _csv_text(header, rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def sweep_csv(records) -> str:
    rows = ((SCHEMA_VERSION,) + astuple(r) for r in records)
    return _csv_text(SWEEP_COLUMNS, rows, f"schema_version={SCHEMA_VERSION} dsblowup sweep")


def read_sweep_csv(path) -> list[SweepRecord]:
    types = {f.name: f.type for f in fields(SweepRecord)}
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    for row in csv.DictReader(lines):
        if int(row.pop("schema_version")) != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema version")
        kw = {}
        for name, value in row.items():
            t = types[name]
            kw[name] = int(value) if t in ("int", int) else value if t in ("str", str) else float(value)
        out.append(SweepRecord(**kw))
    return out


def series_csv(series: FunctionalSeries, params: ModelParams) -> str:
    rho = inequality_ratios(series, params) if len(series) else np.array([])
    rows = zip(series.t, series.sup_u, series.G, series.Gpp, series.G1, series.energy, rho)
    return _csv_text(SERIES_COLUMNS, rows, f"schema_version={SCHEMA_VERSION} dsblowup series")


def series_filename(eps: float) -> str:
    return f"series_{eps:.12g}.csv"


def fit_document(fit: FitResult | None, theoretical: float, window) -> dict:
    doc = {
        "slope": fit.slope if fit else None,
        "intercept": fit.intercept if fit else None,
        "r_squared": fit.r_squared if fit else None,
        "n_points": fit.n_points if fit else 0,
        "theoretical_exponent": theoretical,
        "window_lo": window[0],
        "window_hi": window[1],
    }
    return doc


def region_csv(cells, A, R, G0, G0p) -> str:
    rows = ((SCHEMA_VERSION, c.index[0], c.index[1], c.p, c.b1, A, R, G0, G0p,
             c.status, c.T_star) for c in cells)
    return _csv_text(REGION_COLUMNS, rows, f"schema_version={SCHEMA_VERSION} dsblowup region map")


GNUPLOT_SCRIPT = """\
# Lifespan against amplitude on log-log axes.
set logscale xy
set xlabel "epsilon"
set ylabel "T(epsilon)"
set key top right
plot "lifespan.dat" using 1:2 with points pt 7 title "measured", \\
     "lifespan_fit.dat" using 1:2 with lines title "least-squares fit", \\
     "lifespan_theory.dat" using 1:2 with lines dt 2 title "theoretical slope"
"""


def _two_column(rows) -> str:
    return "".join(f"{fmt(a)} {fmt(b)}\n" for a, b in rows)


def write_outputs(records, fit: FitResult | None, out_dir, *, series: dict | None = None,
                  params: ModelParams | None = None, theoretical: float = math.nan,
                  window=(math.nan, 1.0), region: dict | None = None,
                  config: dict | None = None, report: str | None = None) -> list[Path]:
    """Write sweep artifacts into ``out_dir`` and return the paths written.

    ``region`` is ``{"cells": [...], "A": .., "R": .., "G0": .., "G0p": ..}``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    written = [write_text(out / "sweep.csv", sweep_csv(records))]
    if series:
        if params is None:
            raise ValueError("series output needs the model parameters")
        for eps in sorted(series, reverse=True):
            written.append(write_text(out / series_filename(eps), series_csv(series[eps], params)))
    written.append(write_text(out / "fit.json", dump_json(fit_document(fit, theoretical, window)) + "\n"))
    if region is not None:
        written.append(write_text(out / "region_map.csv", region_csv(**region)))
    if config is not None:
        written.append(write_text(out / "config.json", dump_json(config) + "\n"))
    if report is not None:
        written.append(write_text(out / "report.txt", report))

    finest = max((r.m for r in records), default=0)
    pts = [(r.epsilon, r.T_est) for r in records
           if r.m == finest and r.status == "BlewUp"]
    written.append(write_text(out / "lifespan.dat", _two_column(pts)))
    fit_rows, theory_rows = [], []
    if fit is not None and pts:
        eps_grid = np.geomspace(min(e for e, _ in pts), max(e for e, _ in pts), 32)
        fit_rows = [(e, fit.prefactor * e**fit.slope) for e in eps_grid]
        if math.isfinite(theoretical):
            theory_rows = [(e, fit.prefactor * e**-theoretical) for e in eps_grid]
    written.append(write_text(out / "lifespan_fit.dat", _two_column(fit_rows)))
    written.append(write_text(out / "lifespan_theory.dat", _two_column(theory_rows)))
    written.append(write_text(out / "plot_lifespan.gp", GNUPLOT_SCRIPT))
    return written
