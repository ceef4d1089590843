"""Experiment reports: JSON (full record), CSV (flat tables) and a
self-contained SVG plot."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = "1.0"


def _plain(v):
    """JSON-safe conversion: complex -> [re, im], non-finite -> string."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_plain(float(v.real)), _plain(float(v.imag))]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""
    value: float | None = None
    tolerance: float | None = None

    def to_dict(self):
        return _plain({"name": self.name, "passed": self.passed, "detail": self.detail,
                       "value": self.value, "tolerance": self.tolerance})


@dataclass
class ExperimentReport:
    experiment: str
    scenario: dict
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    plot: dict = field(default_factory=dict)

    def verdict(self, name, passed, detail="", value=None, tolerance=None):
        v = Verdict(name, bool(passed), detail, value, tolerance)
        self.verdicts.append(v)
        return v

    def table(self, name):
        return self.tables.setdefault(name, [])

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "scenario": _plain(self.scenario),
            "records": _plain(self.records),
            "tables": _plain(self.tables),
            "verdicts": [v.to_dict() for v in self.verdicts],
            "notes": list(self.notes),
            "provenance": _plain(self.provenance),
            "plot": _plain(self.plot),
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')!r}")
        rep = cls(d["experiment"], d["scenario"], d["records"], d["tables"], [],
                  d["notes"], d["provenance"], d["plot"])
        for v in d["verdicts"]:
            rep.verdicts.append(Verdict(v["name"], v["passed"], v["detail"], v["value"],
                                        v["tolerance"]))
        return rep


def to_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def table_csv(rows):
    """CSV text for a list of flat dicts (columns in first-seen order)."""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in cols])
    return buf.getvalue()


def _cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ";".join(str(x) for x in v)
    return v


# ---------------------------------------------------------------- SVG

_W, _H, _M = 640, 420, 56


def _axis_map(lo, hi, a, b):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    return lo, hi, (lambda v: a + (v - lo) / (hi - lo) * (b - a))


def _fmt(v):
    return f"{v:.3g}"


def svg_plot(plot, title=""):
    """Scatter plot from ``plot = {"kind": ..., "series": [{"label", "x", "y",
    "marker"}], "xlabel", "ylabel", "logx", "logy"}``.  ``kind`` only feeds
    the title; empty plots produce a frame with a note."""
    series = plot.get("series", [])
    logx = plot.get("logx", False)
    logy = plot.get("logy", False)

    def tx(v, log):
        return math.log10(v) if log else v

    pts = [(tx(x, logx), tx(y, logy)) for s in series for x, y in zip(s["x"], s["y"])
           if (not logx or x > 0) and (not logy or y > 0)]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{_esc(title)}</text>',
           f'<rect x="{_M}" y="{_M / 2}" width="{_W - 1.5 * _M}" height="{_H - 1.5 * _M}" '
           f'fill="none" stroke="black"/>']
    if not pts:
        out.append(f'<text x="{_W / 2}" y="{_H / 2}" text-anchor="middle">no data</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1, fx = _axis_map(min(xs), max(xs), _M, _W - _M / 2)
    y0, y1, fy = _axis_map(min(ys), max(ys), _H - _M, _M / 2)
    for i in range(5):
        xv = x0 + (x1 - x0) * (i + 0.5) / 5
        yv = y0 + (y1 - y0) * (i + 0.5) / 5
        xl = _fmt(10 ** xv) if logx else _fmt(xv)
        yl = _fmt(10 ** yv) if logy else _fmt(yv)
        out.append(f'<text x="{fx(xv):.1f}" y="{_H - _M + 16}" text-anchor="middle">{xl}</text>')
        out.append(f'<text x="{_M - 4}" y="{fy(yv) + 4:.1f}" text-anchor="end">{yl}</text>')
    out.append(f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">'
               f'{_esc(plot.get("xlabel", ""))}</text>')
    out.append(f'<text x="14" y="{_H / 2}" transform="rotate(-90 14 {_H / 2})" '
               f'text-anchor="middle">{_esc(plot.get("ylabel", ""))}</text>')
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    for k, s in enumerate(series):
        c = colors[k % len(colors)]
        for x, y in zip(s["x"], s["y"]):
            if (logx and x <= 0) or (logy and y <= 0):
                continue
            px, py = fx(tx(x, logx)), fy(tx(y, logy))
            if s.get("marker") == "cross":
                out.append(f'<path d="M{px - 4:.1f},{py - 4:.1f}L{px + 4:.1f},{py + 4:.1f}'
                           f'M{px - 4:.1f},{py + 4:.1f}L{px + 4:.1f},{py - 4:.1f}" '
                           f'stroke="{c}" stroke-width="1.5"/>')
            else:
                out.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3" fill="{c}"/>')
        out.append(f'<text x="{_W - _M}" y="{_M / 2 + 16 + 14 * k}" text-anchor="end" '
                   f'fill="{c}">{_esc(s.get("label", ""))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_report(report, out_dir, formats=("json",)):
    """Write ``<experiment>.json``, ``<experiment>_<table>.csv`` and
    ``<experiment>.svg``; returns the written paths."""
    formats = tuple(formats)
    unknown = set(formats) - {"json", "csv", "svg"}
    if unknown:
        raise ValueError(f"unknown format(s): {sorted(unknown)}")
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    base = os.path.join(out_dir, report.experiment)

    def write(path, text):
        try:
            with open(path, "w", newline="") as f:
                f.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    if "json" in formats:
        write(base + ".json", to_json(report))
    if "csv" in formats:
        for name in sorted(report.tables):
            write(f"{base}_{name}.csv", table_csv(report.tables[name]))
    if "svg" in formats:
        write(base + ".svg", svg_plot(report.plot, f"{report.experiment}: "
                                                   f"{report.scenario.get('name', '')}"))
    return written


def load_report(path):
    with open(path) as f:
        return ExperimentReport.from_dict(json.load(f))
