"""CSV, SVG and JSON emission for certificates and figure data.

The SVG writer is a deliberately tiny hand-rolled line chart: two curves and
shaded failure intervals are all the appendix figures need.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def write_json_report(path: Path, report: dict) -> None:
    """Deterministic JSON: sorted keys, repr floats, newline-terminated."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(report), fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def regularity_csv(path: Path, curve) -> None:
    write_csv(path, ["s", "c2s", "one_minus_s", "feasible"], curve.rows)


def decay_csv(path: Path, ts, max_abs) -> None:
    rows = [
        (float(t), float(m), math.log(t), math.log(m) if m > 0 else float("-inf"))
        for t, m in zip(ts, max_abs)
    ]
    write_csv(path, ["t", "max_abs_V", "log_t", "log_max"], rows)


def f_table_csv(path: Path, patches) -> None:
    rows = []
    for p in patches:
        for (s, sg, u_m, f_m) in p.samples:
            rows.append((p.i, u_m[0], str(p.q_u), u_m[1], str(p.q_u),
                         f_m[0], str(p.q_f), f_m[1], str(p.q_f)))
    write_csv(
        path,
        ["i", "u1_mantissa", "u1_q", "u2_mantissa", "u2_q",
         "f1_mantissa", "f1_q", "f2_mantissa", "f2_q"],
        rows,
    )


def regularity_svg(path: Path, curve, width: int = 640, height: int = 420) -> None:
    """Minimal two-curve line chart with shaded failure intervals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ss = [r[0] for r in curve.rows]
    c2s = [r[1] for r in curve.rows]
    oms = [r[2] for r in curve.rows]
    lo_x, hi_x = min(ss), max(ss)
    lo_y = min(min(c2s), min(oms))
    hi_y = max(max(c2s), max(oms))
    pad = 0.08 * (hi_y - lo_y)
    lo_y, hi_y = lo_y - pad, hi_y + pad
    mx, my = 50, 30

    def X(s):
        return mx + (s - lo_x) / (hi_x - lo_x) * (width - 2 * mx)

    def Y(v):
        return height - my - (v - lo_y) / (hi_y - lo_y) * (height - 2 * my)

    def poly(vals, color):
        pts = " ".join(f"{X(s):.2f},{Y(v):.2f}" for s, v in zip(ss, vals))
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for a, b in curve.gap_intervals:
        parts.append(
            f'<rect x="{X(a):.2f}" y="{my}" width="{X(b) - X(a):.2f}" '
            f'height="{height - 2 * my}" fill="#f4c7c3" opacity="0.7"/>'
        )
    parts.append(poly(c2s, "#1f77b4"))
    parts.append(poly(oms, "#d62728"))
    parts.append(
        f'<line x1="{mx}" y1="{Y(lo_y + pad)}" x2="{mx}" y2="{my}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{mx}" y1="{Y(0) if lo_y < 0 < hi_y else height - my}" '
        f'x2="{width - mx}" y2="{Y(0) if lo_y < 0 < hi_y else height - my}" '
        f'stroke="black" stroke-width="1"/>'
    )
    label = f"d={curve.d} ({curve.variant}): c(2s) vs 1-s"
    parts.append(f'<text x="{mx}" y="{my - 10}" font-size="13">{label}</text>')
    parts.append(
        f'<text x="{width - mx - 120}" y="{my + 14}" font-size="11" fill="#1f77b4">c(2s)</text>'
    )
    parts.append(
        f'<text x="{width - mx - 120}" y="{my + 28}" font-size="11" fill="#d62728">1 - s</text>'
    )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
