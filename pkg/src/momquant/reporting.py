"""CSV / JSON / SVG writers with byte-stable output."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence


def fmt(value: Any) -> str:
    """Full-precision text for a table cell.

    Floats use ``repr`` (shortest string that round-trips), non-finite floats
    are ``inf``, ``-inf`` or ``nan``, and ``None`` is the empty string.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return fmt(value)
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return jsonable(value.item())
    return value


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=False, allow_nan=False) + "\n"


def csv_text(columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def json_records(columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    return dumps([{c: row.get(c) for c in columns} for row in rows])


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_lines(
    series: Mapping[str, Sequence[tuple[float, float]]],
    *,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 420,
) -> str:
    """A static line chart: one ``<polyline>`` per series.

    Points that cannot be drawn on a log axis (nonpositive values) are skipped.
    """

    def tx(v: float) -> float | None:
        if logx:
            return math.log10(v) if v > 0 else None
        return v

    def ty(v: float) -> float | None:
        if logy:
            return math.log10(v) if v > 0 else None
        return v

    mapped = {}
    for name, pts in series.items():
        keep = []
        for x, y in pts:
            a, b = tx(x), ty(y)
            if a is not None and b is not None and math.isfinite(a) and math.isfinite(b):
                keep.append((a, b))
        mapped[name] = keep
    allpts = [p for pts in mapped.values() for p in pts]
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    if allpts:
        x0, x1 = min(p[0] for p in allpts), max(p[0] for p in allpts)
        y0, y1 = min(p[1] for p in allpts), max(p[1] for p in allpts)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(a: float) -> str:
        return f"{left + (a - x0) / (x1 - x0) * pw:.2f}"

    def py(b: float) -> str:
        return f"{top + ph - (b - y0) / (y1 - y0) * ph:.2f}"

    def tick(v: float, log: bool) -> str:
        return f"1e{v:.2f}" if log else f"{v:.4g}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{_esc(ylabel)}</text>',
        f'<text x="{left}" y="{top + ph + 16}" font-size="10">{tick(x0, logx)}</text>',
        f'<text x="{left + pw}" y="{top + ph + 16}" text-anchor="end" font-size="10">{tick(x1, logx)}</text>',
        f'<text x="{left - 4}" y="{top + ph}" text-anchor="end" font-size="10">{tick(y0, logy)}</text>',
        f'<text x="{left - 4}" y="{top + 10}" text-anchor="end" font-size="10">{tick(y1, logy)}</text>',
    ]
    for i, (name, pts) in enumerate(mapped.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(a)},{py(b)}" for a, b in pts)
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}">'
            f"<title>{_esc(name)}</title></polyline>"
        )
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly}" font-size="11">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
