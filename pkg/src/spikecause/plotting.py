"""Plot-data emission: long-format CSV plus dependency-free SVG summaries.

One SVG per (size, probability) cell shows, for each method, the
individual per-topology AUROC values, the interquartile band, and the
median, mirroring the layout of a violin summary without an external
plotting stack. Quantiles use linear interpolation between order
statistics (numpy's default), and the median is also printed as text so
the figure can be checked against the CSV.
"""

import os

import numpy as np

from spikecause.errors import ConfigError
from spikecause.fileio import atomic_write_text

METHODS = ("attention", "mvgc_aic", "mvgc_bic")
METHOD_LABELS = {
    "attention": "Attention", "mvgc_aic": "MVGC (AIC)", "mvgc_bic": "MVGC (BIC)",
}


def quantiles(values, qs):
    """Linear-interpolation quantiles of a 1-D sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ConfigError("cannot take quantiles of an empty sample")
    return np.quantile(values, qs)


def write_plot_csv(path, records):
    lines = ["n,p,method,topology,auroc"]
    for rec in sorted(records, key=lambda r: (r["n"], r["p"], r["topology"])):
        for method in METHODS:
            lines.append(
                f"{rec['n']},{rec['p']:g},{method},{rec['topology']},"
                f"{repr(float(rec['auroc'][method]))}"
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def _svg_cell(n, p, method_values):
    width, height = 480, 320
    left, right, top, bottom = 60, 20, 40, 40
    span_y = height - top - bottom
    cols = len(method_values)
    slot = (width - left - right) / cols

    def y_of(v):
        return top + (1.0 - v) * span_y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">'
        f'N={n}, p={p:g} (AUROC by method)</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = y_of(tick)
        parts.append(
            f'<line x1="{left}" y1="{y:.1f}" x2="{width - right}" y2="{y:.1f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{tick:g}</text>'
        )
    for idx, (method, values) in enumerate(method_values.items()):
        cx = left + slot * (idx + 0.5)
        q1, med, q3 = quantiles(values, [0.25, 0.5, 0.75])
        for v in values:
            parts.append(
                f'<circle cx="{cx - 18:.1f}" cy="{y_of(v):.1f}" r="2.5" '
                f'fill="#7799cc" fill-opacity="0.7"/>'
            )
        parts.append(
            f'<rect x="{cx - 5:.1f}" y="{y_of(q3):.1f}" width="10" '
            f'height="{max(y_of(q1) - y_of(q3), 0.5):.1f}" fill="black"/>'
        )
        parts.append(
            f'<circle cx="{cx:.1f}" cy="{y_of(med):.1f}" r="4" fill="white" '
            f'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{height - bottom + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">'
            f'{METHOD_LABELS.get(method, method)}</text>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{height - bottom + 32}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" class="median">'
            f'median={med:.4f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot_data(records, out_dir):
    """CSV + one SVG per cell; returns the list of files written."""
    if not records:
        raise ConfigError("no records to plot")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    csv_path = os.path.join(out_dir, "plot_data.csv")
    write_plot_csv(csv_path, records)
    written.append(csv_path)

    cells = {}
    for rec in records:
        cells.setdefault((rec["n"], rec["p"]), []).append(rec)
    for (n, p), recs in sorted(cells.items()):
        method_values = {
            m: [r["auroc"][m] for r in sorted(recs, key=lambda r: r["topology"])]
            for m in METHODS
        }
        path = os.path.join(out_dir, f"plot_N{n}_p{p:g}.svg")
        atomic_write_text(path, _svg_cell(n, p, method_values))
        written.append(path)
    return written
