"""CSV, manifest and SVG output.

Floats are written with 17 significant digits so that files round-trip and
identical runs give identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from html import escape

import numpy as np

FLOAT_FMT = "%.17g"


def edge_label(edge_id) -> str:
    """Lattice ids ``((x...), axis)`` become ``x1;x2/axis``; other ids are str()."""
    if isinstance(edge_id, tuple) and len(edge_id) == 2 and isinstance(edge_id[0], tuple):
        return ";".join(str(c) for c in edge_id[0]) + "/" + str(edge_id[1])
    return str(edge_id)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    if isinstance(v, tuple):
        return edge_label(v)
    return str(v)


def write_csv(path, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return str(path)


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def spectrum_rows(spec):
    return [(n + 1, float(lam), float(res)) for n, (lam, res) in enumerate(zip(spec.eigenvalues, spec.residuals))]


def eigenvector_rows(spec, system):
    """One row per (eigen index, edge, node): the node values of each eigenfunction."""
    rows = []
    for n in range(1, spec.k + 1):
        vec = spec.vector(n)
        for e in system.view.edges:
            x = system.node_coordinates(e.id)
            for xi, yi in zip(x, system.edge_values(vec, e.id)):
                rows.append((n, e.id, float(xi), float(yi)))
    return rows


# -- manifest ---------------------------------------------------------------

def file_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def config_hash(paths: dict, params: dict) -> str:
    """sha256 over the bytes of every config file and the canonical parameter dict."""
    h = hashlib.sha256()
    for key in sorted(paths):
        p = paths[key]
        h.update(key.encode())
        h.update((file_digest(p) if p else "none").encode())
    h.update(json.dumps(params, sort_keys=True).encode())
    return h.hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config_paths: dict
    master_seed: int
    out_dir: str
    config_hash: str
    version: str
    params: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, path) -> str:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return str(path)

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path) as fh:
            return cls(**json.load(fh))


# -- svg --------------------------------------------------------------------

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H, PAD = 640, 400, 50


def _scale(lo, hi, a, b):
    if hi <= lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title, xlabel, ylabel, xlim, ylim):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
           f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
           f'<text x="15" y="{H / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 15 {H / 2})">{escape(ylabel)}</text>']
    for v, pos in ((xlim[0], PAD), (xlim[1], W - PAD)):
        out.append(f'<text x="{pos}" y="{H - PAD + 15}" text-anchor="middle" font-size="10">{v:.4g}</text>')
    for v, pos in ((ylim[0], H - PAD), (ylim[1], PAD)):
        out.append(f'<text x="{PAD - 5}" y="{pos + 4}" text-anchor="end" font-size="10">{v:.4g}</text>')
    return out


def _legend(labels):
    return [f'<text x="{W - PAD - 5}" y="{PAD + 14 * i}" text-anchor="end" font-size="11" '
            f'fill="{PALETTE[i % len(PALETTE)]}">{escape(str(lab))}</text>' for i, lab in enumerate(labels)]


def step_plot_svg(series, title="", xlabel="lambda", ylabel="N") -> str:
    """``series`` is a list of (label, x, y); each is drawn as a right-continuous step."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    xlim, ylim = (float(xs.min()), float(xs.max())), (0.0, float(max(ys.max(), 1e-12)))
    sx, sy = _scale(*xlim, PAD, W - PAD), _scale(*ylim, H - PAD, PAD)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    for i, (_, x, y) in enumerate(series):
        pts = []
        for k, (a, b) in enumerate(zip(x, y)):
            if k:
                pts.append(f"{sx(a):.2f},{sy(y[k - 1]):.2f}")
            pts.append(f"{sx(a):.2f},{sy(b):.2f}")
        out.append(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" points="{" ".join(pts)}"/>')
    out += _legend([s[0] for s in series])
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_svg(groups, title="", xlabel="", ylabel="") -> str:
    """``groups`` is a list of (label, x, y, yerr); error bars are vertical."""
    xs = np.concatenate([np.asarray(g[1], float) for g in groups])
    lo = np.concatenate([np.asarray(g[2], float) - np.asarray(g[3], float) for g in groups])
    hi = np.concatenate([np.asarray(g[2], float) + np.asarray(g[3], float) for g in groups])
    span = float(xs.max() - xs.min()) or 1.0
    xlim = (float(xs.min()) - 0.05 * span, float(xs.max()) + 0.05 * span)
    ylim = (min(0.0, float(lo.min())), float(max(hi.max(), 1e-12)))
    sx, sy = _scale(*xlim, PAD, W - PAD), _scale(*ylim, H - PAD, PAD)
    out = _frame(title, xlabel, ylabel, xlim, ylim)
    for i, (_, x, y, err) in enumerate(groups):
        c = PALETTE[i % len(PALETTE)]
        for a, b, e in zip(x, y, err):
            if math.isfinite(b):
                out.append(f'<line x1="{sx(a):.2f}" y1="{sy(b - e):.2f}" x2="{sx(a):.2f}" y2="{sy(b + e):.2f}" '
                           f'stroke="{c}"/>')
                out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{c}"/>')
    out += _legend([g[0] for g in groups])
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_text(path, text) -> str:
    with open(path, "w") as fh:
        fh.write(text)
    return str(path)


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
