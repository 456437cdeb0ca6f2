"""SVG renderings of trace, sweep and disorder CSV files."""

from __future__ import annotations

import enum
from pathlib import Path

import numpy as np

from . import csvio


class PlotKind(str, enum.Enum):
    TRACE = "trace"
    SWEEP = "sweep"
    DISORDER_SCATTER = "disorder_scatter"


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.fonttype"] = "none"
    plt.rcParams["svg.hashsalt"] = "bellchain"
    return plt


def emit_plot(csv_path, kind: PlotKind | str, out_path=None) -> Path:
    """Render ``csv_path`` to an SVG next to it (or at ``out_path``)."""
    kind = PlotKind(kind)
    csv_path = Path(csv_path)
    out_path = Path(out_path) if out_path is not None else csv_path.with_suffix(".svg")
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    try:
        if kind is PlotKind.TRACE:
            _trace(ax, csv_path)
        elif kind is PlotKind.SWEEP:
            _sweep(ax, csv_path)
        else:
            _disorder(ax, csv_path)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return out_path


def _trace(ax, path: Path) -> None:
    records = csvio.read_trace(path)
    if not records:
        raise csvio.SchemaError(f"{path}: no rows")
    tau = np.array([r.tau for r in records])
    style = "o" if len(records) == 1 else "-"
    ax.plot(tau, [r.eof for r in records], style, label="EoF")
    ax.plot(tau, [r.fidelity for r in records], style, label="fidelity", alpha=0.7)
    ax.set_xlabel("Jt/ħ")
    ax.set_ylabel("EoF / fidelity")
    ax.set_ylim(0, 1.02)
    ax.legend(loc="best")


def _sweep(ax, path: Path) -> None:
    rows = csvio.read_sweep(path)
    if not len(rows):
        raise csvio.SchemaError(f"{path}: no rows")
    jm, tau, obj = rows.T
    k = int(np.argmax(obj))
    ax.plot(jm, obj, "-" if len(rows) > 1 else "o")
    ax.plot([jm[k]], [obj[k]], "r*")
    ax.annotate(
        f"peak {obj[k]:.4f} at Jt/ħ = {tau[k]:.3f}, J_m/J = {jm[k]:.3f}",
        xy=(jm[k], obj[k]),
        xytext=(0.02, 0.04),
        textcoords="axes fraction",
    )
    ax.set_xlabel("J_m/J")
    ax.set_ylabel("best objective over Jt/ħ")


def _disorder(ax, path: Path) -> None:
    ps: list[float] = []
    grouped: dict[float, list[float]] = {}
    for p, _, v in csvio.read_rows(path, csvio.DISORDER_HEADER):
        p = float(p)
        if p not in grouped:
            ps.append(p)
            grouped[p] = []
        grouped[p].append(float(v))
    if not ps:
        raise csvio.SchemaError(f"{path}: no rows")
    xs = np.concatenate([[100 * p] * len(grouped[p]) for p in ps])
    ys = np.concatenate([grouped[p] for p in ps])
    ax.scatter(xs, ys, marker="+", s=8, linewidths=0.5, color="0.5")
    pct = [100 * p for p in ps]
    ax.plot(pct, [max(grouped[p]) for p in ps], "b-", label="max")
    ax.plot(pct, [np.mean(grouped[p]) for p in ps], "r:", label="mean")
    ax.plot(pct, [min(grouped[p]) for p in ps], "g--", label="min")
    ax.set_xlabel("p (%)")
    ax.set_ylabel("EoF")
    ax.legend(loc="best")
