"""CSV writers/readers for the harness outputs.

Numbers are printed with 12 significant digits; reading a file back and
writing it again reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiments import DisorderSummary, PerturbationSummary
from .measures import TransmissionRecord
from .sweep import Objective, OptimalPoint

TRACE_HEADER = ("tau", "concurrence", "eof", "fidelity")
SWEEP_HEADER = ("jm", "tau_star", "objective")
OPTIMUM_HEADER = ("jm_star", "tau_star", "objective_value", "objective")
DISORDER_HEADER = ("p", "realization", "eof")
DISORDER_SUMMARY_HEADER = ("p", "mean", "min", "max", "fraction_beating_clean")
POINT_HEADER = ("jm_star", "tau_star", "clean_value")
PERTURB_HEADER = ("p", "draw", "ratio")
PERTURB_SUMMARY_HEADER = ("p", "mean_ratio", "min_ratio")


class SchemaError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (str, Objective)):
        return str(x.value if isinstance(x, Objective) else x)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".12g")


def write_rows(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_rows(path: Path | str, header: Sequence[str]) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(header):
        found = rows[0] if rows else []
        raise SchemaError(f"{path}: expected columns {list(header)}, found {found}")
    return rows[1:]


def write_trace(path, records: Sequence[TransmissionRecord]) -> Path:
    return write_rows(path, TRACE_HEADER, ((r.tau, r.concurrence, r.eof, r.fidelity) for r in records))


def read_trace(path) -> list[TransmissionRecord]:
    return [TransmissionRecord(*map(float, row)) for row in read_rows(path, TRACE_HEADER)]


def write_sweep(path, rows: np.ndarray) -> Path:
    return write_rows(path, SWEEP_HEADER, rows)


def read_sweep(path) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in read_rows(path, SWEEP_HEADER)]).reshape(-1, 3)


def write_optimum(path, points: Sequence[OptimalPoint]) -> Path:
    return write_rows(
        path, OPTIMUM_HEADER, ((p.jm_star, p.tau_star, p.objective_value, p.objective) for p in points)
    )


def read_optimum(path) -> list[OptimalPoint]:
    return [
        OptimalPoint(float(a), float(b), float(c), Objective(d)) for a, b, c, d in read_rows(path, OPTIMUM_HEADER)
    ]


def write_disorder(out_dir, summary: DisorderSummary, point: OptimalPoint) -> list[Path]:
    out_dir = Path(out_dir)
    samples = (
        (p, i, v) for p, row in zip(summary.p_grid, summary.samples) for i, v in enumerate(row)
    )
    summ = zip(summary.p_grid, summary.mean, summary.min, summary.max, summary.fraction_beating_clean)
    return [
        write_rows(out_dir / "disorder.csv", DISORDER_HEADER, samples),
        write_rows(out_dir / "disorder_summary.csv", DISORDER_SUMMARY_HEADER, summ),
        write_rows(out_dir / "disorder_point.csv", POINT_HEADER, [(point.jm_star, point.tau_star, summary.clean_value)]),
    ]


def _group_samples(rows: list[list[str]]) -> tuple[np.ndarray, np.ndarray]:
    ps: list[float] = []
    values: dict[float, list[tuple[int, float]]] = {}
    for p, i, v in rows:
        p = float(p)
        if p not in values:
            ps.append(p)
            values[p] = []
        values[p].append((int(i), float(v)))
    lengths = {len(v) for v in values.values()}
    if len(lengths) > 1:
        raise SchemaError("every p must carry the same number of samples")
    samples = np.array([[v for _, v in sorted(values[p])] for p in ps])
    return np.array(ps), samples


def read_disorder(out_dir) -> DisorderSummary:
    out_dir = Path(out_dir)
    p_grid, samples = _group_samples(read_rows(out_dir / "disorder.csv", DISORDER_HEADER))
    (point,) = read_rows(out_dir / "disorder_point.csv", POINT_HEADER)
    return DisorderSummary.from_samples(p_grid, samples, float(point[2]))


def write_perturbation(out_dir, summary: PerturbationSummary, point: OptimalPoint) -> list[Path]:
    out_dir = Path(out_dir)
    draws = ((p, k, v) for p, row in zip(summary.p_grid, summary.ratios) for k, v in enumerate(row))
    summ = zip(summary.p_grid, summary.mean_ratio, summary.min_ratio)
    return [
        write_rows(out_dir / "perturb.csv", PERTURB_HEADER, draws),
        write_rows(out_dir / "perturb_summary.csv", PERTURB_SUMMARY_HEADER, summ),
        write_rows(out_dir / "perturb_point.csv", POINT_HEADER, [(point.jm_star, point.tau_star, summary.clean_eof)]),
    ]


def read_perturbation(out_dir) -> PerturbationSummary:
    out_dir = Path(out_dir)
    p_grid, ratios = _group_samples(read_rows(out_dir / "perturb.csv", PERTURB_HEADER))
    (point,) = read_rows(out_dir / "perturb_point.csv", POINT_HEADER)
    return PerturbationSummary.from_ratios(p_grid, ratios, float(point[2]))
