"""Command-line harness.

    bellchain <command> --config run.toml --out results/ [--seed N] [--workers N] [--plot]

Commands: trace, sweep, compare, disorder, perturb, single, oracle-check.
Exit status: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import re
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, csvio
from .chain_model import PRNG_NAME, ChainSpec, CouplingSet, DisorderSpec, Kind, make_chain
from .evolution import (
    ORACLE_MAX_QUBITS,
    InitialState,
    StateKind,
    build_generator,
    diagonalize,
    evolve,
    full_space_oracle,
    initial_amplitudes,
)
from .experiments import (
    PRESETS,
    configuration_comparison,
    default_disorder_grid,
    default_perturbation_grid,
    disorder_study,
    perturbation_study,
    single_excitation_study,
)
from .plots import emit_plot
from .sweep import Objective, OptimalPoint, SweepConfig, default_tau_max, sweep, time_trace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("bellchain")

COMMANDS = ("trace", "sweep", "compare", "disorder", "perturb", "single", "oracle-check")
WORKERS_ENV = "BELLCHAIN_WORKERS"
ORACLE_TOL = 1e-8

_REQUIRED = object()


class ConfigError(ValueError):
    pass


class Config:
    """TOML run configuration with error messages that point at the source line."""

    def __init__(self, text: str, path: str = "<config>"):
        self.path = path
        self.lines = text.splitlines()
        try:
            self.data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    @classmethod
    def load(cls, path) -> "Config":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls(text, str(path))

    def _line(self, section: str, key: str | None = None) -> int | None:
        in_section = False
        for n, line in enumerate(self.lines, 1):
            s = line.strip()
            if s.startswith("["):
                in_section = s.strip("[] ") == section
                if in_section and key is None:
                    return n
            elif in_section and key is not None and re.match(rf"{re.escape(key)}\s*=", s):
                return n
        return None

    def _where(self, section: str, key: str | None = None) -> str:
        n = self._line(section, key)
        return f"{self.path}:{n}" if n else self.path

    def has(self, section: str) -> bool:
        return isinstance(self.data.get(section), dict)

    def get(self, section: str, key: str, kind=float, default: Any = _REQUIRED):
        table = self.data.get(section, {})
        if key not in table:
            if default is _REQUIRED:
                raise ConfigError(f"{self._where(section)}: missing required field `{key}` in [{section}]")
            return default
        value = table[key]
        try:
            if kind is float:
                return _as_float(value)
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
                return value
            if kind is str:
                if not isinstance(value, str):
                    raise TypeError
                return value
            if kind is list:
                if not isinstance(value, list):
                    raise TypeError
                return [_as_float(v) for v in value]
            return kind(value)
        except (TypeError, ValueError) as exc:
            detail = f" ({exc})" if str(exc) else ""
            raise ConfigError(
                f"{self._where(section, key)}: field `{key}` in [{section}] has invalid value {value!r}{detail}"
            ) from None


def _as_float(value) -> float:
    """Number, or a string such as ``"25pi"`` / ``"2.5*pi"``."""
    if isinstance(value, bool):
        raise TypeError
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = re.fullmatch(r"\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*", value)
        if m:
            coeff = m.group(1)
            return (float(coeff) if coeff not in ("", "+", "-") else float(coeff + "1")) * math.pi
        return float(value)
    raise TypeError


# ---------------------------------------------------------------------------
# config -> domain objects


def chain_from(cfg: Config, section: str = "chain") -> ChainSpec:
    kind = Kind(cfg.get(section, "kind", str, "branched"))
    n = cfg.get(section, "n_chain", int)
    tilde_default = 1.0 if kind is Kind.BRANCHED else 0.0
    couplings = CouplingSet(
        j_a=cfg.get(section, "j_a", float, 1.0),
        j_a_tilde=cfg.get(section, "j_a_tilde", float, tilde_default),
        j_m=cfg.get(section, "j_m", float, 1.0),
        j_b=cfg.get(section, "j_b", float, 1.0),
        j_b_tilde=cfg.get(section, "j_b_tilde", float, tilde_default),
    )
    return make_chain(kind, n, couplings)


def state_from(cfg: Config) -> InitialState:
    return InitialState(
        StateKind(cfg.get("state", "kind", str, "psi_plus")),
        cfg.get("state", "delta_alpha", float, 0.0),
        cfg.get("state", "delta_gamma", float, 0.0),
    )


def sweep_config_from(cfg: Config, section: str, n_chain: int, workers: int, objective=None) -> SweepConfig:
    objective = Objective(cfg.get(section, "objective", str, objective or Objective.RECEIVER_EOF.value))
    refine = cfg.get(section, "tau_refine_step", float, 0.001)
    return SweepConfig(
        jm_lo=cfg.get(section, "jm_lo", float),
        jm_hi=cfg.get(section, "jm_hi", float),
        jm_coarse_step=cfg.get(section, "jm_coarse_step", float, 0.01),
        jm_refine_step=cfg.get(section, "jm_refine_step", float, 0.001),
        tau_max=cfg.get(section, "tau_max", float, default_tau_max(n_chain, objective)),
        tau_step=cfg.get(section, "tau_step", float, 0.01),
        tau_refine_step=refine if refine > 0 else None,
        objective=objective,
        workers=workers,
    )


def p_grid_from(cfg: Config, section: str, default: np.ndarray) -> np.ndarray:
    if "p_grid" in cfg.data.get(section, {}):
        return np.asarray(cfg.get(section, "p_grid", list), dtype=float)
    if "p_hi" in cfg.data.get(section, {}):
        lo = cfg.get(section, "p_lo", float, 0.0)
        hi = cfg.get(section, "p_hi", float)
        step = cfg.get(section, "p_step", float)
        n = math.floor((hi - lo) / step + 1e-9)
        return np.round(lo + step * np.arange(n + 1), 12)
    return default


def point_from(cfg: Config, section: str, clean: ChainSpec, workers: int) -> OptimalPoint:
    """Fixed (jm_star, tau_star) from the section, or a fresh sweep from [sweep]."""
    table = cfg.data.get(section, {})
    if "jm_star" in table or "tau_star" in table:
        return OptimalPoint(cfg.get(section, "jm_star", float), cfg.get(section, "tau_star", float), float("nan"))
    if not cfg.has("sweep"):
        raise ConfigError(f"{cfg._where(section)}: [{section}] needs `jm_star` and `tau_star`, or a [sweep] section")
    sc = sweep_config_from(cfg, "sweep", clean.n_chain, workers)
    return sweep(clean, StateKind.PSI_PLUS, sc).best


# ---------------------------------------------------------------------------
# commands; each returns the list of files written


def cmd_trace(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    spec = chain_from(cfg)
    tau_max = cfg.get("trace", "tau_max", float, default_tau_max(spec.n_chain))
    tau_step = cfg.get("trace", "tau_step", float, 0.01)
    records = time_trace(spec, state_from(cfg), tau_max, tau_step)
    best = max(records, key=lambda r: r.eof)
    log.info("peak EoF %.6f at tau %.4f", best.eof, best.tau)
    return [csvio.write_trace(out / "trace.csv", records)]


def cmd_sweep(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    spec = chain_from(cfg)
    sc = sweep_config_from(cfg, "sweep", spec.n_chain, ctx["workers"])
    result = sweep(spec, state_from(cfg), sc)
    b = result.best
    log.info("optimum jm=%.4f tau=%.4f objective=%.6f", b.jm_star, b.tau_star, b.objective_value)
    return [
        csvio.write_sweep(out / "sweep.csv", result.coarse),
        csvio.write_sweep(out / "sweep_refined.csv", result.refined),
        csvio.write_optimum(out / "optimum.csv", [b]),
    ]


def cmd_compare(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    n = cfg.get("compare", "n_chain", int)
    sc = SweepConfig(
        jm_lo=cfg.get("compare", "jm_lo", float, -50.0),
        jm_hi=cfg.get("compare", "jm_hi", float, 50.0),
        jm_coarse_step=cfg.get("compare", "jm_coarse_step", float, 0.01),
        jm_refine_step=cfg.get("compare", "jm_refine_step", float, 0.001),
        tau_max=cfg.get("compare", "tau_max", float, 25 * math.pi),
        tau_step=cfg.get("compare", "tau_step", float, 0.01),
        workers=ctx["workers"],
    )
    table = configuration_comparison(n, (sc.jm_lo, sc.jm_hi), sc.tau_max, sc)
    rows = []
    for label, pt in table:
        kind, ja, jat, jb, jbt = PRESETS[label]
        rows.append((label, kind.value, ja, jat, jb, jbt, pt.jm_star, pt.tau_star, pt.objective_value))
    header = ("label", "kind", "j_a", "j_a_tilde", "j_b", "j_b_tilde", "jm_star", "tau_star", "objective_value")
    return [csvio.write_rows(out / "compare.csv", header, rows)]


def cmd_disorder(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    clean = chain_from(cfg)
    point = point_from(cfg, "disorder", clean, ctx["workers"])
    d = DisorderSpec(0.0, ctx["seed"], cfg.get("disorder", "n_realizations", int, 10000))
    grid = p_grid_from(cfg, "disorder", default_disorder_grid())
    summary = disorder_study(clean, point, d, grid, workers=ctx["workers"])
    for p, m, f in zip(summary.p_grid, summary.mean, summary.fraction_beating_clean):
        log.info("p=%.4f mean=%.4f beating_clean=%.3f", p, m, f)
    return csvio.write_disorder(out, summary, point)


def cmd_perturb(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    clean = chain_from(cfg)
    point = point_from(cfg, "perturb", clean, ctx["workers"])
    grid = p_grid_from(cfg, "perturb", default_perturbation_grid())
    n = cfg.get("perturb", "n_per_p", int, 1000)
    summary = perturbation_study(clean, point, grid, n, ctx["seed"])
    return csvio.write_perturbation(out, summary, point)


def cmd_single(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    n = cfg.get("single", "n_chain", int)
    sc = sweep_config_from(cfg, "single", n, ctx["workers"], Objective.RECEIVER_SINGLE_FIDELITY.value)
    branched, standard = single_excitation_study(n, sc)
    rows = [("branched",) + _pt(branched), ("standard",) + _pt(standard)]
    return [csvio.write_rows(out / "single.csv", ("model", "jm_star", "tau_star", "fidelity"), rows)]


def _pt(p: OptimalPoint) -> tuple:
    return (p.jm_star, p.tau_star, p.objective_value)


def cmd_oracle_check(cfg: Config, out: Path, ctx: dict) -> list[Path]:
    spec = chain_from(cfg)
    if spec.dim > ORACLE_MAX_QUBITS:
        raise ConfigError(f"{cfg._where('chain', 'n_chain')}: oracle-check supports at most {ORACLE_MAX_QUBITS} qubits")
    tau_max = cfg.get("oracle", "tau_max", float, 25.0)
    n_tau = cfg.get("oracle", "n_tau", int, 50)
    states = cfg.data.get("oracle", {}).get("states", ["psi_plus", "single_excitation"])
    prop = diagonalize(build_generator(spec))
    rows = []
    worst = 0.0
    for name in states:
        state = InitialState(StateKind(name))
        c0 = initial_amplitudes(state, spec)
        for tau in np.linspace(0.0, tau_max, n_tau):
            dev = float(np.max(np.abs(evolve(prop, c0, tau).amplitudes - full_space_oracle(spec, state, tau).amplitudes)))
            worst = max(worst, dev)
            rows.append((name, tau, dev))
    ctx["report"] = {"max_abs_deviation": worst, "tolerance": ORACLE_TOL, "passed": worst < ORACLE_TOL}
    print(f"oracle-check: max amplitude deviation {worst:.3e} (tolerance {ORACLE_TOL:.0e})")
    path = csvio.write_rows(out / "oracle.csv", ("state", "tau", "max_abs_deviation"), rows)
    if worst >= ORACLE_TOL:
        raise ValidationFailure(f"subspace evolution deviates from the full-space oracle by {worst:.3e}")
    return [path]


class ValidationFailure(RuntimeError):
    """A physical check ran to completion and failed."""


HANDLERS = {
    "trace": cmd_trace,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "disorder": cmd_disorder,
    "perturb": cmd_perturb,
    "single": cmd_single,
    "oracle-check": cmd_oracle_check,
}

PLOTS = {"trace": [("trace.csv", "trace")], "sweep": [("sweep.csv", "sweep")], "disorder": [("disorder.csv", "disorder_scatter")]}


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(command: str, config_path, out_dir, seed: int | None = None, workers: int | None = None, plot: bool = False) -> int:
    if command not in HANDLERS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 1
    start = time.perf_counter()
    try:
        cfg = Config.load(config_path)
        if seed is None:
            seed = cfg.get("run", "seed", int, 0)
        if workers is None:
            workers = cfg.get("run", "workers", int, int(os.environ.get(WORKERS_ENV, "1")))
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ctx: dict[str, Any] = {"seed": seed, "workers": workers}
        outputs = HANDLERS[command](cfg, out, ctx)
    except (ConfigError, ValueError, KeyError, ValidationFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported, mapped to exit 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if plot:
        for name, kind in PLOTS.get(command, []):
            try:
                outputs.append(emit_plot(out / name, kind))
            except Exception as exc:  # noqa: BLE001 - plots never gate the numerics
                log.warning("plot %s skipped: %s", name, exc)
    manifest = {
        "command": command,
        "config_path": str(config_path),
        "config": cfg.data,
        "base_seed": seed,
        "prng": PRNG_NAME,
        "workers": workers,
        "version": __version__,
        "duration_s": round(time.perf_counter() - start, 3),
        "outputs": {p.name: sha256(p) for p in outputs},
    }
    if "report" in ctx:
        manifest["report"] = ctx["report"]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bellchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="base seed (overrides [run].seed)")
        p.add_argument("--workers", type=int, default=None, help=f"worker processes (default: ${WORKERS_ENV} or 1)")
        p.add_argument("--plot", action="store_true", help="also write SVG plots")
    p = sub.add_parser("plot", help="render a CSV written by trace/sweep/disorder")
    p.add_argument("csv")
    p.add_argument("--kind", required=True, choices=["trace", "sweep", "disorder_scatter"])
    p.add_argument("--out", default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "plot":
        try:
            print(emit_plot(args.csv, args.kind, args.out))
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 0
    return run(args.command, args.config, args.out, args.seed, args.workers, args.plot)


if __name__ == "__main__":
    sys.exit(main())
