"""Grid search over the bulk coupling J_m and the readout time.

For each J_m on a coarse grid the chain is diagonalized once and the
objective is sampled on a uniform time grid; the per-J_m peak is then
polished on a finer time grid.  The best coarse J_m is re-scanned at a finer
J_m step.  Candidates are ranked by (objective desc, tau asc, J_m asc), so the
result does not depend on how the J_m grid is split across workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain_model import ChainSpec
from .evolution import (
    InitialState,
    StateKind,
    as_initial_state,
    build_generator,
    diagonalize,
    initial_amplitudes,
    site_amplitude_series,
    site_amplitudes,
)
from .measures import TransmissionRecord, concurrence_pair, eof_from_concurrence


class Objective(str, enum.Enum):
    RECEIVER_EOF = "receiver_eof"
    RECEIVER_SINGLE_FIDELITY = "receiver_single_fidelity"
    RECEIVER_BELL_FIDELITY = "receiver_bell_fidelity"


@dataclass(frozen=True)
class SweepConfig:
    jm_lo: float
    jm_hi: float
    jm_coarse_step: float = 0.01
    jm_refine_step: float = 0.001
    tau_max: float = 25 * math.pi
    tau_step: float = 0.01
    objective: Objective = Objective.RECEIVER_EOF
    # None disables the per-J_m time polish
    tau_refine_step: float | None = 0.001
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        if not self.jm_lo <= self.jm_hi:
            raise ValueError(f"jm_lo ({self.jm_lo}) must not exceed jm_hi ({self.jm_hi})")
        if self.jm_coarse_step <= 0 or self.jm_refine_step <= 0 or self.tau_step <= 0:
            raise ValueError("grid steps must be positive")
        if self.jm_refine_step > self.jm_coarse_step:
            raise ValueError("jm_refine_step must not exceed jm_coarse_step")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")
        if self.tau_refine_step is not None and not 0 < self.tau_refine_step <= self.tau_step:
            raise ValueError("tau_refine_step must lie in (0, tau_step]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class OptimalPoint:
    jm_star: float
    tau_star: float
    objective_value: float
    objective: Objective = Objective.RECEIVER_EOF


@dataclass(frozen=True, eq=False)
class SweepResult:
    best: OptimalPoint
    # one row per evaluated J_m: (jm, tau_star, objective)
    coarse: np.ndarray = field(repr=False)
    refined: np.ndarray = field(repr=False)


def default_tau_max(n_chain: int, objective: Objective | str = Objective.RECEIVER_EOF) -> float:
    """Time window used for chains of this size (25 pi up to N=100)."""
    if n_chain <= 100:
        return 25 * math.pi
    if Objective(objective) is Objective.RECEIVER_SINGLE_FIDELITY:
        return 150 * math.pi
    return 80 * math.pi


def grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive grid ``lo, lo+step, ...`` not exceeding ``hi``, rounded to 12 decimals."""
    n = math.floor((hi - lo) / step + 1e-9)
    if n < 0:
        raise ValueError(f"empty grid: [{lo}, {hi}] with step {step}")
    return np.round(lo + step * np.arange(n + 1), 12)


def _n_tau_steps(tau_max: float, tau_step: float) -> int:
    return math.floor(tau_max / tau_step + 1e-9)


def objective_rows(spec: ChainSpec, objective: Objective) -> list[int]:
    if objective is Objective.RECEIVER_SINGLE_FIDELITY:
        return [spec.index(spec.receiver_site)]
    first, second = spec.receiver_pair
    return [spec.index(first), spec.index(second)]


def _score(objective: Objective, amps: np.ndarray, target: tuple[complex, complex]) -> np.ndarray:
    """Ranking score per time sample; for EoF this is the concurrence (same ordering)."""
    if objective is Objective.RECEIVER_SINGLE_FIDELITY:
        return np.abs(amps[0]) ** 2
    if objective is Objective.RECEIVER_EOF:
        return concurrence_pair(amps[0], amps[1])
    t_n, t_b = target
    return np.abs(np.conj(t_n) * amps[0] + np.conj(t_b) * amps[1]) ** 2


def _to_objective(objective: Objective, score: float) -> float:
    if objective is Objective.RECEIVER_EOF:
        return float(eof_from_concurrence(score))
    return float(min(1.0, score))


def evaluate_jm(template: ChainSpec, state: InitialState, cfg: SweepConfig, jm: float) -> tuple[float, float, float]:
    """Best ``(score, tau, objective)`` over the time window for one J_m."""
    spec = template.with_jm(jm)
    prop = diagonalize(build_generator(spec))
    c0 = initial_amplitudes(state, spec)
    rows = objective_rows(spec, cfg.objective)
    target = state.pair_amplitudes()
    n_steps = _n_tau_steps(cfg.tau_max, cfg.tau_step)
    scores = _score(cfg.objective, site_amplitude_series(prop, c0, rows, n_steps, cfg.tau_step), target)
    k = int(np.argmax(scores))
    best_score, best_tau = float(scores[k]), round(k * cfg.tau_step, 12)
    if cfg.tau_refine_step is not None:
        m = round(cfg.tau_step / cfg.tau_refine_step)
        taus = np.round(best_tau + cfg.tau_refine_step * np.arange(-m, m + 1), 12)
        taus = taus[(taus >= 0) & (taus <= cfg.tau_max)]
        fine = _score(cfg.objective, site_amplitudes(prop, c0, rows, taus), target)
        j = int(np.argmax(fine))
        if fine[j] > best_score:
            best_score, best_tau = float(fine[j]), float(taus[j])
    return best_score, best_tau, _to_objective(cfg.objective, best_score)


def _scan_chunk(template: ChainSpec, state: InitialState, cfg: SweepConfig, jms: np.ndarray) -> np.ndarray:
    out = np.empty((len(jms), 4))
    for i, jm in enumerate(jms):
        score, tau, value = evaluate_jm(template, state, cfg, float(jm))
        out[i] = (jm, tau, value, score)
    return out


def scan(template: ChainSpec, state, cfg: SweepConfig, jms: np.ndarray) -> np.ndarray:
    """Rows ``(jm, tau_star, objective, score)`` for each J_m, in input order."""
    state = as_initial_state(state)
    jms = np.asarray(jms, dtype=float)
    if cfg.workers == 1 or len(jms) < 2 * cfg.workers:
        return _scan_chunk(template, state, cfg, jms)
    chunks = np.array_split(jms, cfg.workers * 4)
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        parts = list(pool.map(_scan_chunk, *zip(*[(template, state, cfg, c) for c in chunks if len(c)])))
    return np.concatenate(parts)


def _pick(rows: np.ndarray) -> np.ndarray:
    # lexicographic: score desc, tau asc, jm asc
    order = np.lexsort((rows[:, 0], rows[:, 1], -rows[:, 3]))
    return rows[order[0]]


def sweep(template: ChainSpec, state, cfg: SweepConfig) -> SweepResult:
    if template.edge_multipliers is not None:
        raise ValueError("optimize expects a clean template chain")
    state = as_initial_state(state)
    coarse = scan(template, state, cfg, grid(cfg.jm_lo, cfg.jm_hi, cfg.jm_coarse_step))
    jm0 = float(_pick(coarse)[0])
    lo = max(cfg.jm_lo, jm0 - cfg.jm_coarse_step)
    hi = min(cfg.jm_hi, jm0 + cfg.jm_coarse_step)
    fine_grid = grid(lo, hi, cfg.jm_refine_step)
    if not np.any(np.isclose(fine_grid, jm0, rtol=0, atol=1e-12)):
        fine_grid = np.sort(np.append(fine_grid, jm0))
    refined = scan(template, state, cfg, fine_grid)
    jm, tau, value, _ = _pick(refined)
    best = OptimalPoint(float(jm), float(tau), float(value), cfg.objective)
    return SweepResult(best, coarse[:, :3], refined[:, :3])


def optimize(template: ChainSpec, state, cfg: SweepConfig) -> OptimalPoint:
    return sweep(template, state, cfg).best


def time_trace(spec: ChainSpec, state, tau_max: float, tau_step: float) -> list[TransmissionRecord]:
    """Receiver-side measures at ``tau = 0, tau_step, ..., <= tau_max``.

    Fidelity is the single-site fidelity for a single-excitation input and
    the overlap with the input pair state otherwise.
    """
    if tau_step <= 0:
        raise ValueError("tau_step must be positive")
    state = as_initial_state(state)
    prop = diagonalize(build_generator(spec))
    c0 = initial_amplitudes(state, spec)
    first, second = spec.receiver_pair
    rows = [spec.index(first), spec.index(second), spec.index(spec.receiver_site)]
    n_steps = _n_tau_steps(tau_max, tau_step)
    amps = site_amplitude_series(prop, c0, rows, n_steps, tau_step)
    conc = concurrence_pair(amps[0], amps[1])
    eof = eof_from_concurrence(conc)
    if state.kind is StateKind.SINGLE_EXCITATION:
        fid = np.abs(amps[2]) ** 2
    else:
        fid = _score(Objective.RECEIVER_BELL_FIDELITY, amps[:2], state.pair_amplitudes())
    fid = np.minimum(fid, 1.0)
    return [
        TransmissionRecord(round(k * tau_step, 12), float(conc[k]), float(eof[k]), float(fid[k]))
        for k in range(n_steps + 1)
    ]
