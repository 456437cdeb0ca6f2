"""Study campaigns built on the sweep optimizer.

* static-disorder Monte Carlo at a fixed clean optimum,
* imperfect preparation of the input Bell state,
* comparison of end-coupling presets,
* single-excitation transfer in both chain kinds.

Every random draw comes from a numpy ``SeedSequence`` keyed by the base seed
and the draw's position, so results are identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .chain_model import (
    ChainSpec,
    CouplingSet,
    DisorderSpec,
    Kind,
    make_chain,
    sample_disorder,
)
from .evolution import (
    PSI_PLUS,
    SINGLE_EXCITATION,
    AmplitudeVector,
    build_generator,
    diagonalize,
    initial_amplitudes,
    perturbed,
    site_amplitudes,
)
from .measures import concurrence_pair, eof_from_concurrence
from .sweep import Objective, OptimalPoint, SweepConfig, optimize

# spawn-key tag separating input-perturbation streams from disorder streams
_PERTURB_STREAM = 0x5045_5254


@dataclass(frozen=True, eq=False)
class DisorderSummary:
    p_grid: np.ndarray
    samples: np.ndarray = field(repr=False)  # shape (len(p_grid), n_realizations)
    mean: np.ndarray
    min: np.ndarray
    max: np.ndarray
    fraction_beating_clean: np.ndarray
    clean_value: float

    @classmethod
    def from_samples(cls, p_grid, samples, clean_value: float) -> "DisorderSummary":
        samples = np.asarray(samples, dtype=float)
        p_grid = np.asarray(p_grid, dtype=float)
        mean = np.array([_exact_mean(row) for row in samples])
        return cls(
            p_grid=p_grid,
            samples=samples,
            mean=mean,
            min=samples.min(axis=1),
            max=samples.max(axis=1),
            fraction_beating_clean=(samples > clean_value).mean(axis=1),
            clean_value=float(clean_value),
        )

    @property
    def n_realizations(self) -> int:
        return self.samples.shape[1]

    def fraction_above_mean(self) -> np.ndarray:
        return (self.samples > self.mean[:, None]).mean(axis=1)


@dataclass(frozen=True, eq=False)
class PerturbationSummary:
    p_grid: np.ndarray
    ratios: np.ndarray = field(repr=False)  # shape (len(p_grid), n_per_p)
    mean_ratio: np.ndarray
    min_ratio: np.ndarray
    clean_eof: float

    @classmethod
    def from_ratios(cls, p_grid, ratios, clean_eof: float) -> "PerturbationSummary":
        ratios = np.asarray(ratios, dtype=float)
        return cls(
            p_grid=np.asarray(p_grid, dtype=float),
            ratios=ratios,
            mean_ratio=np.array([_exact_mean(row) for row in ratios]),
            min_ratio=ratios.min(axis=1),
            clean_eof=float(clean_eof),
        )


def _exact_mean(values: np.ndarray) -> float:
    # fsum is exactly rounded, hence independent of summation order
    return math.fsum(np.sort(values)) / len(values)


def default_disorder_grid() -> np.ndarray:
    """0.1% ... 5% in steps of 0.1%."""
    return np.round(0.001 * np.arange(1, 51), 12)


def default_perturbation_grid() -> np.ndarray:
    """0% ... 10% in steps of 0.2%."""
    return np.round(0.002 * np.arange(0, 51), 12)


def receiver_eof_at(spec: ChainSpec, tau: float, state=PSI_PLUS) -> float:
    prop = diagonalize(build_generator(spec))
    first, second = spec.receiver_pair
    amps = site_amplitudes(prop, initial_amplitudes(state, spec), [spec.index(first), spec.index(second)], [tau])
    return float(eof_from_concurrence(concurrence_pair(amps[0, 0], amps[1, 0])))


def _disorder_chunk(base: ChainSpec, tau: float, p: float, base_seed: int, n: int, start: int, stop: int) -> np.ndarray:
    d = DisorderSpec(p, base_seed, n)
    return np.array([receiver_eof_at(sample_disorder(base, d, i), tau) for i in range(start, stop)])


def disorder_study(
    clean: ChainSpec,
    point: OptimalPoint,
    d: DisorderSpec,
    p_grid=None,
    workers: int = 1,
) -> DisorderSummary:
    """Receiver EoF under static coupling disorder at the clean optimum.

    J_m and the readout time stay at ``point``; only the couplings fluctuate.
    ``d.p`` is ignored in favour of each entry of ``p_grid``.
    """
    p_grid = default_disorder_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if np.any(p_grid < 0) or np.any(p_grid >= 1):
        raise ValueError("disorder strengths must lie in [0, 1)")
    base = clean.with_jm(point.jm_star)
    tau = point.tau_star
    clean_value = receiver_eof_at(base, tau)
    n = d.n_realizations
    tasks = []
    n_chunks = max(1, workers * 4)
    bounds = np.linspace(0, n, n_chunks + 1).astype(int)
    for p in p_grid:
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi > lo:
                tasks.append((base, tau, float(p), d.base_seed, n, int(lo), int(hi)))
    if workers == 1:
        parts = [_disorder_chunk(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_disorder_chunk, *zip(*tasks)))
    samples = np.concatenate(parts).reshape(len(p_grid), n)
    return DisorderSummary.from_samples(p_grid, samples, clean_value)


def _perturbation_rng(base_seed: int, p_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(_PERTURB_STREAM, int(p_index)))
    return np.random.Generator(np.random.PCG64(ss))


def perturbation_study(
    clean: ChainSpec,
    point: OptimalPoint,
    p_grid=None,
    n_per_p: int = 1000,
    base_seed: int = 0,
) -> PerturbationSummary:
    """Receiver EoF for imperfect input states, relative to the |Psi+> input.

    The dynamics is linear, so the 2x2 map from the sender amplitudes to the
    receiver amplitudes at the readout time is computed once and reused.
    """
    p_grid = default_perturbation_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    if np.any(p_grid < 0) or np.any(p_grid >= 1):
        raise ValueError("perturbation strengths must lie in [0, 1)")
    spec = clean.with_jm(point.jm_star)
    prop = diagonalize(build_generator(spec))
    rx = [spec.index(s) for s in spec.receiver_pair]
    transfer = np.empty((2, 2), dtype=complex)
    for col, site in enumerate(spec.sender_pair):
        e = np.zeros(spec.dim, dtype=complex)
        e[spec.index(site)] = 1.0
        transfer[:, col] = site_amplitudes(prop, AmplitudeVector(e), rx, [point.tau_star])[:, 0]

    def eof_for(state) -> float:
        cn, cb = transfer @ np.array(state.pair_amplitudes())
        return float(eof_from_concurrence(concurrence_pair(cn, cb)))

    clean_eof = eof_for(PSI_PLUS)
    if clean_eof < 1e-12:
        raise ValueError("clean input transmits no entanglement at this point; ratios undefined")
    ratios = np.empty((len(p_grid), n_per_p))
    for pi, p in enumerate(p_grid):
        rng = _perturbation_rng(base_seed, pi)
        for k in range(n_per_p):
            while True:
                da, dg = rng.uniform(-p, p, size=2)
                if abs(1.0 + da) / math.sqrt(2.0) <= 1.0:
                    break
            ratios[pi, k] = eof_for(perturbed(da, dg)) / clean_eof
    return PerturbationSummary.from_ratios(p_grid, ratios, clean_eof)


# End-coupling presets: label -> (kind, j_a, j_a_tilde, j_b, j_b_tilde).
# (a) and (e) are the optima reported for the branched and standard chains;
# the others vary ratios among the four end couplings.
PRESETS: dict[str, tuple[Kind, float, float, float, float]] = {
    "a": (Kind.BRANCHED, 1.0, 1.0, 1.0, 1.0),
    "b": (Kind.BRANCHED, 1.0, 2.0, 1.0, 2.0),
    "c": (Kind.BRANCHED, 1.0, 1.0, 1.0, 2.0),
    "d": (Kind.BRANCHED, 1.0, 0.5, 1.0, 0.5),
    "e": (Kind.STANDARD, 1.0, 0.0, 1.0, 0.0),
    "f": (Kind.STANDARD, 0.5, 0.0, 0.5, 0.0),
}


def preset_chain(label: str, n_chain: int, j_m: float = 1.0) -> ChainSpec:
    kind, ja, jat, jb, jbt = PRESETS[label]
    return make_chain(kind, n_chain, CouplingSet(ja, jat, j_m, jb, jbt))


def configuration_comparison(
    n_chain: int,
    jm_range: tuple[float, float] = (-50.0, 50.0),
    tau_max: float = 25 * math.pi,
    cfg: SweepConfig | None = None,
    labels=None,
) -> list[tuple[str, OptimalPoint]]:
    """Optimize every preset with a |Psi+> input; best first."""
    if cfg is None:
        cfg = SweepConfig(jm_range[0], jm_range[1], tau_max=tau_max)
    else:
        cfg = replace(cfg, jm_lo=jm_range[0], jm_hi=jm_range[1], tau_max=tau_max)
    labels = list(PRESETS) if labels is None else list(labels)
    table = [(label, optimize(preset_chain(label, n_chain), PSI_PLUS, cfg)) for label in labels]
    # stable sort keeps preset order among exact ties
    return sorted(table, key=lambda row: -row[1].objective_value)


def single_excitation_study(n_chain: int, cfg: SweepConfig) -> tuple[OptimalPoint, OptimalPoint]:
    """Optimal single-excitation transfer for the (branched, standard) chains."""
    if cfg.objective is not Objective.RECEIVER_SINGLE_FIDELITY:
        raise ValueError("single_excitation_study needs objective=receiver_single_fidelity")
    branched = make_chain(Kind.BRANCHED, n_chain, CouplingSet())
    standard = make_chain(Kind.STANDARD, n_chain, CouplingSet.standard())
    return optimize(branched, SINGLE_EXCITATION, cfg), optimize(standard, SINGLE_EXCITATION, cfg)
