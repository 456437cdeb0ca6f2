"""Chain topologies, coupling constants and static-disorder realizations.

Sites are labelled ``"A"``, ``1`` ... ``N``, ``"B"``.  The branched chain is
ordered ``(A, 1, 2, ..., N, B)``; the standard chain is ``(1, ..., N)``.
All couplings are in units of J.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping, Union

import numpy as np

Site = Union[int, str]
Edge = tuple[Site, Site]

#: Bit generator behind every disorder draw; recorded in run manifests.
PRNG_NAME = "numpy.PCG64 seeded by SeedSequence(entropy=base_seed, spawn_key=(index,))"


class Kind(str, enum.Enum):
    STANDARD = "standard"
    BRANCHED = "branched"


@dataclass(frozen=True)
class CouplingSet:
    j_a: float = 1.0
    j_a_tilde: float = 1.0
    j_m: float = 1.0
    j_b: float = 1.0
    j_b_tilde: float = 1.0

    def __post_init__(self):
        for name in ("j_a", "j_a_tilde", "j_m", "j_b", "j_b_tilde"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"coupling {name} must be finite, got {value!r}")

    @classmethod
    def standard(cls, j_a: float = 1.0, j_m: float = 1.0, j_b: float = 1.0) -> "CouplingSet":
        return cls(j_a=j_a, j_a_tilde=0.0, j_m=j_m, j_b=j_b, j_b_tilde=0.0)


@dataclass(frozen=True)
class ChainSpec:
    """A chain topology with its couplings.

    ``edge_multipliers`` maps an edge (as returned by :func:`edge_list`) to
    its disorder factor ``1 + delta``.  ``None`` means a clean chain.
    """

    kind: Kind
    n_chain: int
    couplings: CouplingSet
    edge_multipliers: Mapping[Edge, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n_chain < 4:
            raise ValueError(f"n_chain must be >= 4, got {self.n_chain}")
        if self.kind is Kind.STANDARD and (
            self.couplings.j_a_tilde != 0.0 or self.couplings.j_b_tilde != 0.0
        ):
            raise ValueError("standard chain requires j_a_tilde = j_b_tilde = 0")
        if self.edge_multipliers is not None:
            known = {(a, b) for a, b, _ in _clean_edges(self)}
            for edge, m in self.edge_multipliers.items():
                if edge not in known:
                    raise ValueError(f"multiplier given for unknown edge {edge!r}")
                if not (math.isfinite(m) and m > 0):
                    raise ValueError(f"edge multiplier for {edge!r} must be finite and > 0, got {m!r}")

    @property
    def sites(self) -> tuple[Site, ...]:
        backbone = tuple(range(1, self.n_chain + 1))
        if self.kind is Kind.BRANCHED:
            return ("A",) + backbone + ("B",)
        return backbone

    @property
    def dim(self) -> int:
        return self.n_chain + 2 if self.kind is Kind.BRANCHED else self.n_chain

    def index(self, site: Site) -> int:
        """Position of ``site`` in the amplitude vector."""
        if self.kind is Kind.BRANCHED:
            if site == "A":
                return 0
            if site == "B":
                return self.n_chain + 1
            offset = 0
        else:
            if site in ("A", "B"):
                raise KeyError(f"standard chain has no site {site!r}")
            offset = -1
        if not (isinstance(site, (int, np.integer)) and 1 <= site <= self.n_chain):
            raise KeyError(f"no site {site!r} in a chain with N={self.n_chain}")
        return int(site) + offset

    @property
    def sender_pair(self) -> tuple[Site, Site]:
        """Alice's two qubits, in the order the input Bell state is written."""
        return ("A", 1) if self.kind is Kind.BRANCHED else (1, 2)

    @property
    def receiver_pair(self) -> tuple[Site, Site]:
        """Bob's two qubits, in the order the reduced state is written."""
        n = self.n_chain
        return (n, "B") if self.kind is Kind.BRANCHED else (n - 1, n)

    @property
    def receiver_site(self) -> Site:
        return "B" if self.kind is Kind.BRANCHED else self.n_chain

    def with_jm(self, j_m: float) -> "ChainSpec":
        return replace(self, couplings=replace(self.couplings, j_m=float(j_m)))

    def is_mirror_symmetric(self) -> bool:
        c = self.couplings
        return (
            self.kind is Kind.BRANCHED
            and self.edge_multipliers is None
            and c.j_a == c.j_a_tilde == c.j_b == c.j_b_tilde
        )


@dataclass(frozen=True)
class DisorderSpec:
    p: float
    base_seed: int
    n_realizations: int

    def __post_init__(self):
        if not (0.0 <= self.p < 1.0):
            raise ValueError(f"disorder strength p must lie in [0, 1), got {self.p!r}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be positive")
        if not (0 <= self.base_seed < 2**64):
            raise ValueError("base_seed must be an unsigned 64-bit integer")


def make_chain(kind: Kind | str, n_chain: int, couplings: CouplingSet) -> ChainSpec:
    return ChainSpec(Kind(kind), int(n_chain), couplings)


def _clean_edges(spec: ChainSpec) -> list[tuple[Site, Site, float]]:
    c = spec.couplings
    n = spec.n_chain
    edges: list[tuple[Site, Site, float]] = []
    if spec.kind is Kind.BRANCHED:
        edges.append(("A", 2, c.j_a_tilde))
    edges.append((1, 2, c.j_a))
    edges.extend((j, j + 1, c.j_m) for j in range(2, n - 1))
    edges.append((n - 1, n, c.j_b))
    if spec.kind is Kind.BRANCHED:
        edges.append((n - 1, "B", c.j_b_tilde))
    return edges


def edge_list(spec: ChainSpec) -> list[tuple[Site, Site, float]]:
    """Edges as ``(site, site, strength)``, disorder multipliers applied.

    Order: A-branch edge, backbone edges by site, B-branch edge.
    """
    edges = _clean_edges(spec)
    if spec.edge_multipliers is None:
        return edges
    mult = spec.edge_multipliers
    return [(a, b, s * mult.get((a, b), 1.0)) for a, b, s in edges]


def realization_rng(base_seed: int, index: int) -> np.random.Generator:
    """Independent stream for disorder realization ``index``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def disorder_deltas(base_seed: int, index: int, n_edges: int, p: float) -> np.ndarray:
    """Fractional deviations for each edge ordinal of one realization.

    Edge ``k`` always receives the ``k``-th uniform of the realization's
    stream, so the value depends only on ``(base_seed, index, k)`` and ``p``.
    """
    u = realization_rng(base_seed, index).random(n_edges)
    return p * (2.0 * u - 1.0)


def sample_disorder(clean: ChainSpec, spec: DisorderSpec, index: int) -> ChainSpec:
    if clean.edge_multipliers is not None:
        raise ValueError("sample_disorder expects a clean chain")
    if not (0 <= index < spec.n_realizations):
        raise IndexError(f"realization index {index} outside [0, {spec.n_realizations})")
    if spec.p == 0.0:
        return clean
    edges = _clean_edges(clean)
    deltas = disorder_deltas(spec.base_seed, index, len(edges), spec.p)
    mult = {(a, b): 1.0 + float(d) for (a, b, _), d in zip(edges, deltas)}
    return replace(clean, edge_multipliers=mult)
