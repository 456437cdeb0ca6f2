"""Bell-state transfer through XX spin chains with two branch qubits."""

from .chain_model import (
    ChainSpec,
    CouplingSet,
    DisorderSpec,
    Kind,
    edge_list,
    make_chain,
    sample_disorder,
)
from .evolution import (
    PSI_MINUS,
    PSI_PLUS,
    SINGLE_EXCITATION,
    AmplitudeVector,
    Generator,
    InitialState,
    SpectralPropagator,
    StateKind,
    build_generator,
    diagonalize,
    evolve,
    full_space_oracle,
    initial_amplitudes,
    perturbed,
)
from .measures import (
    ReducedPair,
    TransmissionRecord,
    bell_fidelity,
    concurrence_x,
    eof_from_concurrence,
    reduce_to_receiver_pair,
    single_site_fidelity,
    wootters_general,
)
from .sweep import Objective, OptimalPoint, SweepConfig, optimize, sweep, time_trace

__version__ = "0.1.0"
