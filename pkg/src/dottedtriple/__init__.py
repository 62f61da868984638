"""Simulation and analysis of trap-based verifiable blind quantum computation
on dotted triple-graph resources."""

from __future__ import annotations

from .adversary import AttackSpec, PauliMixture, PauliOp, classify, ft_required_support, support_locations
from .analysis import BoundSpec, bound, exact_evasion, g_factor, icl_product_check, monte_carlo_evasion
from .coloring import (
    Colour,
    TrapColouring,
    break_red,
    epsilon_set,
    greedy_icl_subset,
    is_icl,
    role_partition,
    sample_trap_colouring,
    validate_trap_colouring,
)
from .errors import InputError, ResourceLimitError, SequencingError
from .graph_core import Graph, Location, break_vertices, dot, dotted_triple, three_dotted_copies
from .mbqc import MeasurementPattern, QuantumState, bridge_pattern, prepare_graph_state, reference_run
from .protocol import (
    HonestProver,
    Job,
    PauliAttackProver,
    compute_delta,
    prepare_initial_qubits,
    repetition_driver,
    run_protocol,
    sample_secrets,
    three_copies_driver,
)

__version__ = "0.1.0"

__all__ = [
    "AttackSpec",
    "BoundSpec",
    "Colour",
    "Graph",
    "HonestProver",
    "InputError",
    "Job",
    "Location",
    "MeasurementPattern",
    "PauliAttackProver",
    "PauliMixture",
    "PauliOp",
    "QuantumState",
    "ResourceLimitError",
    "SequencingError",
    "TrapColouring",
    "bound",
    "break_red",
    "break_vertices",
    "bridge_pattern",
    "classify",
    "compute_delta",
    "dot",
    "dotted_triple",
    "epsilon_set",
    "exact_evasion",
    "ft_required_support",
    "g_factor",
    "greedy_icl_subset",
    "icl_product_check",
    "is_icl",
    "monte_carlo_evasion",
    "prepare_graph_state",
    "prepare_initial_qubits",
    "reference_run",
    "repetition_driver",
    "role_partition",
    "run_protocol",
    "sample_secrets",
    "sample_trap_colouring",
    "support_locations",
    "three_copies_driver",
    "three_dotted_copies",
    "validate_trap_colouring",
]
