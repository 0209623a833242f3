"""Criteria and certificates for multipartite entanglement structure."""

from .partitions import (
    DomainError,
    Partition,
    PartitionType,
    StructureClass,
    enumerate_partitions,
    gamma_max,
    in_class,
    maximal_elements,
    partition_type,
    refines,
)
from .qstate import (
    DensityMatrix,
    LocalDims,
    PureState,
    fidelity,
    flat_index,
    frobenius_distance,
    make_state,
    maximally_mixed,
    mix,
    multi_index,
    white_noise,
)
from .witness import (
    ElementInequality,
    HyperplaneWitness,
    build_eta,
    candidate_sets,
    default_pairs,
    evaluate,
    generate_witness,
    noise_threshold,
    swap_inequality,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
