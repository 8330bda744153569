"""Exact Ewens sampling formula kernels and their boundary-field consistency on regular trees."""
from .consistency import (
    ConsistencyReport,
    FieldTable,
    SolverResult,
    consistency_rhs,
    esf_ratio,
    field_weight,
    marginal_check,
    multiplicative_kernel,
    region_partition_function,
    solve_boundary_field,
)
from .hamiltonian import (
    IncrementFactor,
    Occupancy,
    SummabilityReport,
    config_probability,
    ewens_weight,
    log_weight,
    increment_factor,
    multiplicity,
    occupancy,
    potential_sup_term,
    summability_scan,
)
from .partitions import (
    AlleleCounts,
    crp_sample,
    enumerate_partitions,
    esf_distribution,
    esf_normalizer,
    esf_probability,
    permutation_cycle_oracle,
    sample_partitions,
)
from .tree import (
    GrowthStep,
    SpinConfiguration,
    TreeRegion,
    build_ball,
    extend_configuration,
    growth_step,
    outer_boundary,
)

__version__ = "0.1.0"
