"""Rational canonical forms over F_p and Cohen-Lenstra statistics of random matrices."""
from .canonical import companion, is_similar, rcf, rcf_of_type
from .errors import (
    AmbientMismatchError,
    ConsistencyError,
    DistributionError,
    DomainError,
    RcfError,
    ResourceGuardError,
    ShapeError,
    SingularityError,
)
from .fp import (
    IrreduciblePoly,
    Poly,
    divrem,
    factor,
    format_poly,
    gcd,
    is_irreducible,
    irreducibles,
    make_monic,
    parse_irreducible,
    parse_poly,
    squarefree_decomposition,
    val_f,
)
from .matrix import MatFp, charpoly, mat_poly_eval, parse_matrix, rank, rank_batch
from .measures import MeasureValue, aut_cardinality, mu, nu, pochhammer, product_measure, product_nu
from .moduletype import ModuleType, format_module_type, parse_module_type
from .modules import (
    FiniteModule,
    aut_count_bruteforce,
    aut_count_generators,
    exact_moment,
    hom_count,
    realize,
    submodules,
    sur_count_from_matrix,
    type_of,
)
from .partitions import Partition, conjugate, enumerate_partitions, multiplicity, size, weighted_index
from .sampler import (
    EntryDist,
    EntryGrid,
    ExperimentConfig,
    ExperimentReport,
    run_convergence_experiment,
    run_experiment,
    run_moment_experiment,
    run_multiplicity_experiment,
    sample_matrix,
    validate_dist,
)
from .snf import (
    InvariantFactors,
    MatPoly,
    char_matrix,
    char_type,
    cokernel_type,
    smith_normal_form,
    type_at,
    type_at_rank_oracle,
)

__version__ = "0.1.0"
