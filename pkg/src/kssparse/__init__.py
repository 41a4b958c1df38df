"""Spectral column sparsification by repeated rank-one halving, with
constraint stacking and approximate John decompositions.

Every result carries a certificate recomputed by an eigensolve.
"""

__version__ = "0.1.0"

from .spectral_core import (  # noqa: F401
    ApproxCertificate,
    DiagonalReweighting,
    SymmetricSpectrum,
    approx_membership,
    loewner_leq,
    operator_norm,
    stable_rank,
    sym_eig,
)
from .halving import (  # noqa: F401
    HalvingCertificate,
    RankOneEnsemble,
    complement_split,
    gamma,
    halve,
    ks_existence_check,
)
from .sparsifier import (  # noqa: F401
    InfeasibleError,
    SparsifyResult,
    SplitPlan,
    choose_k,
    equal_weight_sparsify,
    split_equalize,
    theorem1_sparsify,
)
from .constraints import (  # noqa: F401
    ConstraintProblem,
    ConstraintResult,
    HypothesisViolated,
    schur_witness,
    stack,
    theorem2_verify,
)
from .john import (  # noqa: F401
    JohnDecomposition,
    JohnSparsification,
    JohnValidationError,
    canonical_john,
    cor_kernel_deflate,
    john_sparsify,
    validate_john,
)
