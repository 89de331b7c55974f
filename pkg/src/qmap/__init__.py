"""Completely positive and q-positive maps on matrix algebras."""

__version__ = "0.1.0"

from .config import DEFAULT, ToleranceConfig  # noqa: E402
from .superop import (  # noqa: E402
    RectangularMap,
    Superoperator,
    adjoint_corner,
    apply,
    assemble_block_map,
    choi_matrix,
    conjugate_map,
    is_completely_positive,
    is_schur_map,
    kraus_decomposition,
    schur_map,
    superop_from_kraus,
)
from .resolvent import (  # noqa: E402
    certify_q_positive,
    has_no_negative_eigenvalues,
    phi_r_family,
    q_threshold,
    resolvent_map,
    spectrum,
)
from .limits import (  # noqa: E402
    annihilator_compression_witness,
    is_idempotent_ucp,
    limit_map,
    q_dominates,
    rank2_m2_subordinate_witness,
    subordinate,
    verify_limit_properties,
)
from .corners import (  # noqa: E402
    CornerProblem,
    flip_corner,
    hypermax_refutation_search,
    is_corner,
    is_q_corner,
    limit_corner,
)
from .classify import (  # noqa: E402
    canonical_rank2_params,
    classify_E2,
    classify_E3,
    classify_unital_qpos_m2,
    extract_generator_Y,
    qpure_invertible_canonical,
    random_unital_qpos_m2,
)
