"""siplab: a numerical laboratory for semi-inner products on smooth normed spaces.

Computes the unique semi-inner product of smooth norm models, Birkhoff
orthogonality, best approximations and orthogonal decompositions, quotient
norms and pairings, p-sum spaces over finite supports, and builds replayable
certificates for a non-linear pairing-preserving map on such a sum space.
"""

from .certificates import Certificate
from .counterexample import (
    CounterexampleInstance,
    build_f,
    build_instance,
    certify_h,
    near_lp_family,
    search_nonlinear_complement,
    shift_map_h,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionMismatch,
    LayoutError,
    NoNonlinearComplementError,
    SiplabError,
    UnsupportedModelError,
    ZeroVectorError,
)
from .norms import (
    BlockNorm,
    FiniteSupportElement,
    LpNorm,
    NormModel,
    SumSpace,
    SumStream,
    default_mixed_block,
    finite_difference_gradient,
    mixed_block,
    model_from_config,
    model_to_config,
    norm_eval,
    support_functional,
)
from .ortho import (
    Decomposition,
    SubspaceBasis,
    best_approximation,
    birkhoff_check,
    complement_linearity_probe,
    orthogonal_decompose,
    sip_orthogonal,
)
from .quotient import (
    QuotientCoordNorm,
    QuotientElement,
    QuotientSpace,
    quotient_norm,
    quotient_sip,
    section_map,
    verify_section_sip,
)
from .sip import AxiomsReport, axioms_check, sip_eval, sip_sum_eval
from .verify import (
    finite_dim_sl_probe,
    hanner_check,
    hanner_suite,
    isometry_invariance_check,
    lp_sl_coordinate_case,
    thm2_forward_harness,
)

__version__ = "0.1.0"
