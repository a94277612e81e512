"""ellipack: exact and certified symplectic ellipsoid embedding computations.

Capacity sequences and lattice counts for four-dimensional ellipsoids, a
finite decision procedure for 4D ellipsoid embeddings with exact obstruction
witnesses, certified higher-dimensional embedding certificate chains, and
packing-stability bounds.
"""

__version__ = "0.1.0"

from .scalar import (  # noqa: F401
    Cmp3,
    DEFAULT_PRECISION,
    DomainError,
    EllipackError,
    NegativeResultError,
    Precision,
    PrecisionExhausted,
    Rat,
    ScalarParseError,
    XReal,
    cmp,
    nth_root,
    rat_parse,
)
from .radicals import (  # noqa: F401
    Check,
    Radical,
    certified_check,
    compare_terms,
    parse_scalar,
)
from .ech import (  # noqa: F401
    CapSeq,
    Ellipsoid,
    cap_sequence,
    caps_csv,
    lattice_count,
    parabola_lower,
    parabola_upper,
)
from .decide4d import (  # noqa: F401
    Decision,
    Justification,
    Outcome,
    Rule,
    Witness,
    cor_onecor_applies,
    cutoff_y0,
    decide,
    m_of,
    thm_oneemb_applies,
)
from .planner import (  # noqa: F401
    Certificate,
    CertificateError,
    EmbeddingStep,
    HypothesisFailure,
    VolumeObstruction,
    certificate_from_json,
    general_chain,
    main_chain,
    pack_balls_step,
    pack_ellipsoids_step,
    rebalance,
    s_constant,
    verify_certificate,
)
from .stability import (  # noqa: F401
    CPn,
    GenericFilling,
    Hypersurface,
    StabReport,
    ThresholdFailure,
    chain_condition,
    chain_condition_hyp,
    cpn_chain,
    hnd_chain,
    nstab_cpn,
    nstab_filling,
    nstab_hnd,
)
