"""Expected facet numbers and volumes of random polytopes.

Three routes to E f_{d-1}: convex-hull Monte Carlo, a facet-probability
estimator over d-tuples, and quadrature of a reduced one-dimensional integral
for rotation-invariant models, plus the monotonicity and concavity checks
built on top of them.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .calculus import (
    ConcavityCertificate,
    MonotonicityReport,
    SectionConstant,
    SectionProfile,
    beta_identity_check,
    concavity_check,
    delta_I,
    expected_facets,
    expected_facets_estimate,
    integral_I,
    profile_L,
    section_constant,
    section_profile,
)
from .distributions import (
    BallModel,
    BodyModel,
    GaussianModel,
    HalfspaceMasses,
    HPolytope,
    PolytopeModel,
    halfspace_mass,
    make_model,
)
from .errors import (
    AmbiguousFace,
    ContainmentUnverified,
    DegenerateInput,
    DomainError,
    QuadratureNoConvergence,
    RandpolyError,
    RejectionBudgetExceeded,
    UnsupportedModel,
)
from .estimate import EstimateCI
from .geometry import Hyperplane, affine_hyperplane, side_of, simplex_volume
from .hull import Facet, HullComplex, convex_hull, f_vector, hull_volume
from .montecarlo import (
    InclusionResult,
    facet_prob_estimator,
    inclusion_experiment,
    mc_expected_fvector,
    mc_expected_volume,
    monotonicity_sweep,
)
