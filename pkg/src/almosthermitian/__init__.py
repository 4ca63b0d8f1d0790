"""
almosthermitian: canonical connection, torsion and curvature of almost
Hermitian charts, computed with truncated Taylor jets.

The main entry points are re-exported here; see the submodules for the
full interfaces.
"""

__version__ = "0.1.0"

from .jets import Jet, JetError, apply_vector_field, jet_mul  # noqa: E402
from .expr import ParseError, parse_expression  # noqa: E402
from .manifold import (  # noqa: E402
    ChartManifold,
    ConfigError,
    ValidationError,
    catalog,
    check_acs,
    get_manifold,
    hermitianize,
    load_manifold,
    nijenhuis,
    product_manifold,
)
from .frames import (  # noqa: E402
    DegenerateFrameError,
    FrameJet,
    coordinate_10_frame,
    lie_bracket,
    make_normal_frame,
    make_pseudo_holomorphic_frame,
    make_quasi_holomorphic_frame,
    projection_10,
    structure_functions,
)
from .connection import (  # noqa: E402
    canonical_connection,
    connection_by_axioms_oracle,
    covariant_derivative,
    torsion,
    verify_axioms,
)
from .curvature import (  # noqa: E402
    CurvatureComponents,
    InequalityReport,
    augment_metric,
    bisectional,
    curvature_from_definition,
    curvature_quasi_formula,
    decompose_product_form,
    product_metric,
    wu_report,
)
from .forms import FormField, dbar, fundamental_form, is_holomorphic_at  # noqa: E402
