"""Two-projection geometry, projection lattices and finite *-algebra structure."""

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    IllConditionedError,
    MatrixFormatError,
    NotApplicableError,
    NotAProjectionError,
    NotHermitianError,
    ValidationError,
)
from .linalg_core import (
    DEFAULT_TOLERANCE,
    HermitianSpectrum,
    Tolerance,
    cluster_eigenvalues,
    hermitian_eig,
    op_norm,
)
from .two_projections import (
    EquivalenceReport,
    ProjectionMatrix,
    TwoProjectionForm,
    angle_c,
    bad_pair_from_spectrum,
    canonical_form,
    equivalence_battery,
    join,
    meet,
    planar_pair,
    reconstruct_pair,
    truncated_counterexample,
)
from .algebra_closure import (
    CenterReport,
    SpanAlgebra,
    angle_audit,
    center_of,
    extract_equivalent_minimals,
    membership_residual,
    minimality_check,
    span_closure,
    unit_of,
)
from .extension_model import (
    BlockSystem,
    ExtensionElement,
    angle_in_extension,
    decompose_projection,
    forbidden_family_scan,
    lift_projection,
    make_projection,
)

__version__ = "0.1.0"
