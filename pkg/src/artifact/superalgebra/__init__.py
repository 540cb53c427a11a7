"""Grassmann numbers, supermatrices and their canonical forms."""

from artifact.superalgebra.canonical import (
    CanonicalFormResult,
    canonical_form_antihermitian,
    canonical_form_antisym,
    canonical_form_generic,
    desoul,
    desoul_coefficients,
    orthogonalize_columns,
)
from artifact.superalgebra.errors import (
    GeneratorCountMismatch,
    ParityError,
    SingularBlock,
    SingularBody,
    SuperAlgebraError,
    SymmetryViolation,
    ZeroBody,
)
from artifact.superalgebra.grassmann import (
    GrassmannNumber,
    body_soul_split,
    gr_coeff,
    gr_conjugate,
    gr_inverse,
    gr_mul,
)
from artifact.superalgebra.supermatrix import (
    SuperMatrix,
    det_even,
    inverse_even,
    smat_conjugate,
    smat_dagger,
    smat_inverse,
    smat_transpose,
    superdeterminant,
    supertrace,
)

__all__ = [
    "CanonicalFormResult", "canonical_form_antihermitian", "canonical_form_antisym",
    "canonical_form_generic", "desoul", "desoul_coefficients", "orthogonalize_columns",
    "GeneratorCountMismatch", "ParityError", "SingularBlock", "SingularBody",
    "SuperAlgebraError", "SymmetryViolation", "ZeroBody",
    "GrassmannNumber", "body_soul_split", "gr_coeff", "gr_conjugate", "gr_inverse", "gr_mul",
    "SuperMatrix", "det_even", "inverse_even", "smat_conjugate", "smat_dagger", "smat_inverse",
    "smat_transpose", "superdeterminant", "supertrace",
]
