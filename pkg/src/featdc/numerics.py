"""Dense symmetric linear-algebra kernels.

Three operations back every transform in the package: a symmetric
eigendecomposition with a deterministic sign convention, a generalized
symmetric eigenproblem reduced to the standard one through a Cholesky
factor, and symmetric-positive-definite solves.

All functions treat their inputs as read-only and are safe to call
concurrently.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import NumericError


class EigResult(NamedTuple):
    """Eigenvalues sorted descending; column k of `vectors` pairs with
    `values[k]`."""

    values: np.ndarray
    vectors: np.ndarray


def sym_from_upper(a):
    """Exactly symmetric matrix built from the upper triangle of `a`."""
    a = np.asarray(a, dtype=np.float64)
    u = np.triu(a)
    return u + np.triu(a, 1).T


def _fix_signs(vectors):
    """Flip each column so its largest-magnitude entry is positive.

    Ties resolve to the lowest index (argmax picks the first maximum),
    which makes the decomposition reproducible across runs.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(a) -> EigResult:
    """Eigendecomposition of a symmetric matrix.

    Builds the exactly symmetric operand from the upper triangle, then
    returns eigenvalues in descending order with orthonormal eigenvector
    columns under the sign convention of `_fix_signs`.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NumericError(f"sym_eig needs a square matrix, got shape {a.shape}")
    s = sym_from_upper(a)
    if not np.all(np.isfinite(s)):
        raise NumericError("sym_eig: non-finite entries in input")
    values, vectors = np.linalg.eigh(s)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    return EigResult(values, vectors)


def _cholesky_lower(b, context):
    try:
        return scipy.linalg.cholesky(b, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(
            f"{context}: matrix is not positive definite (Cholesky failed); "
            "increase the ridge parameter"
        ) from exc


def gen_sym_eig(s, b) -> EigResult:
    """Solve S v = lambda B v for symmetric S and SPD B.

    Reduction route: B = L L^T, C = L^-1 S L^-T, standard eigenproblem on
    C, then back-substitute v = L^-T u. The returned vectors are
    B-orthonormal (v_i^T B v_j = delta_ij) and sign-fixed like `sym_eig`.
    """
    s = sym_from_upper(s)
    b = sym_from_upper(b)
    if s.shape != b.shape:
        raise NumericError(f"gen_sym_eig: shape mismatch {s.shape} vs {b.shape}")
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(b))):
        raise NumericError("gen_sym_eig: non-finite entries in input")
    lower = _cholesky_lower(b, "gen_sym_eig")
    # C = L^-1 S L^-T via two triangular solves
    tmp = scipy.linalg.solve_triangular(lower, s, lower=True)
    c = scipy.linalg.solve_triangular(lower, tmp.T, lower=True).T
    values, u = sym_eig(c)
    vectors = scipy.linalg.solve_triangular(lower.T, u, lower=False)
    return EigResult(values, _fix_signs(vectors))


def solve_spd(a, rhs):
    """Solve A X = rhs for symmetric positive definite A via Cholesky."""
    a = sym_from_upper(a)
    rhs = np.asarray(rhs, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise NumericError("solve_spd: non-finite entries in matrix")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(
            "solve_spd: matrix is not positive definite (Cholesky failed)"
        ) from exc
    return scipy.linalg.cho_solve(factor, rhs)
