"""Moran eigenvector bases: exact spectral construction and Nystrom extension.

The basis diagonalizes the doubly centered proximity kernel
``H C H`` with ``H = I - 11'/N``. Eigenvectors are orthogonal map patterns
ordered by spatial scale, and each eigenvalue is proportional to the Moran
coefficient of its eigenvector. Only positive-eigenvalue pairs (positive
spatial dependence) are retained, capped at 200 by default.

The Nystrom path builds the same object from L knot sites in O(N L^2):

    E_hat    = [C_NL - 1 (1_L' (C_L + I) / L)] E_L (Lambda_L + I)^{-1}
    lam_hat  = ((L + N) / L) (lambda_L + 1) - 1

where (E_L, Lambda_L) diagonalize the doubly centered zero-diagonal knot
kernel. The row correction restores the unit diagonal the zero-diagonal
convention removed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantVector,
    DegenerateKernel,
    MissingKnots,
    NonPositiveRange,
    SingularCorrection,
    SizeGuardExceeded,
)
from .geometry import KnotSet, as_coords, proximity

#: eigenvalues below this fraction of the largest count as non-positive noise
POSITIVE_TOL = 1e-8

#: default cap on retained eigenpairs
DEFAULT_MAX_PAIRS = 200

#: dense exact eigendecomposition refused above this N
EXACT_SIZE_GUARD = 5000

#: dense knot decomposition refused above this knot count
KNOT_SIZE_GUARD = 2000


@dataclass(frozen=True)
class EigenBasis:
    """Retained spatial eigenpairs, exact or Nystrom-approximated.

    Attributes
    ----------
    vectors : (N, L) array
        Eigenvector columns (approximated for ``kind == "nystrom"``).
    values : (L,) array
        Matching eigenvalues, strictly positive, descending.
    range_r : float
        Kernel range used to build the proximity matrix.
    kind : str
        ``"exact"`` or ``"nystrom"``.
    knots : KnotSet or None
        Present only for the Nystrom kind.
    knot_vectors, knot_values, row_correction
        Nystrom ingredients kept so the basis can be evaluated at new sites.
    """

    vectors: np.ndarray
    values: np.ndarray
    range_r: float
    kind: str
    knots: KnotSet | None = None
    knot_vectors: np.ndarray | None = None
    knot_values: np.ndarray | None = None
    row_correction: np.ndarray | None = None

    @property
    def n_pairs(self) -> int:
        return int(self.values.shape[0])


def _double_center(C: np.ndarray) -> np.ndarray:
    # H C H for symmetric C, via row/column mean subtraction
    row = C.mean(axis=1)
    total = row.mean()
    return C - row[:, None] - row[None, :] + total


def _centered_eigh(C: np.ndarray):
    """Eigenpairs of the doubly centered kernel with the constant direction
    deflated.

    Centering annihilates the constant vector, so the spectrum has an exact
    null along 1 that carries no spatial pattern. Left in place it can be
    returned mixed into near-zero eigenvectors (breaking their zero means)
    and, worse, the Nystrom eigenvalue rescaling would map it to a positive
    value. A rank-one shift pushes it strictly below every genuine
    eigenvalue; all other pairs are untouched because they are orthogonal
    to 1.
    """
    M = _double_center(C)
    n = M.shape[0]
    bound = float(np.abs(M).sum(axis=1).max())  # Gershgorin radius
    M = M - (bound + 1.0) / n * np.ones((n, n))
    return np.linalg.eigh(M)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of each column positive (sign convention)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs[None, :]


def _positive_descending(values: np.ndarray, max_pairs: int | None):
    """Indices of retained eigenvalues: positive (relative tolerance), sorted
    descending, capped."""
    vmax = values.max()
    if not vmax > 0.0:
        raise DegenerateKernel("centered kernel has no positive eigenvalues")
    keep = np.flatnonzero(values > POSITIVE_TOL * vmax)
    keep = keep[np.argsort(values[keep])[::-1]]
    if max_pairs is not None and keep.size > max_pairs:
        keep = keep[:max_pairs]
    return keep


def exact_basis(coords, range_r: float, max_pairs: int | None = DEFAULT_MAX_PAIRS,
                size_guard: int = EXACT_SIZE_GUARD) -> EigenBasis:
    """Dense eigendecomposition of the doubly centered zero-diagonal kernel.

    The oracle-quality construction: O(N^3) time, O(N^2) memory, guarded by
    ``size_guard``. Retains positive eigenpairs, descending, capped.
    """
    pts = as_coords(coords)
    n = pts.shape[0]
    if n > size_guard:
        raise SizeGuardExceeded(f"N={n} exceeds dense eigendecomposition guard {size_guard}")
    C = proximity(pts, pts, range_r, zero_diagonal=True)
    w, V = _centered_eigh(C)
    keep = _positive_descending(w, max_pairs)
    return EigenBasis(
        vectors=_fix_signs(V[:, keep]),
        values=w[keep].copy(),
        range_r=float(range_r),
        kind="exact",
    )


def _nystrom_rows(coords, knots: KnotSet, range_r: float,
                  knot_vectors: np.ndarray, knot_values: np.ndarray,
                  row_correction: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """Evaluate the Nystrom eigenvector formula at arbitrary sites, chunked so
    the site-to-knot kernel never exceeds chunk x L memory."""
    pts = as_coords(coords)
    scale = knot_vectors / (knot_values + 1.0)[None, :]
    out = np.empty((pts.shape[0], knot_vectors.shape[1]))
    for lo in range(0, pts.shape[0], chunk):
        hi = min(lo + chunk, pts.shape[0])
        C_nl = proximity(pts[lo:hi], knots.centers, range_r)
        C_nl -= row_correction[None, :]
        out[lo:hi] = C_nl @ scale
    return out


def nystrom_basis(coords, knots: KnotSet, range_r: float,
                  max_pairs: int | None = DEFAULT_MAX_PAIRS) -> EigenBasis:
    """Nystrom-extended eigenpairs from a knot subset.

    Eigenvalues are rescaled knot eigenvalues; the retained count is the
    number of positive rescaled eigenvalues, capped at ``max_pairs``.
    """
    if not range_r > 0.0:
        raise NonPositiveRange(f"kernel range must be > 0, got {range_r}")
    pts = as_coords(coords)
    n = pts.shape[0]
    n_knots = knots.count
    if n_knots > KNOT_SIZE_GUARD:
        raise SizeGuardExceeded(f"knot count {n_knots} exceeds guard {KNOT_SIZE_GUARD}")

    C_l = proximity(knots.centers, knots.centers, range_r, zero_diagonal=True)
    w, V = _centered_eigh(C_l)
    lam_hat = ((n_knots + n) / n_knots) * (w + 1.0) - 1.0
    keep = _positive_descending(lam_hat, max_pairs)
    corr = w[keep] + 1.0
    if np.any(corr <= 0.0):
        raise SingularCorrection("knot eigenvalue correction (lambda + 1) <= 0")

    knot_vectors = _fix_signs(V[:, keep])
    knot_values = w[keep].copy()
    # column means of the unit-diagonal knot kernel
    row_correction = (C_l.sum(axis=0) + 1.0) / n_knots
    vectors = _nystrom_rows(pts, knots, range_r, knot_vectors, knot_values, row_correction)
    return EigenBasis(
        vectors=vectors,
        values=lam_hat[keep].copy(),
        range_r=float(range_r),
        kind="nystrom",
        knots=knots,
        knot_vectors=knot_vectors,
        knot_values=knot_values,
        row_correction=row_correction,
    )


def basis_at(basis: EigenBasis, new_coords) -> np.ndarray:
    """Evaluate a Nystrom basis at new sites; rows follow the training formula.

    Raises
    ------
    MissingKnots
        If the basis is exact (no knot machinery to extend with).
    """
    if basis.kind != "nystrom" or basis.knots is None:
        raise MissingKnots("only a Nystrom basis can be evaluated at new sites")
    return _nystrom_rows(new_coords, basis.knots, basis.range_r,
                         basis.knot_vectors, basis.knot_values, basis.row_correction)


def moran_coefficient(y, C: np.ndarray, tol: float = 1e-12) -> float:
    """Moran coefficient of ``y`` under the square proximity matrix ``C``.

    ``MC = (N / 1'C1) * (yc' C yc) / (yc' yc)`` with ``yc`` the centered
    vector. Positive values indicate positive spatial dependence.
    """
    yv = np.asarray(y, dtype=np.float64).ravel()
    n = yv.shape[0]
    if C.shape != (n, n):
        raise ValueError(f"C must be ({n}, {n}), got {C.shape}")
    yc = yv - yv.mean()
    denom = yc @ yc
    if denom <= tol * max(1.0, yv @ yv):
        raise ConstantVector("vector has no variation; Moran coefficient undefined")
    total = C.sum()
    return float(n / total * (yc @ C @ yc) / denom)
