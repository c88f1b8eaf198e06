"""One-pass compression of the design into N-free inner products.

Stacking ``W = [X, x_{k1} o E, ..., x_{kv} o E]`` (one block per spatially
varying covariate, ``o`` the columnwise product), everything the restricted
likelihood needs is contained in

    gram = W'W,   gy = W'y,   yty = y'y.

These are accumulated in row chunks, so no N-by-anything temporary beyond a
chunk is ever materialized and the result size depends only on K and L.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput


@dataclass(frozen=True)
class SvcDesign:
    """Regression design bundled with the spatial basis.

    ``X[:, 0]`` must be the constant 1 and the first covariate always varies:
    its varying part doubles as the residual spatial-dependence term.
    """

    X: np.ndarray          # (N, K), first column all ones
    y: np.ndarray          # (N,)
    vectors: np.ndarray    # (N, L) basis eigenvectors
    values: np.ndarray     # (L,) basis eigenvalues, > 0
    svc_flags: np.ndarray  # (K,) bool, True = coefficient varies spatially

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        E = np.asarray(self.vectors, dtype=np.float64)
        lam = np.asarray(self.values, dtype=np.float64).ravel()
        flags = np.asarray(self.svc_flags, dtype=bool).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "vectors", E)
        object.__setattr__(self, "values", lam)
        object.__setattr__(self, "svc_flags", flags)
        n = X.shape[0]
        if X.ndim != 2:
            raise DimensionMismatch("X must be 2-D")
        if y.shape[0] != n or E.shape[0] != n:
            raise DimensionMismatch(
                f"row mismatch: X has {n}, y has {y.shape[0]}, basis has {E.shape[0]}")
        if lam.shape[0] != E.shape[1]:
            raise DimensionMismatch("eigenvalue count differs from basis columns")
        if flags.shape[0] != X.shape[1]:
            raise DimensionMismatch("need one svc flag per covariate")
        if not np.allclose(X[:, 0], 1.0):
            raise ValueError("first covariate column must be the constant 1")
        if not flags[0]:
            raise ValueError("the intercept coefficient must be marked varying")
        if not flags.any():
            raise ValueError("at least one coefficient must vary")

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_cov(self) -> int:
        return self.X.shape[1]

    @property
    def n_basis(self) -> int:
        return self.vectors.shape[1]

    @property
    def varying(self) -> np.ndarray:
        return np.flatnonzero(self.svc_flags)


@dataclass(frozen=True)
class CompressedMoments:
    """All inner products the likelihood needs; no field scales with N.

    ``gram`` is the (K + K_v L) square Gram matrix of the stacked design,
    laid out as the fixed block followed by one L-block per varying
    covariate in ``varying`` order. Block accessors expose the pieces by
    their conventional names.
    """

    gram: np.ndarray     # (m, m), m = K + K_v * L
    gy: np.ndarray       # (m,)
    yty: float
    n_obs: int
    n_cov: int           # K
    n_basis: int         # L
    varying: np.ndarray  # (K_v,) indices into covariate columns
    values: np.ndarray   # (L,) basis eigenvalues carried along for shrinkage

    @property
    def k_varying(self) -> int:
        return int(self.varying.shape[0])

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    def block(self, a: int) -> slice:
        """Column range of the a-th varying covariate's basis block."""
        lo = self.n_cov + a * self.n_basis
        return slice(lo, lo + self.n_basis)

    # -- named views -------------------------------------------------------

    @property
    def m00(self) -> np.ndarray:
        """X'X, (K, K)."""
        return self.gram[: self.n_cov, : self.n_cov]

    def m0k(self, a: int) -> np.ndarray:
        """X'(x_k o E) for the a-th varying covariate, (K, L)."""
        return self.gram[: self.n_cov, self.block(a)]

    def mkk(self, a: int, b: int) -> np.ndarray:
        """(x_ka o E)'(x_kb o E), (L, L)."""
        return self.gram[self.block(a), self.block(b)]

    @property
    def m0(self) -> np.ndarray:
        """X'y, (K,)."""
        return self.gy[: self.n_cov]

    def mk(self, a: int) -> np.ndarray:
        """(x_k o E)'y for the a-th varying covariate, (L,)."""
        return self.gy[self.block(a)]

    def scalar_count(self) -> int:
        """Distinct stored inner products (gram is symmetric) plus y moments."""
        m = self.size
        return m * (m + 1) // 2 + m + 1


def compress(design: SvcDesign, chunk: int | None = None) -> CompressedMoments:
    """Accumulate the Gram blocks of the stacked design in one pass.

    Chunked accumulation in fixed row order: results are exact inner products
    and independent of the chunk size (up to float addition order within a
    chunk, which is fixed by the BLAS call).
    """
    X, y, E = design.X, design.y, design.vectors
    if not (np.isfinite(X).all() and np.isfinite(y).all() and np.isfinite(E).all()):
        raise NonFiniteInput("design contains NaN or infinity")
    n, k = X.shape
    L = E.shape[1]
    varying = design.varying
    m = k + varying.size * L
    if chunk is None:
        chunk = max(256, int(4_000_000 / max(m, 1)))

    gram = np.zeros((m, m))
    gy = np.zeros(m)
    yty = 0.0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        blocks = [X[lo:hi]]
        blocks += [X[lo:hi, j: j + 1] * E[lo:hi] for j in varying]
        W = np.concatenate(blocks, axis=1)
        gram += W.T @ W
        gy += W.T @ y[lo:hi]
        yty += float(y[lo:hi] @ y[lo:hi])
    # enforce exact symmetry lost to float addition order
    gram = 0.5 * (gram + gram.T)
    return CompressedMoments(
        gram=gram,
        gy=gy,
        yty=yty,
        n_obs=n,
        n_cov=k,
        n_basis=L,
        varying=varying.copy(),
        values=design.values.copy(),
    )
