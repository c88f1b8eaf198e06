"""Restricted log-likelihood of the mixed-model form, in two equivalent routes.

Model: ``y = X b + sum_k (x_k o E) V_k u_k + eps`` with ``u_k, eps`` i.i.d.
Gaussian sharing the residual variance, and per-coefficient shrinkage
``V_k = rho_k * diag(lambda ** (alpha_k / 2))``. Integrating out ``b`` and
profiling the residual variance gives

    loglik = -1/2 ln|P| - (N - K)/2 * (1 + ln(2 pi d / (N - K)))

where ``P`` is the penalized normal-equation matrix and ``d`` is the sum of
the squared residual norm and of all squared random-effect norms.

``direct_restricted_loglik`` assembles N-sized matrices (slow oracle).
``compressed_restricted_loglik`` works purely off precompressed inner
products, so its cost is independent of N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .compression import CompressedMoments, SvcDesign
from .errors import (
    InsufficientData,
    NegativeResidualNorm,
    NonPositiveEigenvalue,
    PerfectFit,
    SingularP,
    SizeGuardExceeded,
)

#: condition estimate below this reciprocal triggers a singularity error
RCOND_LIMIT = 1e-12

#: relative residual-norm level treated as an exact (degenerate) fit
PERFECT_FIT_TOL = 1e-24

#: compressed residual norms in [-CANCEL_TOL * y'y, 0) are rounding, clamp to 0
CANCEL_TOL = 1e-6

#: direct route refuses N above this, like the exact eigenbasis
DIRECT_SIZE_GUARD = 5000


@dataclass(frozen=True)
class ShrinkageParams:
    """Per-varying-coefficient shrinkage: variance ratio and scale exponent.

    ``rho[a] >= 0`` is the random-effect-to-residual standard deviation ratio
    of the a-th varying coefficient; ``alpha[a]`` is the eigenvalue power
    controlling its spatial scale (larger = smoother, larger-scale surface).
    """

    rho: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=np.float64)).copy()
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=np.float64)).copy()
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", alpha)
        if rho.shape != alpha.shape:
            raise ValueError("rho and alpha must have the same length")
        if not np.isfinite(rho).all() or not np.isfinite(alpha).all():
            raise ValueError("shrinkage parameters must be finite")
        if (rho < 0).any():
            raise ValueError("rho must be nonnegative")

    @classmethod
    def constant(cls, k_varying: int, rho: float = 0.5, alpha: float = 1.0):
        return cls(np.full(k_varying, rho), np.full(k_varying, alpha))

    def with_entry(self, a: int, rho: float, alpha: float) -> "ShrinkageParams":
        r, al = self.rho.copy(), self.alpha.copy()
        r[a], al[a] = rho, alpha
        return ShrinkageParams(r, al)

    @property
    def k_varying(self) -> int:
        return int(self.rho.shape[0])


@dataclass(frozen=True)
class LikelihoodResult:
    """Restricted log-likelihood value and the coefficient solve behind it."""

    loglik: float
    b_hat: np.ndarray   # (K,) fixed effects
    u_hat: np.ndarray   # (K_v, L) standardized random effects per varying coef
    d_theta: float      # squared residual norm + sum of squared u norms
    sigma2_hat: float   # profiled residual variance d / (N - K)


def v_diag(rho: float, alpha: float, values: np.ndarray) -> np.ndarray:
    """Shrinkage diagonal ``rho * values ** (alpha / 2)``; values must be > 0."""
    lam = np.asarray(values, dtype=np.float64)
    if np.any(lam <= 0.0):
        raise NonPositiveEigenvalue("shrinkage scaling needs positive eigenvalues")
    return rho * lam ** (0.5 * alpha)


def spd_factor(P: np.ndarray, error: type = SingularP,
               rcond_limit: float = RCOND_LIMIT):
    """Cholesky of a symmetric PD matrix with a cheap condition estimate.

    Returns ``((factor, lower), logdet)``; raises ``error`` when the
    factorization fails or the reciprocal 1-norm condition estimate falls
    below ``rcond_limit``.
    """
    anorm = np.linalg.norm(P, 1)
    try:
        c, low = sla.cho_factor(P, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise error(f"matrix not positive definite: {exc}") from exc
    rcond, info = lapack.dpocon(c, anorm, uplo=b"L")
    if info != 0 or not np.isfinite(rcond) or rcond < rcond_limit:
        raise error(f"condition estimate too poor (rcond={rcond:.3e})")
    logdet = 2.0 * float(np.sum(np.log(np.diag(c))))
    return (c, low), logdet


def scale_vector(moments_or_design, params: ShrinkageParams) -> np.ndarray:
    """Stacked shrinkage diagonal: ones on the fixed block, then each V_k."""
    src = moments_or_design
    k, L, lam = src.n_cov, src.n_basis, src.values
    kv = params.k_varying
    v = np.ones(k + kv * L)
    for a in range(kv):
        v[k + a * L: k + (a + 1) * L] = v_diag(params.rho[a], params.alpha[a], lam)
    return v


def _assemble_loglik(logdet: float, d_theta: float, n: int, k: int,
                     yty: float) -> float:
    if d_theta <= PERFECT_FIT_TOL * max(yty, np.finfo(float).tiny):
        raise PerfectFit("residual term is numerically zero; likelihood undefined")
    nmk = n - k
    return -0.5 * logdet - 0.5 * nmk * (1.0 + np.log(2.0 * np.pi * d_theta / nmk))


def _check_counts(n: int, k: int):
    if n <= k:
        raise InsufficientData(f"need N > K, got N={n}, K={k}")


def direct_restricted_loglik(design: SvcDesign, params: ShrinkageParams,
                             size_guard: int = DIRECT_SIZE_GUARD) -> LikelihoodResult:
    """Slow-path restricted log-likelihood from full N-sized matrices.

    Builds the stacked design ``W = [X, (x_k o E) V_k ...]``, solves the
    penalized normal equations, and measures the residual directly on the
    data vector. Gated to modest N; the compressed route is the fast path.
    """
    n, k = design.n_obs, design.n_cov
    _check_counts(n, k)
    if n > size_guard:
        raise SizeGuardExceeded(f"N={n} exceeds direct-likelihood guard {size_guard}")
    varying = design.varying
    if params.k_varying != varying.size:
        raise ValueError("params length must match the number of varying coefficients")
    L = design.n_basis

    blocks = [design.X]
    for a, j in enumerate(varying):
        vk = v_diag(params.rho[a], params.alpha[a], design.values)
        blocks.append(design.X[:, j: j + 1] * design.vectors * vk[None, :])
    W = np.concatenate(blocks, axis=1)
    m = W.shape[1]

    P = W.T @ W
    idx = np.arange(k, m)
    P[idx, idx] += 1.0
    rhs = W.T @ design.y
    factor, logdet = spd_factor(P)
    z = sla.cho_solve(factor, rhs)

    resid = design.y - W @ z
    u = z[k:]
    d_theta = float(resid @ resid + u @ u)
    loglik = _assemble_loglik(logdet, d_theta, n, k, design.y @ design.y)
    return LikelihoodResult(
        loglik=loglik,
        b_hat=z[:k].copy(),
        u_hat=u.reshape(varying.size, L).copy(),
        d_theta=d_theta,
        sigma2_hat=d_theta / (n - k),
    )


def compressed_restricted_loglik(moments: CompressedMoments,
                                 params: ShrinkageParams) -> LikelihoodResult:
    """N-free restricted log-likelihood from compressed inner products.

    The penalized matrix is the scaled Gram ``P = diag(v) gram diag(v) + J``
    (J adds 1 to each random-effect diagonal), and the squared residual norm
    is recovered as ``y'y - 2 z'r + z'P0 z`` with ``P0`` the scaled Gram
    without J. That subtraction cancels almost completely near good fits, so
    the dot products are accumulated in extended precision; small negative
    results are clamped and grossly negative ones raise.
    """
    n, k = moments.n_obs, moments.n_cov
    _check_counts(n, k)
    if params.k_varying != moments.k_varying:
        raise ValueError("params length must match the number of varying coefficients")
    L = moments.n_basis
    m = moments.size

    v = scale_vector(moments, params)
    P = moments.gram * np.outer(v, v)
    idx = np.arange(k, m)
    P[idx, idx] += 1.0
    rhs = v * moments.gy
    factor, logdet = spd_factor(P)
    z = sla.cho_solve(factor, rhs)

    w = v * z
    Gw = moments.gram @ w
    zl = z.astype(np.longdouble)
    eps2 = (np.longdouble(moments.yty)
            - 2.0 * zl @ rhs.astype(np.longdouble)
            + w.astype(np.longdouble) @ Gw.astype(np.longdouble))
    eps2 = float(eps2)
    if eps2 < 0.0:
        if eps2 < -CANCEL_TOL * moments.yty:
            raise NegativeResidualNorm(
                f"compressed residual norm {eps2:.3e} below -tolerance")
        eps2 = 0.0

    u = z[k:]
    d_theta = float(eps2 + u @ u)
    loglik = _assemble_loglik(logdet, d_theta, n, k, moments.yty)
    return LikelihoodResult(
        loglik=loglik,
        b_hat=z[:k].copy(),
        u_hat=u.reshape(moments.k_varying, L).copy(),
        d_theta=d_theta,
        sigma2_hat=d_theta / (n - k),
    )
