"""End-to-end estimation pipeline and coefficient-surface reconstruction.

``fit`` chains the whole approach: kernel range from the spanning tree,
eigenbasis (exact or Nystrom), one-pass compression, sequential restricted-
likelihood maximization, and surface reconstruction
``beta_k = b_k 1 + E V_k u_k``. Per-stage wall times are recorded on the
result so scaling behavior can be inspected.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .compression import SvcDesign, compress
from .eigenbasis import DEFAULT_MAX_PAIRS, EigenBasis, exact_basis, nystrom_basis
from .errors import InsufficientData
from .geometry import as_coords, kmeans_knots, mst_max_edge
from .likelihood import (
    LikelihoodResult,
    ShrinkageParams,
    compressed_restricted_loglik,
    v_diag,
)
from .sequential import ALPHA_BOUNDS, RHO_BOUNDS, FitTrace, fit_sequential

#: with basis="auto", the exact eigenbasis is used up to this N
AUTO_EXACT_LIMIT = 1000


@dataclass(frozen=True)
class SpatialDataset:
    """Observations at planar sites: response, covariates, varying flags.

    ``X[:, 0]`` must be the constant 1; its coefficient surface doubles as
    the spatially dependent residual term, so it always varies.
    """

    coords: np.ndarray     # (N, 2)
    y: np.ndarray          # (N,)
    X: np.ndarray          # (N, K), first column all ones
    svc_flags: np.ndarray  # (K,) bool

    def __post_init__(self):
        coords = as_coords(self.coords)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        X = np.asarray(self.X, dtype=np.float64)
        flags = np.asarray(self.svc_flags, dtype=bool).ravel()
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "svc_flags", flags)
        n = coords.shape[0]
        if y.shape[0] != n or X.shape[0] != n:
            raise ValueError("coords, y and X must agree on N")
        if flags.shape[0] != X.shape[1]:
            raise ValueError("need one svc flag per covariate")

    @property
    def n_obs(self) -> int:
        return self.coords.shape[0]

    @property
    def n_cov(self) -> int:
        return self.X.shape[1]


def add_intercept(X: np.ndarray) -> np.ndarray:
    """Prepend a constant-1 column."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


@dataclass(frozen=True)
class FitOptions:
    """Tuning knobs for ``fit``; defaults follow the scale-capped scheme."""

    knot_count: int | None = None         # default min(200, N)
    basis: str = "auto"                   # exact | nystrom | auto
    max_eigenpairs: int = DEFAULT_MAX_PAIRS
    alpha_bounds: tuple = ALPHA_BOUNDS
    rho_bounds: tuple = RHO_BOUNDS
    tol: float = 1e-5
    max_sweeps: int = 30
    eval_budget: int = 120
    seed: int = 0
    init_rho: float = 0.5
    init_alpha: float = 1.0
    range_r: float | None = None          # override the MST-derived kernel range
    mst_subsample: int | None = None      # opt-in MST subsampling for huge N
    exact_size_guard: int = 5000

    def __post_init__(self):
        if self.basis not in ("exact", "nystrom", "auto"):
            raise ValueError(f"unknown basis kind {self.basis!r}")
        if self.knot_count is not None and self.knot_count < 1:
            raise ValueError("knot_count must be positive")
        if self.max_eigenpairs < 1 or self.max_sweeps < 1 or self.eval_budget < 1:
            raise ValueError("counts must be positive")
        if not self.tol >= 0:
            raise ValueError("tol must be nonnegative")


@dataclass(frozen=True)
class SvcFit:
    """Fitted model: coefficients, shrinkage, surfaces, and diagnostics."""

    b_hat: np.ndarray          # (K,)
    u_hat: np.ndarray          # (K_v, L)
    params: ShrinkageParams
    sigma2_hat: float
    loglik: float
    basis: EigenBasis
    beta_surfaces: np.ndarray  # (N, K)
    svc_flags: np.ndarray
    trace: FitTrace
    timings: dict              # seconds per stage: basis / compress / estimate

    @property
    def collapsed(self) -> np.ndarray:
        return self.trace.collapsed


def reconstruct_svc(basis: EigenBasis, b_hat: np.ndarray,
                    params: ShrinkageParams, u_hat: np.ndarray,
                    svc_flags) -> np.ndarray:
    """Coefficient surfaces ``beta_k = b_k 1 + E V_k u_k`` (constant rows for
    non-varying coefficients)."""
    flags = np.asarray(svc_flags, dtype=bool).ravel()
    k = flags.shape[0]
    if b_hat.shape[0] != k:
        raise ValueError("one fixed effect per covariate required")
    n = basis.vectors.shape[0]
    beta = np.tile(b_hat, (n, 1))
    for a, j in enumerate(np.flatnonzero(flags)):
        vk = v_diag(params.rho[a], params.alpha[a], basis.values)
        beta[:, j] += basis.vectors @ (vk * u_hat[a])
    return beta


def build_basis(coords, options: FitOptions) -> EigenBasis:
    """Eigenbasis per the options: range from the spanning tree unless
    overridden, exact for modest N or knots + Nystrom otherwise."""
    coords = as_coords(coords)
    n = coords.shape[0]
    r = options.range_r
    if r is None:
        r = mst_max_edge(coords, subsample=options.mst_subsample, seed=options.seed)
    kind = options.basis
    if kind == "auto":
        kind = "exact" if n <= AUTO_EXACT_LIMIT else "nystrom"
    if kind == "exact":
        return exact_basis(coords, r, max_pairs=options.max_eigenpairs,
                           size_guard=options.exact_size_guard)
    n_knots = options.knot_count if options.knot_count is not None else min(200, n)
    knots = kmeans_knots(coords, min(n_knots, n), seed=options.seed)
    return nystrom_basis(coords, knots, r, max_pairs=options.max_eigenpairs)


def fit(dataset: SpatialDataset, options: FitOptions | None = None) -> SvcFit:
    """Estimate a multiscale spatially varying coefficient model.

    Deterministic for a fixed seed. Raises ``InsufficientData`` when N <= K
    and propagates the typed numerical errors of the underlying stages.
    """
    options = options or FitOptions()
    n, k = dataset.n_obs, dataset.n_cov
    if n <= k:
        raise InsufficientData(f"need N > K, got N={n}, K={k}")
    if not dataset.svc_flags.any():
        raise ValueError("at least one coefficient must vary")

    timings = {}
    t0 = time.perf_counter()
    basis = build_basis(dataset.coords, options)
    timings["basis"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    design = SvcDesign(X=dataset.X, y=dataset.y, vectors=basis.vectors,
                       values=basis.values, svc_flags=dataset.svc_flags)
    moments = compress(design)
    timings["compress"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    init = ShrinkageParams.constant(moments.k_varying,
                                    rho=options.init_rho, alpha=options.init_alpha)
    params, final, trace = fit_sequential(
        moments, init=init, tol=options.tol, max_sweeps=options.max_sweeps,
        budget=options.eval_budget, rho_bounds=options.rho_bounds,
        alpha_bounds=options.alpha_bounds)
    timings["estimate"] = time.perf_counter() - t0

    beta = reconstruct_svc(basis, final.b_hat, params, final.u_hat, dataset.svc_flags)
    return SvcFit(
        b_hat=final.b_hat,
        u_hat=final.u_hat,
        params=params,
        sigma2_hat=final.sigma2_hat,
        loglik=final.loglik,
        basis=basis,
        beta_surfaces=beta,
        svc_flags=dataset.svc_flags.copy(),
        trace=trace,
        timings=timings,
    )


def residual_variance(fit_result: SvcFit) -> float:
    """Profiled residual variance of a fitted model, d / (N - K)."""
    return fit_result.sigma2_hat
