"""Discretized Birman-Schwinger operator on a truncated arc-length interval.

The kernel (alpha/2pi) K0(kappa |gamma(s) - gamma(s')|) has a logarithmic
diagonal singularity.  With rho = |gamma(s)-gamma(s')| and sigma = |s-s'|
it is split as

    K0(kappa rho) = [K0(kappa rho) + ln(kappa sigma/2) + gamma_E]
                    + [-ln(kappa/2) - gamma_E] + [-ln sigma].

The first bracket is continuous (limit ln(sigma/rho) -> 0 on the diagonal)
and is integrated with the midpoint rule; the constant and the logarithm
are integrated exactly over each cell (product integration).  On a uniform
grid the log moments depend on |i-j| only, so the matrix is symmetric by
construction; only the upper triangle is computed and mirrored.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .curves import Curve, check_a1
from .errors import ConvergenceError, GridMismatchError
from .special import EULER_GAMMA, k0_scalar

log = logging.getLogger(__name__)

DENSE_LIMIT = 2048
RESIDUAL_RTOL = 1e-10


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform midpoint grid on [-L, L] with N cells of width h = 2L/N."""

    L: float
    N: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    moment_by_offset: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    def log_moments(self) -> np.ndarray:
        """Full matrix m_ij = int_{cell j} -ln|s_i - t| dt."""
        idx = np.arange(self.N)
        return self.moment_by_offset[np.abs(idx[:, None] - idx[None, :])]

    def same_as(self, other: "QuadratureGrid") -> bool:
        return self.N == other.N and self.L == other.L


def log_moment(d, h):
    """int_{d-h/2}^{d+h/2} -ln|u| du for d >= 0 (vectorized, cancellation-free)."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    own = d == 0
    out[own] = h * (1.0 - math.log(0.5 * h))
    dd = d[~own]
    a = 0.5 * h / dd
    # (d+h/2)ln(d+h/2) - (d-h/2)ln(d-h/2) - h, expanded about ln d
    integral = h * np.log(dd) + dd * ((1 + a) * np.log1p(a) - (1 - a) * np.log1p(-a)) - h
    out[~own] = -integral
    return out


def build_grid(L: float, N: int) -> QuadratureGrid:
    """Uniform grid with exact log moments.

    Nodes are ``(i - (N-1)/2) h`` so the grid is exactly antisymmetric
    and s = 0 falls on a cell boundary.
    """
    if not L > 0:
        raise ValueError("half-length L must be positive")
    if int(N) != N or N < 2 or N % 2:
        raise ValueError("N must be an even integer >= 2")
    N = int(N)
    h = 2.0 * L / N
    nodes = (np.arange(N) - 0.5 * (N - 1)) * h
    weights = np.full(N, h)
    moments = log_moment(np.arange(N) * h, h)
    return QuadratureGrid(float(L), N, nodes, weights, moments)


@numba.njit(cache=True)
def _fill_kernel(gx, gy, s, h, kappa, coef, c_log, moments, straight, out):
    n = s.size
    for i in range(n):
        out[i, i] = coef * (c_log * h + moments[0])
        for j in range(i + 1, n):
            sig = s[j] - s[i]
            if straight:
                rho = sig
            else:
                rho = math.hypot(gx[j] - gx[i], gy[j] - gy[i])
                if rho > sig:  # chord never exceeds arc; removes roundoff
                    rho = sig
            smooth = k0_scalar(kappa * rho) + math.log(0.5 * kappa * sig) + EULER_GAMMA
            v = coef * (smooth * h + c_log * h + moments[j - i])
            out[i, j] = v
            out[j, i] = v


@dataclass
class BSMatrix:
    """Symmetric N x N discretization of alpha R^kappa on a grid."""

    alpha: float
    kappa: float
    grid: QuadratureGrid
    entries: np.ndarray = field(repr=False)
    straight: bool = False
    curve: str = ""

    @property
    def log_part(self) -> np.ndarray:
        """Exactly integrated part: (alpha/2pi)[(-ln(kappa/2) - gamma_E) h + m_ij]."""
        c_log = -math.log(0.5 * self.kappa) - EULER_GAMMA
        coef = self.alpha / (2.0 * math.pi)
        return coef * (c_log * self.grid.h + self.grid.log_moments())

    @property
    def smooth_part(self) -> np.ndarray:
        return self.entries - self.log_part

    def dump(self, path) -> Path:
        """Save the entries as .npy for offline inspection."""
        path = Path(path)
        np.save(path, self.entries)
        return path


def _check_params(alpha, kappa):
    if not alpha > 0:
        raise ValueError("coupling alpha must be positive")
    if not kappa > 0:
        raise ValueError("spectral parameter kappa must be positive")


def _cached_a1(curve: Curve, floor: float):
    cache = curve.__dict__.setdefault("_a1_cache", {})
    if floor not in cache:
        cache[floor] = check_a1(curve, floor=floor)
    return cache[floor]


def _assemble(points, alpha, kappa, grid, straight, out=None):
    N = grid.N
    if out is None or out.shape != (N, N):
        out = np.empty((N, N))
    c_log = -math.log(0.5 * kappa) - EULER_GAMMA
    _fill_kernel(np.ascontiguousarray(points[:, 0]), np.ascontiguousarray(points[:, 1]),
                 grid.nodes, grid.h, float(kappa), alpha / (2.0 * math.pi), c_log,
                 grid.moment_by_offset, straight, out)
    return out


def assemble(curve: Curve, alpha: float, kappa: float, grid: QuadratureGrid,
             a1_floor: float = 1e-2, check: bool = True, points=None, out=None,
             dump_path=None) -> BSMatrix:
    """Assemble the Birman-Schwinger matrix for ``curve``.

    Parameters
    ----------
    points : ndarray, optional
        Precomputed gamma(grid.nodes); saves curve evaluations in loops.
    out : ndarray, optional
        Reusable N x N buffer.
    dump_path : path, optional
        Write the matrix to ``.npy`` (debugging aid).
    """
    _check_params(alpha, kappa)
    if check:
        _cached_a1(curve, a1_floor)
    if points is None:
        points = curve.gamma(grid.nodes)
    A = _assemble(points, alpha, kappa, grid, False, out)
    bs = BSMatrix(float(alpha), float(kappa), grid, A, False, repr(curve))
    if dump_path is not None:
        bs.dump(dump_path)
    return bs


def assemble_straight_reference(alpha: float, kappa: float, grid: QuadratureGrid) -> BSMatrix:
    """Same discretization with |gamma(s)-gamma(s')| replaced by |s-s'|."""
    _check_params(alpha, kappa)
    pts = np.stack([grid.nodes, np.zeros(grid.N)], axis=1)
    A = _assemble(pts, alpha, kappa, grid, True)
    return BSMatrix(float(alpha), float(kappa), grid, A, True, "straight")


def perturbation(bs: BSMatrix, ref: BSMatrix):
    """D_kappa = bs - ref and its quadrature Hilbert-Schmidt norm.

    The matrix entries already carry the weight h, so the midpoint
    approximation of (int int D^2)^(1/2) is the Frobenius norm of D.
    """
    if not bs.grid.same_as(ref.grid) or bs.alpha != ref.alpha or bs.kappa != ref.kappa:
        raise GridMismatchError("perturbation needs matrices on the same grid, alpha and kappa")
    D = bs.entries - ref.entries
    return D, float(np.linalg.norm(D))


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    method: str = "dense"


def leading_eigs(bs, m: int = 1, vectors: bool = True) -> EigenResult:
    """Top-m eigenpairs of a symmetric matrix, largest first.

    Dense LAPACK for N <= 2048, otherwise implicitly restarted Lanczos
    with the all-ones start vector.  Eigenvectors are signed so that their
    component sum is positive.

    Raises
    ------
    ConvergenceError
        If the iteration fails or a residual exceeds 1e-10 ||A||_F.
    """
    A = bs.entries if isinstance(bs, BSMatrix) else np.asarray(bs, dtype=float)
    N = A.shape[0]
    if not 1 <= m <= N:
        raise ValueError(f"cannot request {m} eigenpairs of a {N}x{N} matrix")
    if N <= DENSE_LIMIT or m >= N - 1:
        w, V = scipy.linalg.eigh(A, subset_by_index=[N - m, N - 1], check_finite=False)
        method = "dense"
    else:
        try:
            w, V = eigsh(A, k=m, which="LA", v0=np.ones(N), tol=0.0,
                         ncv=min(N, max(2 * m + 1, 20)))
        except ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge for m={m}", achieved=exc) from exc
        method = "lanczos"
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    V = V * np.where(V.sum(axis=0) < 0, -1.0, 1.0)
    res = np.linalg.norm(A @ V - V * w, axis=0)
    bound = RESIDUAL_RTOL * np.linalg.norm(A)
    if np.any(res > bound):
        raise ConvergenceError(f"eigen-residual {res.max():.3e} exceeds {bound:.3e}", achieved=float(res.max()))
    return EigenResult(w, V if vectors else np.empty((N, 0)), res, method)
