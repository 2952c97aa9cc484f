"""Bound states below -alpha^2/4 from the crossings lambda_j(kappa) = 1.

Each branch lambda_j(kappa) (j-th largest eigenvalue of the
Birman-Schwinger matrix) decreases monotonically in kappa, so a crossing
is bracketed between kappa_lo = (alpha/2)(1 + delta) and a kappa_hi found
by doubling.  Roots are located by a bracketing iteration that keeps
lambda_j(lo) > 1 > lambda_j(hi) at every step, then re-converged under
grid refinement:

1. the interval is widened to ``decay_lengths / q`` with
   ``q = sqrt(kappa0^2 - alpha^2/4)``, the decay rate of the bound state
   along the straight arms, keeping the cell width fixed;
2. L is doubled at fixed h until |dE| <= tol_energy;
3. N is doubled at the accepted L until |dE| <= tol_energy or N_max.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np
from scipy import integrate

from .bs import assemble, assemble_straight_reference, build_grid, leading_eigs, perturbation
from .curves import Curve, check_a1
from .errors import ConvergenceError
from .special import k0_scalar

log = logging.getLogger(__name__)

CROSSING_GAP = 1e-6


@dataclass
class SolverNumerics:
    """Discretization and tolerance settings.

    ``None`` entries are resolved against the coupling: L = 40/alpha,
    tol_kappa = 1e-8 alpha, tol_energy = 1e-5 alpha^2, L_max = 2000/alpha.
    With ``refine=False`` only the coarse grid is solved and ``converged``
    reports the root bracket alone.
    """

    L: float | None = None
    N: int = 1024
    N_max: int = 8192
    tol_kappa: float | None = None
    tol_energy: float | None = None
    delta: float = 1e-3
    max_branches: int = 8
    decay_lengths: float = 6.0
    L_max: float | None = None
    refine: bool = True
    a1_floor: float = 1e-2

    def resolved(self, alpha: float) -> "SolverNumerics":
        return replace(
            self,
            L=self.L if self.L is not None else 40.0 / alpha,
            tol_kappa=self.tol_kappa if self.tol_kappa is not None else 1e-8 * alpha,
            tol_energy=self.tol_energy if self.tol_energy is not None else 1e-5 * alpha**2,
            L_max=self.L_max if self.L_max is not None else 2000.0 / alpha,
        )


@dataclass
class BoundState:
    kappa0: float
    energy: float
    index: int
    alpha: float
    L: float
    N: int
    nodes: np.ndarray = field(repr=False)
    bs_eigenvector: np.ndarray = field(repr=False)
    converged: bool = True
    history: list = field(default_factory=list)

    def to_dict(self, with_vector=False):
        d = {
            "index": self.index,
            "kappa0": self.kappa0,
            "energy": self.energy,
            "converged": self.converged,
            "L": self.L,
            "N": self.N,
            "history": self.history,
        }
        if with_vector:
            d["bs_eigenvector"] = self.bs_eigenvector.tolist()
        return d


@dataclass
class SpectrumResult:
    alpha: float
    threshold: float
    branches_at_threshold: int
    states: list
    warnings: list
    numerics: SolverNumerics


class _Branches:
    """Leading eigenvalues of the BS matrix for one (curve, L, N), memoized in kappa."""

    def __init__(self, curve, alpha, L, N, floor):
        self.curve, self.alpha = curve, alpha
        self.grid = build_grid(L, N)
        self.points = curve.gamma(self.grid.nodes)
        self.floor = floor
        self._buf = None
        self._cache = {}
        self.evaluations = 0

    def eigs(self, kappa, m, vectors=False):
        key = float(kappa)
        hit = self._cache.get(key)
        if hit is not None and hit.values.size >= m and (not vectors or hit.vectors.shape[1] >= m):
            return hit
        bs = assemble(self.curve, self.alpha, kappa, self.grid, a1_floor=self.floor,
                      points=self.points, out=self._buf)
        self._buf = bs.entries
        res = leading_eigs(bs, min(m, self.grid.N), vectors=vectors)
        self._cache[key] = res
        self.evaluations += 1
        return res

    def lam(self, kappa, j, extra=1):
        return self.eigs(kappa, j + extra).values


def _root(fn, lo, hi, flo, fhi, tol, history, max_iter=200):
    """Bracketed root of a decreasing function with fn(lo) > 0 > fn(hi).

    Illinois-modified false position, with a bisection step whenever the
    bracket failed to halve over three iterations and with steps kept at
    least ``tol`` inside the bracket so that both ends close in.
    """
    Flo, Fhi = flo, fhi
    side = 0
    widths = [hi - lo]
    for it in range(max_iter):
        width = hi - lo
        if width <= tol:
            break
        if len(widths) >= 4 and width > 0.5 * widths[-4]:
            x = 0.5 * (lo + hi)
        else:
            x = hi - Fhi * (hi - lo) / (Fhi - Flo)
            if width > 2 * tol:
                x = min(max(x, lo + tol), hi - tol)
            else:
                x = 0.5 * (lo + hi)
        fx = fn(x)
        if fx > 0:
            lo, flo, Flo = x, fx, fx
            if side == 1:
                Fhi *= 0.5
            side = 1
        elif fx < 0:
            hi, fhi, Fhi = x, fx, fx
            if side == -1:
                Flo *= 0.5
            side = -1
        else:
            lo = hi = x
            flo = fhi = 0.0
        history.append((lo, hi, flo + 1.0, fhi + 1.0))
        widths.append(hi - lo)
    else:
        raise ConvergenceError("bracketing iteration exhausted", achieved=hi - lo)
    if flo == fhi:
        return 0.5 * (lo + hi)
    # linear interpolation within the final bracket
    return lo + flo * (hi - lo) / (flo - fhi)


def _check_gap(vals, j, kappa, warnings):
    """Flag near-degenerate neighbours of branch j (1-based) at kappa."""
    for other in (j - 1, j + 1):
        if 1 <= other <= vals.size and abs(vals[j - 1] - vals[other - 1]) < CROSSING_GAP:
            warnings.append({
                "type": "possible_crossing",
                "branch": j,
                "kappa": float(kappa),
                "candidates": [float(vals[j - 1]), float(vals[other - 1])],
            })


def _solve_branch(ev, j, lo, hi, tol, warnings, kappa_floor):
    """Root of lambda_j = 1 starting from an arbitrary guess bracket [lo, hi]."""
    history = []

    def f(k):
        vals = ev.lam(k, j)
        _check_gap(vals, j, k, warnings)
        return vals[j - 1] - 1.0

    flo, fhi = f(lo), f(hi)
    w = hi - lo
    while flo <= 0:
        if lo <= kappa_floor:
            return None, history
        hi, fhi = lo, flo
        w *= 2
        lo = max(kappa_floor, lo - w)
        flo = f(lo)
    while fhi >= 0:
        lo, flo = hi, fhi
        w *= 2
        hi = hi + w
        fhi = f(hi)
    history.append((lo, hi, flo + 1.0, fhi + 1.0))
    return _root(f, lo, hi, flo, fhi, tol, history), history


def _even(x):
    n = int(math.ceil(x))
    return n + (n % 2)


def solve_spectrum(curve: Curve, alpha: float, numerics: SolverNumerics | None = None) -> SpectrumResult:
    """Bound states with diagnostics; see ``find_bound_states``."""
    if not alpha > 0:
        raise ValueError("coupling alpha must be positive")
    num = (numerics or SolverNumerics()).resolved(alpha)
    check_a1(curve, floor=num.a1_floor)
    warnings: list = []
    threshold = -0.25 * alpha**2
    k_lo = 0.5 * alpha * (1.0 + num.delta)

    coarse = _Branches(curve, alpha, num.L, num.N, num.a1_floor)
    m0 = min(num.max_branches + 1, num.N)
    top = coarse.eigs(k_lo, m0).values
    n_br = int(np.sum(top > 1.0))
    if n_br > num.max_branches:
        warnings.append({"type": "branch_limit", "message": f"more than {num.max_branches} branches exceed 1"})
        n_br = num.max_branches
    log.info("%d branch(es) above 1 at kappa=%.6g", n_br, k_lo)
    if n_br == 0:
        return SpectrumResult(alpha, threshold, 0, [], warnings, num)

    k_hi = alpha
    while coarse.eigs(k_hi, 1).values[0] >= 1.0:
        k_hi *= 2.0

    states = []
    for j in range(1, n_br + 1):
        kappa0, hist = _solve_branch(coarse, j, k_lo, k_hi, num.tol_kappa, warnings, k_lo)
        record = [{"stage": "coarse", "L": num.L, "N": num.N, "kappa0": float(kappa0),
                   "energy": float(-kappa0**2), "delta_E": None, "iterations": len(hist)}]
        ev, converged = coarse, True
        if num.refine:
            kappa0, ev, converged = _refine(curve, alpha, j, kappa0, num, record, warnings, k_lo)
        vec = ev.eigs(kappa0, j, vectors=True).vectors[:, j - 1]
        states.append(BoundState(
            kappa0=float(kappa0), energy=float(-kappa0**2), index=j, alpha=float(alpha),
            L=ev.grid.L, N=ev.grid.N, nodes=ev.grid.nodes.copy(), bs_eigenvector=vec.copy(),
            converged=converged, history=record,
        ))
        if not converged:
            warnings.append({"type": "not_converged", "branch": j,
                             "message": "energy not converged within N_max / L_max"})
    states.sort(key=lambda st: st.energy)
    return SpectrumResult(alpha, threshold, n_br, states, warnings, num)


def _refine(curve, alpha, j, kappa0, num, record, warnings, k_lo):
    h0 = 2.0 * num.L / num.N
    tol_e = num.tol_energy

    def solve(L, N, guess, width):
        ev = _Branches(curve, alpha, L, N, num.a1_floor)
        w = max(width, 64 * num.tol_kappa)
        k, hist = _solve_branch(ev, j, max(k_lo, guess - w), guess + w, num.tol_kappa, warnings, k_lo)
        return k, ev, len(hist)

    def push(stage, ev, k, prev, iters):
        dE = None if prev is None else float(-k**2 + prev**2)
        record.append({"stage": stage, "L": ev.grid.L, "N": ev.grid.N, "kappa0": float(k),
                       "energy": float(-k**2), "delta_E": dE, "iterations": iters})
        return dE

    q = math.sqrt(max(kappa0**2 - 0.25 * alpha**2, 0.0))
    L = max(num.L, num.decay_lengths / q) if q > 0 else math.inf
    if L > num.L_max:
        warnings.append({"type": "near_threshold", "branch": j,
                         "message": f"decay length requires L={L:.4g} > L_max={num.L_max:.4g}"})
        return kappa0, _Branches(curve, alpha, num.L, num.N, num.a1_floor), False
    N = _even(2.0 * L / h0)
    if N > num.N_max:
        warnings.append({"type": "near_threshold", "branch": j,
                         "message": f"L={L:.4g} at the coarse cell width needs N={N} > N_max={num.N_max}"})
        return kappa0, _Branches(curve, alpha, num.L, num.N, num.a1_floor), False
    width = 1e-3 * alpha
    k, ev, it = solve(L, N, kappa0, width)
    if k is None:
        return kappa0, ev, False
    push("widen", ev, k, kappa0, it)

    # L-doubling at fixed cell width
    while True:
        if 2 * L > num.L_max or 2 * N > num.N_max:
            return k, ev, False
        k2, ev2, it = solve(2 * L, 2 * N, k, width)
        if k2 is None:
            return k, ev, False
        dE = push("L-doubling", ev2, k2, k, it)
        width = max(4 * abs(k2 - k), 1e-6 * alpha)
        if abs(dE) <= tol_e:
            break  # keep the smaller L
        L, N, k, ev = 2 * L, 2 * N, k2, ev2

    # N-doubling at the accepted L
    while True:
        if 2 * N > num.N_max:
            return k, ev, False
        k2, ev2, it = solve(L, 2 * N, k, width)
        if k2 is None:
            return k, ev, False
        dE = push("N-doubling", ev2, k2, k, it)
        width = max(4 * abs(k2 - k), 1e-6 * alpha)
        N, k, ev = 2 * N, k2, ev2
        if abs(dE) <= tol_e:
            return k, ev, True


def find_bound_states(curve: Curve, alpha: float, numerics: SolverNumerics | None = None) -> list:
    """All discrete eigenvalues below -alpha^2/4, sorted by energy.

    Branches are counted at kappa = (alpha/2)(1 + delta) on the coarse
    grid; each crossing lambda_j(kappa0) = 1 gives a state E = -kappa0^2.
    The straight line returns an empty list.
    """
    return solve_spectrum(curve, alpha, numerics).states


def solve_at(curve: Curve, alpha: float, L: float, N: int, branch: int = 1,
             guess: tuple | None = None, tol_kappa: float | None = None) -> float:
    """kappa0 of one branch on a fixed grid (no refinement)."""
    tol = tol_kappa if tol_kappa is not None else 1e-8 * alpha
    ev = _Branches(curve, alpha, L, N, 1e-2)
    k_lo = 0.5 * alpha * (1e0 + 1e-3)
    lo, hi = guess if guess is not None else (k_lo, alpha)
    k, _ = _solve_branch(ev, branch, lo, hi, tol, [], k_lo)
    if k is None:
        raise ConvergenceError(f"branch {branch} has no crossing above kappa={k_lo:.6g}")
    return k


# ---------------------------------------------------------------------------
# sweeps and diagnostics
# ---------------------------------------------------------------------------


@dataclass
class SweepTable:
    kappa: np.ndarray
    eigenvalues: np.ndarray  # shape (len(kappa), m)
    reference: np.ndarray     # alpha / (2 kappa)
    L: float
    N: int


def sweep_lambda(curve: Curve, alpha: float, kappa_grid, m: int = 3, L: float | None = None,
                 N: int = 1024, a1_floor: float = 1e-2) -> SweepTable:
    """Top-m BS eigenvalues on a sorted kappa grid (fixed L, N)."""
    kappa = np.asarray(kappa_grid, dtype=float)
    if kappa.ndim != 1 or np.any(kappa <= 0) or np.any(np.diff(kappa) <= 0):
        raise ValueError("kappa grid must be positive and strictly increasing")
    L = L if L is not None else 40.0 / alpha
    ev = _Branches(curve, alpha, L, N, a1_floor)
    vals = np.array([ev.eigs(k, m).values for k in kappa])
    return SweepTable(kappa, vals, alpha / (2.0 * kappa), L, N)


@dataclass
class TrialReport:
    lambda_width: float
    form_gap: float
    sign: bool
    d_term: float
    multiplier_term: float
    multiplier_term_grid: float
    norm_on_grid: float


def _multiplier_term(kappa, lam):
    """int (kappa/sqrt(p^2+kappa^2) - 1) |psi_hat(p)|^2 dp for the normalized Gaussian.

    With p = u lam the weight becomes the standard normal density.
    """
    def f(u):
        return (kappa / math.sqrt((u * lam) ** 2 + kappa**2) - 1.0) * math.exp(-0.5 * u * u)

    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-15, epsrel=1e-12, limit=200)
    return 2.0 * val / math.sqrt(2.0 * math.pi)


def gaussian_trial(curve: Curve, alpha: float, kappa: float, lambda_list, L: float | None = None,
                   N: int = 2048) -> list:
    """Quadratic-form test with psi(s) = (2 lam^2/pi)^(1/4) exp(-lam^2 s^2).

    ``form_gap = (2kappa/alpha)(psi, R psi) - ||psi||^2`` split as the
    perturbation term (2kappa/alpha)(psi, D psi), evaluated on the grid,
    plus the straight-line multiplier term, evaluated exactly in Fourier
    space.  The grid value of the multiplier term is also reported when the
    Gaussian fits inside the grid (NaN otherwise).
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    L = L if L is not None else 40.0 / kappa
    grid = build_grid(L, N)
    bs = assemble(curve, alpha, kappa, grid)
    ref = assemble_straight_reference(alpha, kappa, grid)
    D, _ = perturbation(bs, ref)
    h, s = grid.h, grid.nodes
    out = []
    for lam in lambda_list:
        lam = float(lam)
        if not lam > 0:
            raise ValueError("Gaussian widths must be positive")
        psi = (2 * lam**2 / math.pi) ** 0.25 * np.exp(-(lam * s) ** 2)
        d_term = 2 * kappa / alpha * h * float(psi @ D @ psi)
        mult = _multiplier_term(kappa, lam)
        fits = 6.0 / lam <= L and lam * h <= 0.25
        norm = h * float(psi @ psi)
        mult_grid = (2 * kappa / alpha * h * float(psi @ ref.entries @ psi) - norm) if fits else math.nan
        gap = d_term + mult
        out.append(TrialReport(lam, gap, bool(gap > 0), d_term, mult, mult_grid, norm))
    return out


@numba.njit(cache=True)
def _field(px, py, gx, gy, w, kappa, out):
    skipped = 0
    for p in range(px.size):
        acc = 0.0
        hit = False
        for i in range(gx.size):
            r = math.hypot(px[p] - gx[i], py[p] - gy[i])
            if r < 1e-12:
                hit = True
                break
            acc += w[i] * k0_scalar(kappa * r)
        if hit:
            out[p] = math.nan
            skipped += 1
        else:
            out[p] = acc
    return skipped


@dataclass
class FieldSample:
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray  # shape (len(y), len(x)); NaN at skipped points
    skipped: int


def reconstruct_eigenfunction(curve: Curve, state: BoundState, x, y) -> FieldSample:
    """psi(x) = sum_i h K0(kappa0 |x - gamma(s_i)|) phi_i on the tensor grid x-by-y.

    Normalized to sum psi^2 dx dy = 1 over the sampled points and signed to
    be positive.  Points on curve nodes are skipped.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X, Y = np.meshgrid(x, y)
    g = curve.gamma(state.nodes)
    h = state.nodes[1] - state.nodes[0]
    out = np.empty(X.size)
    skipped = _field(X.ravel(), Y.ravel(), np.ascontiguousarray(g[:, 0]), np.ascontiguousarray(g[:, 1]),
                     h * state.bs_eigenvector, state.kappa0, out)
    psi = out.reshape(X.shape)
    dA = (x[1] - x[0] if x.size > 1 else 1.0) * (y[1] - y[0] if y.size > 1 else 1.0)
    good = np.isfinite(psi)
    psi = psi / math.sqrt(np.sum(psi[good] ** 2) * abs(dA))
    if np.nansum(psi) < 0:
        psi = -psi
    return FieldSample(x, y, psi, int(skipped))
