"""Infinite planar curves in arc-length parametrization.

Every curve exposes vectorized ``gamma``, ``tangent``, ``normal`` and (for
C^2 kinds) ``curvature`` callables of the arc length ``s``.  Smooth curves
that are specified through their curvature are integrated once onto a
table (fourth-order Frenet integration) and evaluated by cubic Hermite
interpolation; outside the table they continue as exact straight rays.

Geometric admissibility is checked by sampling:

* ``check_a1`` estimates ``c = inf |gamma(s)-gamma(s')| / |s-s'|``.
* ``check_a2`` fits the decay of the chord excess
  ``e(s,s') = 1 - |gamma(s)-gamma(s')|/|s-s'|`` inside the sector
  ``omega < s/s' < 1/omega`` against ``d [1 + |s+s'|^(2 mu)]^(-1/2)``.

Both are diagnostics on finite pair grids, not certificates.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special
from scipy.interpolate import Akima1DInterpolator

from .errors import (
    AssumptionViolation,
    DegenerateParametrizationError,
    GeometryError,
    UndefinedPairError,
)

log = logging.getLogger(__name__)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _as_array(s):
    return np.asarray(s, dtype=float)


def _rot90(t):
    return np.stack([-t[..., 1], t[..., 0]], axis=-1)


def _unit(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


# ---------------------------------------------------------------------------
# base class
# ---------------------------------------------------------------------------


class Curve:
    """Unit-speed planar curve s -> gamma(s), s in R.

    Subclasses implement ``gamma`` and ``tangent``; ``curvature`` only when
    the curve is C^2 (``is_c2``).  ``core_radius`` is the arc length beyond
    which the curve is an exact straight ray on both sides.
    """

    kind = "Curve"
    is_c2 = True

    def __init__(self, params: dict | None = None, core_radius: float = 0.0):
        self.params = dict(params or {})
        self.core_radius = float(core_radius)

    # geometry ----------------------------------------------------------
    def gamma(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def normal(self, s):
        return _rot90(self.tangent(s))

    def curvature(self, s):
        raise GeometryError(f"{self.kind} is only piecewise C1; curvature is undefined")

    def curvature_bound(self) -> float:
        """sup |k|; infinite for curves with kinks."""
        return math.inf

    def feature_points(self) -> np.ndarray:
        """Arc-length values that sampling grids should always contain."""
        return np.array([0.0])

    def sampling_horizon(self) -> float:
        return max(20.0, 20.0 * self.core_radius)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}

    # derived -----------------------------------------------------------
    @cached_property
    def min_separation(self) -> float:
        """Operational c_-: distance scale below which strips around the curve stay disjoint.

        ``min(1/sup|k|, half the smallest chord between points further than
        pi/sup|k| apart along the curve)``; zero for curves with kinks and
        infinite for the straight line.
        """
        kmax = self.curvature_bound()
        if not math.isfinite(kmax):
            return 0.0
        if kmax == 0.0:
            return math.inf
        gap = math.pi / kmax
        pts = _sample_points(self, SampleSpec())
        g = self.gamma(pts)
        ds = np.abs(pts[:, None] - pts[None, :])
        chord = np.linalg.norm(g[:, None, :] - g[None, :, :], axis=-1)
        far = ds >= gap
        half_chord = 0.5 * chord[far].min() if np.any(far) else math.inf
        return float(min(1.0 / kmax, half_chord))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}({args})"


class Line(Curve):
    kind = "Line"

    def __init__(self):
        super().__init__({}, core_radius=0.0)

    def gamma(self, s):
        s = _as_array(s)
        return np.stack([s, np.zeros_like(s)], axis=-1)

    def tangent(self, s):
        s = _as_array(s)
        return np.stack([np.ones_like(s), np.zeros_like(s)], axis=-1)

    def curvature(self, s):
        return np.zeros_like(_as_array(s))

    def curvature_bound(self):
        return 0.0


class Corner(Curve):
    """Two rays meeting at the origin: gamma(s) = (s cos phi, |s| sin phi).

    The deflection angle between the rays is 2 phi.
    """

    kind = "Corner"
    is_c2 = False

    def __init__(self, phi: float):
        if not 0.0 <= phi < 0.5 * math.pi:
            raise ValueError("Corner angle must lie in [0, pi/2)")
        super().__init__({"phi": float(phi)}, core_radius=0.0)
        self.phi = float(phi)
        if phi == 0.0:
            self.is_c2 = True

    def gamma(self, s):
        s = _as_array(s)
        return np.stack([s * math.cos(self.phi), np.abs(s) * math.sin(self.phi)], axis=-1)

    def tangent(self, s):
        s = _as_array(s)
        sgn = np.where(s >= 0, 1.0, -1.0)
        return np.stack([np.full_like(s, math.cos(self.phi)), sgn * math.sin(self.phi)], axis=-1)

    def curvature(self, s):
        if self.phi == 0.0:
            return np.zeros_like(_as_array(s))
        return super().curvature(s)

    def curvature_bound(self):
        return 0.0 if self.phi == 0.0 else math.inf


# ---------------------------------------------------------------------------
# curvature-defined curves on a Frenet table
# ---------------------------------------------------------------------------


def _eval_k(k, s):
    return np.broadcast_to(np.asarray(k(s), dtype=float), np.shape(s)).copy()


def _integrate_side(k, steps, theta_exact=None):
    """Integrate theta and gamma from s=0 along the monotone node list ``steps``.

    Fourth-order: Simpson for theta (quarter points give the midpoint
    angle), Simpson for gamma using the midpoint tangent.
    """
    s = steps
    h = np.diff(s)
    mid = s[:-1] + 0.5 * h
    if theta_exact is not None:
        theta = theta_exact(s)
        theta_mid = theta_exact(mid)
    else:
        k0 = _eval_k(k, s)
        kq = _eval_k(k, s[:-1] + 0.25 * h)
        km = _eval_k(k, mid)
        dtheta = h / 6.0 * (k0[:-1] + 4.0 * km + k0[1:])
        theta = np.concatenate([[0.0], np.cumsum(dtheta)])
        theta_mid = theta[:-1] + h / 12.0 * (k0[:-1] + 4.0 * kq + km)
    t_nodes = _unit(theta)
    t_mid = _unit(theta_mid)
    dg = (h / 6.0)[:, None] * (t_nodes[:-1] + 4.0 * t_mid + t_nodes[1:])
    g = np.vstack([[0.0, 0.0], np.cumsum(dg, axis=0)])
    return theta, g


def _hermite_basis(t):
    t2 = t * t
    t3 = t2 * t
    return 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2


def _hermite_basis_d(t):
    t2 = t * t
    return 6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t


class _TableCurve(Curve):
    """Curve stored as (s, theta, gamma) nodes with straight rays beyond the table."""

    def _set_table(self, s_nodes, theta, g, k_nodes, k_func):
        self._s = np.ascontiguousarray(s_nodes, dtype=float)
        self._theta = np.ascontiguousarray(theta, dtype=float)
        self._g = np.ascontiguousarray(g, dtype=float)
        self._k = np.ascontiguousarray(k_nodes, dtype=float)
        self._k_func = k_func
        self._tn = _unit(self._theta)
        self._a, self._b = float(self._s[0]), float(self._s[-1])

    @property
    def table_extent(self):
        return self._a, self._b

    def _locate(self, s):
        j = np.clip(np.searchsorted(self._s, s, side="right") - 1, 0, self._s.size - 2)
        h = self._s[j + 1] - self._s[j]
        t = (np.clip(s, self._a, self._b) - self._s[j]) / h
        return j, h, t

    def _theta_at(self, s):
        j, h, t = self._locate(s)
        b0, b1, b2, b3 = _hermite_basis(t)
        th = b0 * self._theta[j] + b1 * h * self._k[j] + b2 * self._theta[j + 1] + b3 * h * self._k[j + 1]
        return th

    def gamma(self, s):
        s = _as_array(s)
        j, h, t = self._locate(s)
        b0, b1, b2, b3 = _hermite_basis(t)
        tn = self._tn
        hh = h[..., None]
        g = (b0[..., None] * self._g[j] + b1[..., None] * hh * tn[j]
             + b2[..., None] * self._g[j + 1] + b3[..., None] * hh * tn[j + 1])
        # straight continuation
        lo = s < self._a
        hi = s > self._b
        if np.any(lo):
            g[lo] = self._g[0] + (s[lo] - self._a)[:, None] * tn[0]
        if np.any(hi):
            g[hi] = self._g[-1] + (s[hi] - self._b)[:, None] * tn[-1]
        return g

    def tangent(self, s):
        s = _as_array(s)
        return _unit(self._theta_at(s))

    def angle(self, s):
        return self._theta_at(_as_array(s))

    def curvature(self, s):
        s = _as_array(s)
        inside = (s >= self._a) & (s <= self._b)
        out = np.zeros_like(s)
        if np.any(inside):
            out[inside] = _eval_k(self._k_func, s[inside])
        return out

    def curvature_bound(self):
        return float(np.max(np.abs(self._k)))

    def node_samples(self, max_points=400):
        step = max(1, self._s.size // max_points)
        return self._s[::step]


def _two_sided_nodes(a, b, step):
    nl = max(1, int(math.ceil(-a / step))) if a < 0 else 0
    nr = max(1, int(math.ceil(b / step))) if b > 0 else 0
    left = np.linspace(0.0, a, nl + 1) if nl else np.array([0.0])
    right = np.linspace(0.0, b, nr + 1) if nr else np.array([0.0])
    return left, right


def _build_frenet(curve, k, a, b, step, theta_exact=None):
    if not a <= 0.0 <= b or a == b:
        raise ValueError("curvature domain must satisfy a <= 0 <= b, a < b")
    left, right = _two_sided_nodes(a, b, step)
    th_r, g_r = _integrate_side(k, right, theta_exact)
    th_l, g_l = _integrate_side(k, left, theta_exact)
    s = np.concatenate([left[::-1], right[1:]])
    theta = np.concatenate([th_l[::-1], th_r[1:]])
    g = np.vstack([g_l[::-1], g_r[1:]])
    k_nodes = _eval_k(k, s)
    curve._set_table(s, theta, g, k_nodes, k)


class CurvatureDefined(_TableCurve):
    """Curve with prescribed signed curvature k(s) on [a, b] (a <= 0 <= b).

    gamma(0) = 0, tangent(0) = (1, 0); straight rays outside [a, b].
    """

    kind = "CurvatureDefined"

    def __init__(self, k: Callable, domain: Sequence[float], resolution: int = 4001,
                 params: dict | None = None):
        a, b = map(float, domain)
        step = (b - a) / max(int(resolution) - 1, 1)
        super().__init__(params or {"domain": [a, b], "resolution": int(resolution)},
                         core_radius=max(abs(a), abs(b)))
        _build_frenet(self, k, a, b, step)

    def feature_points(self):
        return np.array([self._a, 0.0, self._b])

    def sampling_horizon(self):
        return max(20.0, 4.0 * self.core_radius)


def curve_from_curvature(k: Callable, domain: Sequence[float], resolution: int = 4001) -> CurvatureDefined:
    """Unit-speed curve with signed curvature ``k`` (Frenet integration)."""
    return CurvatureDefined(k, domain, resolution)


class SmoothedCorner(_TableCurve):
    """Gaussian-curvature bend: k(s) = Theta/(w sqrt(pi)) exp(-(s/w)^2).

    Total turning angle Theta; the tangent angle is (Theta/2) erf(s/w).
    Beyond |s| = 7w the curvature is below 1e-21 and the curve is
    continued as exact rays.
    """

    kind = "SmoothedCorner"
    CORE_WIDTHS = 7.0

    def __init__(self, Theta: float, w: float, points_per_width: int = 200):
        if w <= 0:
            raise ValueError("width w must be positive")
        super().__init__({"Theta": float(Theta), "w": float(w)}, core_radius=self.CORE_WIDTHS * w)
        self.Theta, self.w = float(Theta), float(w)
        amp = Theta / (w * math.sqrt(math.pi))

        def k(s):
            return amp * np.exp(-(np.asarray(s) / w) ** 2)

        def theta(s):
            return 0.5 * Theta * special.erf(np.asarray(s) / w)

        S = self.core_radius
        _build_frenet(self, k, -S, S, w / points_per_width, theta_exact=theta)

    def curvature_bound(self):
        return abs(self.Theta) / (self.w * math.sqrt(math.pi))


class DecayingCurvature(_TableCurve):
    """k(s) = c2 (1 + s^2)^(-beta/2), tabulated on |s| <= horizon.

    The curvature never vanishes, so ``core_radius`` is infinite; beyond the
    table horizon the curve is continued straight (the residual turning is
    of order c2 horizon^(1-beta)).
    """

    kind = "DecayingCurvature"

    def __init__(self, c2: float, beta: float, horizon: float = 2048.0, step: float = 0.01):
        super().__init__({"c2": float(c2), "beta": float(beta)}, core_radius=math.inf)
        self.c2, self.beta = float(c2), float(beta)
        self.horizon = float(horizon)

        def k(s):
            return c2 * (1.0 + np.asarray(s) ** 2) ** (-0.5 * beta)

        _build_frenet(self, k, -horizon, horizon, step)

    def curvature_bound(self):
        return abs(self.c2)

    def sampling_horizon(self):
        return 0.98 * self.horizon


# ---------------------------------------------------------------------------
# tabulated (reparametrized) curves
# ---------------------------------------------------------------------------


def _eval_path(f, xi):
    xi = np.asarray(xi, dtype=float)
    try:
        out = np.asarray(f(xi), dtype=float)
        if out.shape == (2,) + xi.shape:
            return np.moveaxis(out, 0, -1)
        if out.shape == xi.shape + (2,):
            return out
    except Exception:  # non-vectorized callable
        pass
    return np.array([np.asarray(f(float(x)), dtype=float) for x in xi.ravel()]).reshape(xi.shape + (2,))


def _path_derivative(f, xi, a, b):
    dx = np.min(np.diff(xi)) if xi.size > 1 else (b - a)
    d = 1e-3 * dx
    inner = (xi - 2 * d >= a) & (xi + 2 * d <= b)
    out = np.empty(xi.shape + (2,))
    if np.any(inner):
        x = xi[inner]
        out[inner] = (-_eval_path(f, x + 2 * d) + 8 * _eval_path(f, x + d)
                      - 8 * _eval_path(f, x - d) + _eval_path(f, x - 2 * d)) / (12 * d)
    left = ~inner & (xi - a < b - xi)
    right = ~inner & ~left
    if np.any(left):
        x = xi[left]
        out[left] = (-3 * _eval_path(f, x) + 4 * _eval_path(f, x + d) - _eval_path(f, x + 2 * d)) / (2 * d)
    if np.any(right):
        x = xi[right]
        out[right] = (3 * _eval_path(f, x) - 4 * _eval_path(f, x - d) + _eval_path(f, x - 2 * d)) / (2 * d)
    return out


class Tabulated(Curve):
    """Curve given by samples (xi, x, y) of an arbitrary parametrization.

    The path is interpolated by piecewise cubic Hermite polynomials in xi;
    arc length is integrated on the interpolant with 8-point Gauss-Legendre
    per cell, and gamma(s) is evaluated by Newton inversion of s(xi).  Because
    the tangent is the normalized derivative of the interpolant, the
    parametrization is unit-speed by construction.  Beyond the table the
    curve continues along straight rays.

    ``origin`` selects which point gets s = 0: ``None`` (first sample),
    ``"center"`` (half the arc length) or a parameter value xi0.
    """

    kind = "Tabulated"
    is_c2 = False

    def __init__(self, xi, points, derivatives, origin=None, params=None):
        xi = np.asarray(xi, dtype=float)
        P = np.asarray(points, dtype=float)
        D = np.asarray(derivatives, dtype=float)
        if xi.ndim != 1 or xi.size < 2 or np.any(np.diff(xi) <= 0):
            raise ValueError("parameter samples must be strictly increasing")
        self._xi, self._P, self._D = xi, P, D
        self._dxi = np.diff(xi)
        # arc length per cell on the interpolant
        mid = 0.5 * (xi[1:] + xi[:-1])
        half = 0.5 * self._dxi
        q = mid[:, None] + half[:, None] * _GL_X[None, :]
        speed = self._speed_raw(q)
        cell_len = half * (speed @ _GL_W)
        s_nodes = np.concatenate([[0.0], np.cumsum(cell_len)])
        self.length = float(s_nodes[-1])
        if origin is None:
            off = 0.0
        elif origin == "center":
            off = 0.5 * self.length
        else:
            off = float(self._arc_from_xi(np.array([float(origin)]), s_nodes)[0])
        self._s = s_nodes - off
        self._a, self._b = float(self._s[0]), float(self._s[-1])
        self._end_t = np.array([self._unit_deriv(xi[:1])[0], self._unit_deriv(xi[-1:])[0]])
        super().__init__(params or {}, core_radius=max(abs(self._a), abs(self._b)))

    # interpolant in xi ---------------------------------------------------
    def _cell(self, x):
        return np.clip(np.searchsorted(self._xi, x, side="right") - 1, 0, self._xi.size - 2)

    def _interp(self, x, j=None):
        j = self._cell(x) if j is None else j
        h = self._dxi[j]
        t = (x - self._xi[j]) / h
        b = _hermite_basis(t)
        hh = h[..., None]
        return (b[0][..., None] * self._P[j] + b[1][..., None] * hh * self._D[j]
                + b[2][..., None] * self._P[j + 1] + b[3][..., None] * hh * self._D[j + 1])

    def _interp_d(self, x, j=None):
        j = self._cell(x) if j is None else j
        h = self._dxi[j]
        t = (x - self._xi[j]) / h
        b = _hermite_basis_d(t)
        return (b[0][..., None] * self._P[j] / h[..., None] + b[1][..., None] * self._D[j]
                + b[2][..., None] * self._P[j + 1] / h[..., None] + b[3][..., None] * self._D[j + 1])

    def _interp_dd(self, x, j=None):
        j = self._cell(x) if j is None else j
        h = self._dxi[j]
        t = (x - self._xi[j]) / h
        b0, b1, b2, b3 = 12 * t - 6, 6 * t - 4, -12 * t + 6, 6 * t - 2
        hh = h[..., None]
        return (b0[..., None] * self._P[j] / hh**2 + b1[..., None] * self._D[j] / hh
                + b2[..., None] * self._P[j + 1] / hh**2 + b3[..., None] * self._D[j + 1] / hh)

    def _speed_raw(self, x, j=None):
        return np.linalg.norm(self._interp_d(x, j), axis=-1)

    def _unit_deriv(self, x):
        d = self._interp_d(x)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def _arc_from_xi(self, x, s_nodes, j=None):
        j = self._cell(x) if j is None else j
        half = 0.5 * (x - self._xi[j])
        q = self._xi[j][..., None] + half[..., None] * (1.0 + _GL_X)
        jj = np.broadcast_to(j[..., None], q.shape)
        return s_nodes[j] + half * (self._speed_raw(q, jj) @ _GL_W)

    def _xi_from_s(self, s):
        j = np.clip(np.searchsorted(self._s, s, side="right") - 1, 0, self._s.size - 2)
        frac = (s - self._s[j]) / (self._s[j + 1] - self._s[j])
        x = self._xi[j] + frac * self._dxi[j]
        lo, hi = self._xi[j], self._xi[j + 1]
        for _ in range(50):
            f = self._arc_from_xi(x, self._s, j) - s
            sp = np.maximum(self._speed_raw(x, j), 1e-300)
            step = f / sp
            x = np.clip(x - step, lo, hi)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + np.abs(x))):
                break
        return x, j

    # curve interface -----------------------------------------------------
    def gamma(self, s):
        s = _as_array(s)
        sc = np.clip(s, self._a, self._b)
        x, j = self._xi_from_s(sc)
        g = self._interp(x, j)
        lo, hi = s < self._a, s > self._b
        if np.any(lo):
            g[lo] = self._P[0] + (s[lo] - self._a)[:, None] * self._end_t[0]
        if np.any(hi):
            g[hi] = self._P[-1] + (s[hi] - self._b)[:, None] * self._end_t[1]
        return g

    def tangent(self, s):
        s = _as_array(s)
        x, j = self._xi_from_s(np.clip(s, self._a, self._b))
        d = self._interp_d(x, j)
        t = d / np.linalg.norm(d, axis=-1, keepdims=True)
        t[s < self._a] = self._end_t[0]
        t[s > self._b] = self._end_t[1]
        return t

    def curvature(self, s):
        """Piecewise curvature of the interpolant (discontinuous at samples)."""
        s = _as_array(s)
        x, j = self._xi_from_s(np.clip(s, self._a, self._b))
        d1, d2 = self._interp_d(x, j), self._interp_dd(x, j)
        k = (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / np.linalg.norm(d1, axis=-1) ** 3
        return np.where((s < self._a) | (s > self._b), 0.0, k)

    def feature_points(self):
        step = max(1, self._s.size // 400)
        return np.concatenate([self._s[::step], [self._b, 0.0]])

    def sampling_horizon(self):
        return max(20.0, 3.0 * self.core_radius)


def reparametrize(tilde_gamma: Callable, domain: Sequence[float], resolution: int = 2001,
                  derivative: Callable | None = None, origin=None) -> Tabulated:
    """Arc-length reparametrization of a parametrized path.

    Parameters
    ----------
    tilde_gamma : callable
        xi -> point (vectorized or scalar).
    domain : (xi1, xi2)
    resolution : int
        Number of interpolation samples.
    derivative : callable, optional
        Exact d tilde_gamma / d xi; central differences are used otherwise.
    origin : None, "center" or float
        Which point receives s = 0.

    Raises
    ------
    DegenerateParametrizationError
        If the speed vanishes on a set of positive measure.
    """
    a, b = map(float, domain)
    xi = np.linspace(a, b, int(resolution))
    P = _eval_path(tilde_gamma, xi)
    D = _eval_path(derivative, xi) if derivative is not None else _path_derivative(tilde_gamma, xi, a, b)
    fine = np.linspace(a, b, 4 * int(resolution) + 1)
    sp = np.linalg.norm(_path_derivative(tilde_gamma, fine, a, b) if derivative is None
                        else _eval_path(derivative, fine), axis=-1)
    scale = np.mean(sp)
    if not scale > 0 or np.mean(sp < 1e-6 * scale) > 0.01:
        raise DegenerateParametrizationError("path speed vanishes on a set of positive measure")
    return Tabulated(xi, P, D, origin=origin, params={"domain": [a, b], "resolution": int(resolution)})


def tabulated_from_csv(path, origin="center") -> Tabulated:
    """Read a three-column CSV (xi, x, y) and reparametrize by arc length.

    Node derivatives come from Akima's local cubic; header lines and
    ``#`` comments are skipped.
    """
    rows = []
    with open(Path(path), newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in rec[:3]])
            except ValueError:
                continue  # header
    data = np.asarray(rows)
    if data.ndim != 2 or data.shape[0] < 4 or data.shape[1] != 3:
        raise ValueError(f"{path}: expected at least four rows of (xi, x, y)")
    xi, P = data[:, 0], data[:, 1:]
    D = Akima1DInterpolator(xi, P, axis=0).derivative()(xi)
    sp = np.linalg.norm(D, axis=-1)
    if np.mean(sp < 1e-6 * np.mean(sp)) > 0.01:
        raise DegenerateParametrizationError("path speed vanishes on a set of positive measure")
    return Tabulated(xi, P, D, origin=origin, params={"csv": str(path)})


class ScaledCurve(Curve):
    """gamma_sigma(s) = sigma * gamma(s / sigma)."""

    def __init__(self, base: Curve, sigma: float):
        if sigma <= 0:
            raise ValueError("scale factor must be positive")
        super().__init__({"base": base.describe(), "sigma": float(sigma)},
                         core_radius=sigma * base.core_radius)
        self.base, self.sigma = base, float(sigma)
        self.kind = f"Scaled{base.kind}"
        self.is_c2 = base.is_c2

    def gamma(self, s):
        return self.sigma * self.base.gamma(_as_array(s) / self.sigma)

    def tangent(self, s):
        return self.base.tangent(_as_array(s) / self.sigma)

    def curvature(self, s):
        return self.base.curvature(_as_array(s) / self.sigma) / self.sigma

    def curvature_bound(self):
        return self.base.curvature_bound() / self.sigma

    def feature_points(self):
        return self.sigma * self.base.feature_points()

    def sampling_horizon(self):
        return self.sigma * self.base.sampling_horizon()


# ---------------------------------------------------------------------------
# chords and assumption checks
# ---------------------------------------------------------------------------


def chord_excess(curve: Curve, s, s_prime):
    """e(s, s') = 1 - |gamma(s) - gamma(s')| / |s - s'|."""
    s, sp = np.broadcast_arrays(_as_array(s), _as_array(s_prime))
    if np.any(s == sp):
        raise UndefinedPairError("chord excess is undefined for s = s'")
    chord = np.linalg.norm(curve.gamma(s) - curve.gamma(sp), axis=-1)
    e = 1.0 - chord / np.abs(s - sp)
    return float(e) if e.ndim == 0 else e


def discrete_curvature(curve: Curve, s) -> np.ndarray:
    """Signed Menger curvature of consecutive triples gamma(s_{i-1}, s_i, s_{i+1})."""
    p = curve.gamma(_as_array(s))
    a, b = p[1:-1] - p[:-2], p[2:] - p[1:-1]
    c = p[2:] - p[:-2]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return 2.0 * cross / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1) * np.linalg.norm(c, axis=1))


@dataclass
class SampleSpec:
    """Pair-grid definition for the assumption scans.

    Radii are geometric in |s| on both sides from ``horizon*r_min_frac`` to
    ``horizon``; ``n_core`` uniform points cover the curved core and
    feature points (kinks, table nodes) are always included.
    """

    n_radial: int = 48
    r_min_frac: float = 1e-4
    horizon: float | None = None
    n_core: int = 81
    refine: bool = True


@dataclass
class A1Result:
    c_hat: float
    worst_pair: tuple


@dataclass
class AssumptionReport:
    c_hat: float
    d_hat: float
    mu_hat: float
    omega: float
    a2_satisfied_with_mu_above_half: bool
    worst_pair: tuple
    mu_grid: list = field(default_factory=list)
    d_by_mu: list = field(default_factory=list)
    horizon: float = math.nan
    note: str = "sampled diagnostic; c_hat is an upper estimate of the global infimum"

    def to_dict(self):
        return {
            "c_hat": self.c_hat,
            "d_hat": self.d_hat,
            "mu_hat": self.mu_hat,
            "omega": self.omega,
            "a2_satisfied_with_mu_above_half": self.a2_satisfied_with_mu_above_half,
            "worst_pair": list(self.worst_pair),
            "mu_grid": list(self.mu_grid),
            "d_by_mu": list(self.d_by_mu),
            "horizon": self.horizon,
            "note": self.note,
        }


def _sample_points(curve: Curve, spec: SampleSpec) -> np.ndarray:
    H = spec.horizon if spec.horizon is not None else curve.sampling_horizon()
    r = np.geomspace(H * spec.r_min_frac, H, spec.n_radial)
    core = min(curve.core_radius, H) if math.isfinite(curve.core_radius) else min(20.0, H)
    pts = [r, -r, [0.0], np.linspace(-core, core, spec.n_core), curve.feature_points()]
    return np.unique(np.concatenate([np.atleast_1d(np.asarray(p, float)) for p in pts]))


def _ratio_scan(curve, pts):
    g = curve.gamma(pts)
    i, j = np.triu_indices(pts.size, k=1)
    chord = np.linalg.norm(g[i] - g[j], axis=-1)
    ratio = chord / np.abs(pts[i] - pts[j])
    return i, j, ratio


def _a1_estimate(curve: Curve, spec: SampleSpec) -> A1Result:
    pts = _sample_points(curve, spec)
    i, j, ratio = _ratio_scan(curve, pts)
    w = int(np.argmin(ratio))
    best, pair = float(ratio[w]), (float(pts[i[w]]), float(pts[j[w]]))
    if spec.refine and best < 1.0 - 1e-12:
        H = float(np.abs(pts).max())

        def f(v):
            d = abs(v[0] - v[1])
            if max(abs(v[0]), abs(v[1])) > H:
                return 1.0
            if d < 1e-9:
                return 1.0
            return float(np.linalg.norm(curve.gamma(v[0]) - curve.gamma(v[1]))) / d

        res = optimize.minimize(f, np.array(pair), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
        if res.fun < best:
            best, pair = float(res.fun), (float(res.x[0]), float(res.x[1]))
    return A1Result(min(best, 1.0), pair)


def check_a1(curve: Curve, sample_spec: SampleSpec | None = None, floor: float = 1e-2) -> A1Result:
    """Sampled infimum of the chord/arc ratio.

    Raises
    ------
    AssumptionViolation
        If the ratio drops to ``floor`` or below (self-intersection or cusp).
    """
    res = _a1_estimate(curve, sample_spec or SampleSpec())
    if not res.c_hat > floor:
        raise AssumptionViolation(
            f"chord/arc ratio {res.c_hat:.3g} at pair {res.worst_pair} is below the floor {floor}",
            report={"c_hat": res.c_hat, "worst_pair": list(res.worst_pair), "floor": floor},
        )
    return res


def check_a2(curve: Curve, omega: float = 0.5, sample_spec: SampleSpec | None = None,
             mu_grid: Sequence[float] | None = None, growth_tol: float = 0.05,
             excess_floor: float = 1e-13) -> AssumptionReport:
    """Fit the sector decay of the chord excess.

    For each candidate mu the smallest admissible constant on the sampled
    pairs is ``d(mu) = max e * sqrt(1 + |s+s'|^(2 mu))``.  A value mu counts
    as feasible when d(mu) stops growing with the pair radius: the maximum
    over the outer decade of radii may exceed the maximum over the inner
    pairs by at most ``growth_tol``.  Excess below ``excess_floor`` is
    treated as exact zero (bound holds for every mu).
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    spec = sample_spec or SampleSpec()
    a1 = _a1_estimate(curve, spec)
    mus = np.asarray(mu_grid if mu_grid is not None else np.round(np.arange(0.05, 3.0001, 0.05), 10))
    H = spec.horizon if spec.horizon is not None else curve.sampling_horizon()
    r = np.geomspace(H * spec.r_min_frac, H, 2 * spec.n_radial)
    side = np.concatenate([r, -r])
    s, sp = np.meshgrid(side, side, indexing="ij")
    q = s / sp
    in_sector = (q > omega) & (q < 1.0 / omega) & (s != sp)
    s, sp = s[in_sector], sp[in_sector]
    e = chord_excess(curve, s, sp)
    e = np.where(e < excess_floor, 0.0, e)
    rad = np.abs(s + sp)
    outer = rad >= rad.max() / 10.0
    d_by_mu = []
    feasible = []
    for mu in mus:
        wgt = e * np.sqrt(1.0 + rad ** (2.0 * mu))
        d_by_mu.append(float(wgt.max()))
        if not np.any(e[outer] > 0):
            feasible.append(True)
            continue
        inner_max = wgt[~outer].max() if np.any(~outer) else 0.0
        feasible.append(bool(wgt[outer].max() <= inner_max * (1.0 + growth_tol)))
    feasible = np.array(feasible)
    if feasible.any():
        k = int(np.nonzero(feasible)[0].max())
        mu_hat, d_hat = float(mus[k]), d_by_mu[k]
    else:
        mu_hat, d_hat = 0.0, float(e.max())
    return AssumptionReport(
        c_hat=a1.c_hat, d_hat=d_hat, mu_hat=mu_hat, omega=float(omega),
        a2_satisfied_with_mu_above_half=bool(mu_hat > 0.5), worst_pair=a1.worst_pair,
        mu_grid=[float(m) for m in mus], d_by_mu=d_by_mu, horizon=float(H),
    )
