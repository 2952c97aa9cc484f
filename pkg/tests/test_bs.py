import math

import numpy as np
import pytest
import scipy.linalg
from scipy import integrate

from leakywire.bs import (
    assemble,
    assemble_straight_reference,
    build_grid,
    leading_eigs,
    log_moment,
    perturbation,
)
from leakywire.curves import Corner, DecayingCurvature, Line, ScaledCurve, SmoothedCorner
from leakywire.errors import ConvergenceError, GridMismatchError
from leakywire.special import k0


def test_build_grid_trivial():
    g = build_grid(1.0, 2)
    assert np.array_equal(g.nodes, [-0.5, 0.5])
    assert g.h == 1.0


@pytest.mark.parametrize("L,N", [(3.0, 10), (40.0, 512)])
def test_grid_invariants(L, N):
    g = build_grid(L, N)
    assert np.array_equal(g.nodes, -g.nodes[::-1])
    assert np.all(g.weights > 0)
    assert math.isclose(g.weights.sum(), 2 * L, rel_tol=1e-14)
    M = g.log_moments()
    for k in range(-3, 4):
        d = np.diag(M, k)
        assert np.all(d == d[0])


@pytest.mark.parametrize("bad", [(1.0, 3), (1.0, 0), (0.0, 4)])
def test_grid_rejects(bad):
    with pytest.raises(ValueError):
        build_grid(*bad)


@pytest.mark.parametrize("h", [1.0, 0.1, 1e-3])
def test_own_cell_log_moment(h):
    exact = h * (1 - math.log(h / 2))
    assert math.isclose(float(log_moment(np.array([0.0]), h)[0]), exact, rel_tol=1e-15)
    num = 2 * integrate.quad(lambda t: -math.log(t), 0, h / 2)[0]
    assert math.isclose(exact, num, rel_tol=1e-12)


@pytest.mark.parametrize("d", [0.1, 1.0, 7.0, 500.0])
def test_offcell_log_moment(d):
    h = 0.1
    num = integrate.quad(lambda t: -math.log(abs(t)), d - h / 2, d + h / 2)[0]
    assert math.isclose(float(log_moment(np.array([d]), h)[0]), num, rel_tol=1e-12, abs_tol=1e-15)


def test_symmetry_and_positivity():
    g = build_grid(20.0, 200)
    A = assemble(SmoothedCorner(math.pi / 2, 1.0), 1.0, 0.7, g).entries
    assert np.array_equal(A, A.T)
    # off-diagonal entries approximate (alpha/2pi) K0 h > 0
    assert np.all(A > 0)


def test_smooth_part_matches_kernel():
    g = build_grid(10.0, 100)
    bs = assemble(Corner(math.pi / 4), 1.0, 0.8, g)
    i, j = 10, 70
    P = Corner(math.pi / 4).gamma(g.nodes)
    rho = np.linalg.norm(P[i] - P[j])
    sig = abs(g.nodes[i] - g.nodes[j])
    smooth = (1 / (2 * math.pi)) * (k0(0.8 * rho) + math.log(0.4 * sig) + np.euler_gamma) * g.h
    assert math.isclose(bs.smooth_part[i, j], smooth, rel_tol=1e-12)


def test_line_equals_reference():
    g = build_grid(30.0, 256)
    A = assemble(Line(), 1.0, 0.6, g)
    ref = assemble_straight_reference(1.0, 0.6, g)
    D, hs = perturbation(A, ref)
    assert hs == 0.0 and not D.any()


def test_corner_perturbation_nonnegative():
    g = build_grid(30.0, 512)
    A = assemble(Corner(math.pi / 4), 1.0, 0.6, g)
    D, hs = perturbation(A, assemble_straight_reference(1.0, 0.6, g))
    assert D.min() >= -1e-14
    assert hs > 0


def test_corner_hs_norm_decreases():
    g = build_grid(40.0, 512)
    c = Corner(math.pi / 4)
    norms = [perturbation(assemble(c, 1.0, k, g), assemble_straight_reference(1.0, k, g))[1]
             for k in (0.5, 1.0, 2.0, 4.0)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_decaying_curvature_hs_stable_under_L_doubling():
    c = DecayingCurvature(0.5, 1.5)
    h = 0.1
    vals = []
    for L in (100.0, 200.0):
        g = build_grid(L, int(2 * L / h))
        vals.append(perturbation(assemble(c, 1.0, 1.0, g), assemble_straight_reference(1.0, 1.0, g))[1])
    assert np.isfinite(vals).all()
    assert abs(vals[1] - vals[0]) < 0.05 * vals[0]


def test_perturbation_mismatch():
    a = assemble_straight_reference(1.0, 1.0, build_grid(5.0, 10))
    b = assemble_straight_reference(1.0, 1.0, build_grid(5.0, 12))
    with pytest.raises(GridMismatchError):
        perturbation(a, b)


def test_alpha_linearity():
    g = build_grid(10.0, 64)
    a = assemble_straight_reference(1.0, 0.9, g).entries
    b = assemble_straight_reference(2.0, 0.9, g).entries
    assert np.array_equal(b, 2 * a)


def test_scaling_identity():
    # A(sigma*alpha, sigma*kappa, gamma, L) == A(alpha, kappa, gamma_sigma, sigma*L) entrywise
    c = Corner(math.pi / 4)
    A = assemble(c, 2.0, 1.2, build_grid(10.0, 128)).entries
    B = assemble(ScaledCurve(c, 2.0), 1.0, 0.6, build_grid(20.0, 128)).entries
    assert np.max(np.abs(A - B)) < 1e-14


@pytest.mark.parametrize("L,N", [(20.0, 256), (60.0, 1024)])
def test_reference_top_below_continuum(L, N):
    lam = leading_eigs(assemble_straight_reference(1.0, 0.5, build_grid(L, N)), 1).values[0]
    assert lam <= 1.0 + 1e-6


def test_reference_large_kappa_halving():
    g = build_grid(20.0, 2048)
    l2 = leading_eigs(assemble_straight_reference(1.0, 2.0, g), 1).values[0]
    l4 = leading_eigs(assemble_straight_reference(1.0, 4.0, g), 1).values[0]
    assert abs(l4 / l2 - 0.5) < 0.02


def test_leading_eigs_diagonal():
    res = leading_eigs(np.diag([3.0, 2.0, 1.0]), 1)
    assert res.values[0] == 3.0
    assert np.allclose(res.vectors[:, 0], [1, 0, 0])
    with pytest.raises(ValueError):
        leading_eigs(np.eye(2), 3)


def test_line_eigenvector_even():
    g = build_grid(30.0, 300)
    res = leading_eigs(assemble(Line(), 1.0, 0.6, g), 2)
    v = res.vectors[:, 0]
    assert np.allclose(v, v[::-1], atol=1e-10)
    assert v.sum() > 0
    assert np.all(res.residuals <= 1e-10 * np.linalg.norm(assemble(Line(), 1.0, 0.6, g).entries))


def test_corner_exceeds_continuum_sup():
    kappa = 0.52
    lam = leading_eigs(assemble(Corner(math.pi / 4), 1.0, kappa, build_grid(80.0, 2048)), 1).values[0]
    assert lam > 1.0 / (2 * kappa)


def test_lanczos_path_agrees_with_dense():
    g = build_grid(40.0, 2100)
    bs = assemble(SmoothedCorner(math.pi / 2, 1.0), 1.0, 0.6, g)
    lz = leading_eigs(bs, 2)
    assert lz.method == "lanczos"
    w = scipy.linalg.eigh(bs.entries, eigvals_only=True, subset_by_index=[2098, 2099])[::-1]
    assert np.allclose(lz.values, w, rtol=1e-12)


def test_residual_failure_raises():
    # a non-symmetric matrix cannot meet the residual bound
    A = np.array([[1.0, 5.0], [0.0, 2.0]])
    with pytest.raises(ConvergenceError):
        leading_eigs(A, 1)


def test_dump(tmp_path):
    g = build_grid(5.0, 10)
    bs = assemble(Line(), 1.0, 1.0, g, dump_path=tmp_path / "m.npy")
    assert np.array_equal(np.load(tmp_path / "m.npy"), bs.entries)
