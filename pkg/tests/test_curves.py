import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakywire.curves import (
    Corner,
    DecayingCurvature,
    Line,
    SampleSpec,
    ScaledCurve,
    SmoothedCorner,
    Tabulated,
    chord_excess,
    check_a1,
    check_a2,
    curve_from_curvature,
    discrete_curvature,
    reparametrize,
    tabulated_from_csv,
)
from leakywire.errors import (
    AssumptionViolation,
    DegenerateParametrizationError,
    GeometryError,
    UndefinedPairError,
)

# (sqrt(2) + asinh(1)) / 2, adaptive quadrature of sqrt(1 + xi^2) on [0, 1]
PARABOLA_LENGTH = 1.1477935746917585

S = np.linspace(-30.0, 30.0, 241)


def _curves():
    return [
        Line(),
        Corner(math.pi / 4),
        SmoothedCorner(math.pi / 2, 1.0),
        DecayingCurvature(0.5, 1.5, horizon=256.0),
        reparametrize(lambda x: np.stack([x, 0.5 * x**2], axis=-1), [-2.0, 2.0], origin="center"),
    ]


@pytest.mark.parametrize("curve", _curves(), ids=lambda c: c.kind)
def test_unit_speed_and_lipschitz(curve):
    t = curve.tangent(S)
    assert np.allclose(np.linalg.norm(t, axis=-1), 1.0, atol=1e-9)
    g = curve.gamma(S)
    chord = np.linalg.norm(g[:, None] - g[None, :], axis=-1)
    arc = np.abs(S[:, None] - S[None, :])
    assert np.all(chord <= arc * (1 + 1e-10) + 1e-12)
    n = curve.normal(S)
    assert np.allclose(np.einsum("ij,ij->i", t, n), 0.0, atol=1e-14)


def test_line_and_degenerate_corners_coincide():
    ref = Line().gamma(S)
    assert np.allclose(Corner(0.0).gamma(S), ref, atol=1e-15)
    assert np.allclose(SmoothedCorner(0.0, 1.0).gamma(S), ref, atol=1e-12)


def test_corner_rejects_bad_angle():
    with pytest.raises(ValueError):
        Corner(math.pi / 2)
    with pytest.raises(GeometryError):
        Corner(0.3).curvature(0.0)


def test_corner_closed_form():
    c = Corner(0.3)
    s = np.array([-2.0, 0.0, 1.5])
    expected = np.stack([s * math.cos(0.3), np.abs(s) * math.sin(0.3)], axis=-1)
    assert np.allclose(c.gamma(s), expected, atol=1e-15)


# curve_from_curvature ----------------------------------------------------
def test_zero_curvature_is_line():
    c = curve_from_curvature(lambda s: np.zeros_like(s), [0.0, 5.0], 101)
    s = np.linspace(-1, 8, 19)
    assert np.allclose(c.gamma(s), np.stack([s, 0 * s], axis=-1), atol=1e-14)


@pytest.mark.parametrize("R", [0.5, 2.0])
def test_quarter_circle(R):
    c = curve_from_curvature(lambda s: np.full_like(s, 1.0 / R), [0.0, math.pi * R / 2], 2001)
    end = c.gamma(math.pi * R / 2)
    assert np.allclose(end, [R, R], atol=1e-10)
    mid = np.linspace(0, math.pi * R / 2, 50)
    assert np.allclose(np.linalg.norm(c.gamma(mid) - [0.0, R], axis=-1), R, atol=1e-10)


def test_gaussian_turning_angle():
    Theta, w = 1.3, 0.7
    c = curve_from_curvature(lambda s: Theta / (w * math.sqrt(math.pi)) * np.exp(-(s / w) ** 2), [-8.0, 8.0], 4001)
    total = c.angle(8.0) - c.angle(-8.0)
    assert abs(total - Theta) < 1e-10


def test_reconstructed_curvature_matches_input():
    k = lambda s: 0.4 * np.cos(s)  # noqa: E731
    c = curve_from_curvature(k, [-4.0, 4.0], 4001)
    s = np.linspace(-3.5, 3.5, 401)
    assert np.allclose(c.curvature(s), k(s), atol=1e-12)
    assert np.allclose(discrete_curvature(c, s), k(s[1:-1]), atol=1e-4)


def test_smoothed_corner_turning_and_separation():
    c = SmoothedCorner(math.pi / 2, 1.0)
    t_far = c.tangent(np.array([-50.0, 50.0]))
    angle = math.atan2(t_far[1, 1], t_far[1, 0]) - math.atan2(t_far[0, 1], t_far[0, 0])
    assert abs(angle - math.pi / 2) < 1e-12
    assert 0 < c.min_separation <= 1.0 / c.curvature_bound()


# reparametrize -----------------------------------------------------------
def test_reparametrize_rescaled_line():
    c = reparametrize(lambda x: np.stack([2 * x, 0 * x], axis=-1), [0.0, 1.0], 101)
    assert abs(c.length - 2.0) < 1e-12
    s = np.linspace(0, 2, 11)
    assert np.allclose(c.gamma(s), np.stack([s, 0 * s], axis=-1), atol=1e-12)


def test_reparametrize_diagonal():
    c = reparametrize(lambda x: np.stack([x, x], axis=-1), [0.0, 1.0], 101)
    assert abs(c.length - math.sqrt(2)) < 1e-12
    s = np.linspace(0, math.sqrt(2), 7)
    assert np.allclose(c.gamma(s), np.stack([s, s], axis=-1) / math.sqrt(2), atol=1e-12)


def test_reparametrize_parabola_length():
    c = reparametrize(lambda x: np.stack([x, 0.5 * x**2], axis=-1), [0.0, 1.0], 401)
    assert abs(c.length - PARABOLA_LENGTH) < 1e-9
    s = np.linspace(0, c.length, 101)
    assert np.allclose(np.linalg.norm(c.tangent(s), axis=-1), 1.0, atol=1e-12)
    # speed of gamma by finite differences
    d = np.linalg.norm(np.diff(c.gamma(s), axis=0), axis=-1) / np.diff(s)
    assert np.allclose(d, 1.0, atol=1e-4)


def test_reparametrize_degenerate():
    with pytest.raises(DegenerateParametrizationError):
        reparametrize(lambda x: np.stack([np.clip(x, 0, 0.2), 0 * x], axis=-1), [0.0, 1.0], 201)


def test_tabulated_from_csv(tmp_path):
    xi = np.linspace(0, 1, 201)
    rows = "\n".join(f"{a:.17g},{3 * a:.17g},{4 * a:.17g}" for a in xi)
    p = tmp_path / "seg.csv"
    p.write_text("xi,x,y\n" + rows + "\n")
    c = tabulated_from_csv(p)
    assert isinstance(c, Tabulated)
    assert abs(c.length - 5.0) < 1e-10
    assert np.allclose(c.gamma(0.0), [1.5, 2.0], atol=1e-10)


# chord_excess ------------------------------------------------------------
def test_chord_excess_examples():
    assert chord_excess(Line(), 3.0, -1.0) == 0.0
    c = Corner(math.pi / 4)
    assert abs(chord_excess(c, 2.0, -2.0) - (1 - math.cos(math.pi / 4))) < 1e-15
    assert abs(chord_excess(c, 1.0, 5.0)) < 1e-15
    with pytest.raises(UndefinedPairError):
        chord_excess(c, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-40, 40), st.floats(-40, 40))
def test_chord_excess_range(s, sp):
    if abs(s - sp) < 1e-6:
        return
    e = chord_excess(SmoothedCorner(math.pi / 2, 1.0), s, sp)
    assert -1e-10 <= e < 1.0


# scaling -----------------------------------------------------------------
def test_scaled_curve():
    base = SmoothedCorner(math.pi / 2, 1.0)
    c = ScaledCurve(base, 2.0)
    s = np.linspace(-10, 10, 41)
    assert np.allclose(c.gamma(s), 2 * base.gamma(s / 2), atol=1e-15)
    assert np.allclose(c.curvature(s), base.curvature(s / 2) / 2, atol=1e-15)


# assumption checks -------------------------------------------------------
def test_a1_line():
    assert check_a1(Line()).c_hat == 1.0


def test_a1_corner():
    res = check_a1(Corner(math.pi / 4))
    assert abs(res.c_hat - math.cos(math.pi / 4)) < 1e-3
    s, sp = res.worst_pair
    assert s * sp < 0


def test_a1_self_intersecting():
    fig8 = reparametrize(lambda x: np.stack([np.sin(x), np.sin(x) * np.cos(x)], axis=-1), [0.0, 2 * math.pi], 801)
    with pytest.raises(AssumptionViolation) as exc:
        check_a1(fig8, SampleSpec(horizon=10.0))
    assert exc.value.exit_code == 2
    assert exc.value.report["c_hat"] <= 1e-2


def test_a2_line_and_corner():
    for c in (Line(), Corner(math.pi / 4)):
        rep = check_a2(c)
        assert rep.d_hat == 0.0
        assert rep.a2_satisfied_with_mu_above_half


def test_a2_decaying_curvature():
    rep = check_a2(DecayingCurvature(0.5, 1.5))
    assert rep.a2_satisfied_with_mu_above_half
    assert rep.mu_hat > 0.5
    d = rep.to_dict()
    assert set(d) >= {"c_hat", "d_hat", "mu_hat", "omega", "worst_pair"}


def test_a2_sector_bound_holds():
    c = DecayingCurvature(0.5, 1.5)
    rep = check_a2(c)
    r = np.geomspace(1e-2, 1000, 40)
    s, sp = np.meshgrid(r, r, indexing="ij")
    ok = (s / sp > 0.5) & (s / sp < 2) & (s != sp)
    e = chord_excess(c, s[ok], sp[ok])
    bound = rep.d_hat / np.sqrt(1 + np.abs(s[ok] + sp[ok]) ** (2 * rep.mu_hat))
    assert np.all(e <= bound * 1.1 + 1e-12)


def test_a2_rejects_bad_omega():
    with pytest.raises(ValueError):
        check_a2(Line(), omega=1.5)
