"""Cavity Green tensor: representations, oracles, limits, derivatives."""

import math

import numpy as np
import pytest
from scipy import special

import cavdip.green as green
from cavdip.errors import (ConvergenceError, DerivativeMismatchError,
                           DomainError, ThresholdError)
from cavdip.green import (CartesianGreen, CavityGeometry,
                          check_threshold, d_dk_k2_re_free_space,
                          d_dk_k2_re_green, free_space_green,
                          free_space_green_imag, green_imaginary_freq,
                          green_modesum, green_reflection_series,
                          green_reflection_series_imag,
                          greens_q_integral_oracle, im_green_modesum,
                          kramers_kronig_re, re_green_modesum,
                          threshold_distance, to_cartesian, to_spherical)
from cavdip.quadrature import QuadSpec


# ---------------------------------------------------------------------------
# geometry, thresholds, basis change
# ---------------------------------------------------------------------------

def test_geometry_validation():
    with pytest.raises(DomainError):
        CavityGeometry(r=0.0, d=1.0)
    with pytest.raises(DomainError):
        CavityGeometry(r=1.0, d=-2.0)


def test_threshold_guard():
    d = 2.0
    for n in (1, 2, 5):
        k = n * math.pi / d
        with pytest.raises(ThresholdError):
            check_threshold(k * (1 + 1e-9), d)
        with pytest.raises(ThresholdError):
            im_green_modesum(CavityGeometry(r=1.0, d=d), k)
    # distance function
    assert abs(threshold_distance(1.0, 2.0) - (math.pi / 2 - 1.0)) < 1e-15
    # well clear of thresholds: no error
    check_threshold(1.0, 2.0)


def test_to_spherical_trivials_and_roundtrip():
    s = to_spherical(CartesianGreen(1.0, 1.0, 0.5))
    assert s.g_pm == 1.0 and s.g_pp == 0.0 and s.g_00 == 0.5
    s = to_spherical(CartesianGreen(1.0, -1.0, 0.0))
    assert s.g_pm == 0.0 and s.g_pp == 1.0
    # dyadic values: the linear bijection round-trips without rounding
    g = CartesianGreen(0.25 + 0.5j, -0.75 + 0.125j, 0.7)
    rt = to_cartesian(to_spherical(g))
    assert rt.g_par == g.g_par and rt.g_perp == g.g_perp
    # G(+-) + G(++) = G_par exactly
    s = to_spherical(g)
    assert s.g_pm + s.g_pp == g.g_par
    # generic values round-trip to an ulp
    g2 = CartesianGreen(0.3 + 0.1j, -0.2 + 0.4j, 0.7)
    rt2 = to_cartesian(to_spherical(g2))
    assert abs(rt2.g_par - g2.g_par) < 1e-15
    assert abs(rt2.g_perp - g2.g_perp) < 1e-15


# ---------------------------------------------------------------------------
# free space
# ---------------------------------------------------------------------------

def test_free_space_against_scalar_green_derivatives():
    """Components must equal -(grad grad / k^2 + 1) of e^{ikr}/(4 pi r)."""
    r, k, h = 1.0, 1.0, 1e-5

    def g_scalar(x, y):
        rr = math.sqrt(x * x + y * y)
        return np.exp(1j * k * rr) / (4 * math.pi * rr)

    d2x = (g_scalar(r + h, 0) - 2 * g_scalar(r, 0) + g_scalar(r - h, 0)) / h**2
    d2y = (g_scalar(r, h) - 2 * g_scalar(r, 0) + g_scalar(r, -h)) / h**2
    fs = free_space_green(r, k)
    assert abs(-(d2x / k**2 + g_scalar(r, 0)) - fs.g_par) < 1e-6
    assert abs(-(d2y / k**2 + g_scalar(r, 0)) - fs.g_perp) < 1e-6


def test_free_space_component_identity_and_decay():
    fs = free_space_green(2.0, 1.0)
    assert fs.g_perp == fs.g_00
    # radiative decay: perp/00 fall off as 1/r, par as 1/r^2
    r1, r2 = 1e3, 2e3
    a = free_space_green(r1, 1.0)
    b = free_space_green(r2, 1.0)
    assert abs(abs(b.g_perp) / abs(a.g_perp) - r1 / r2) < 1e-3
    assert abs(abs(b.g_par) / abs(a.g_par) - (r1 / r2) ** 2) < 1e-3


def test_free_space_imag_is_continuation():
    r, u = 0.7, 1.3
    fs = free_space_green_imag(r, u)
    # continue e^{ikr}(...) with k = iu by hand
    pref = math.exp(-u * r) / (4 * math.pi * u * u)
    assert abs(fs.g_par - pref * (2 / r**3 + 2 * u / r**2)) < 1e-15
    assert abs(fs.g_00 + pref * (1 / r**3 + u / r**2 + u * u / r)) < 1e-15


# ---------------------------------------------------------------------------
# mode sums
# ---------------------------------------------------------------------------

def test_subthreshold_im_parts():
    rng = np.random.default_rng(3)
    for _ in range(20):
        kr = rng.uniform(0.1, 3.0)
        kd = rng.uniform(0.3, math.pi - 0.05)
        im = im_green_modesum(CavityGeometry(r=kr, d=kd), 1.0)
        assert im.g_par == 0.0 and im.g_perp == 0.0
        assert abs(im.g_00 + special.j0(kr) / (4 * kd)) < 1e-15


def test_modesum_regression_values():
    # frozen after cross-validation against the reflection series and the
    # Kramers-Kronig transform (see the equivalence tests below)
    g = green_modesum(CavityGeometry(r=1.0, d=2.0), 1.0)
    assert abs(g.g_par - (-0.23240273928028574 + 0j)) < 1e-12
    assert abs(g.g_00 - (0.0679583069987637 - 0.09564971081974581j)) < 1e-12


def test_representation_equivalence_spot():
    for kr, kd in ((1.0, 5.0), (2.0, 20.0)):
        geom = CavityGeometry(r=kr, d=kd)
        ms = green_modesum(geom, 1.0).as_array()
        rs = green_reflection_series(geom, 1.0).green.as_array()
        assert np.max(np.abs(rs - ms) / np.abs(ms)) < 1e-6


def test_reflection_series_sign_adjudication():
    """The printed all-alternating reading fails against the mode sums;
    the derived reading (no alternation for the axial component) wins."""
    geom = CavityGeometry(r=1.0, d=5.0)
    ms = green_modesum(geom, 1.0).as_array()
    ok = green_reflection_series(geom, 1.0,
                                 sign_convention="derived").green.as_array()
    bad = green_reflection_series(geom, 1.0,
                                  sign_convention="printed").green.as_array()
    assert np.max(np.abs(ok - ms) / np.abs(ms)) < 1e-6
    assert abs(bad[2] - ms[2]) / abs(ms[2]) > 0.1


def test_image_expansion_identities():
    """The half-angle series behind the reflection expansion, for
    Im(x) > 0 where the geometric sums converge:

        (1 - cos x)/sin x = tan(x/2) = i [1 + 2 sum_m (-1)^m e^{imx}]
        (1 + cos x)/sin x = cot(x/2) = -i [1 + 2 sum_m e^{imx}]

    The in-plane kernel alternates; the axial one does not, which is the
    content of the sign adjudication."""
    rng = np.random.default_rng(9)
    for _ in range(10):
        x = rng.uniform(0.5, 6.0) + 1j * rng.uniform(0.2, 1.5)
        ms = np.arange(1, 2001)
        geo = np.exp(1j * ms * x)
        tan_series = 1j * (1 + 2 * np.sum((-1.0) ** ms * geo))
        cot_series = -1j * (1 + 2 * np.sum(geo))
        assert abs(np.tan(x / 2) - tan_series) < 1e-10
        assert abs(1 / np.tan(x / 2) - cot_series) < 1e-10
        assert abs((1 - np.cos(x)) / np.sin(x) - np.tan(x / 2)) < 1e-12


def test_reflection_m0_is_free_space():
    geom = CavityGeometry(r=1.3, d=4.0)
    res = green_reflection_series(geom, 1.0, m_max=0)
    fs = free_space_green(1.3, 1.0)
    assert res.green == fs
    assert res.m_used == 0
    assert res.truncation_estimate > 0


def test_reflection_inplane_im_vanishes_below_threshold():
    """kd < pi: partial sums of the in-plane Im parts sink towards zero
    (destructive interference reproduces the empty mode sum)."""
    geom = CavityGeometry(r=1.0, d=2.0)
    k = 1.0
    fs = free_space_green(1.0, 1.0).as_array()
    residues = []
    for m_cap in (10, 40, 160):
        total = fs.copy()
        for m in range(1, m_cap + 1):
            t = green._reflection_order_term(geom, k, m, QuadSpec())
            total = total + np.array([(-1.0) ** m, (-1.0) ** m, 1.0]) * t
        residues.append(abs(total[0].imag) + abs(total[1].imag))
    assert residues[2] < residues[0]
    # and the accelerated value is much tighter than any plain partial sum
    acc = green_reflection_series(geom, k).green
    assert abs(acc.g_par.imag) < 1e-7
    assert abs(acc.g_perp.imag) < 1e-7


def test_reflection_convergence_error():
    with pytest.raises(ConvergenceError):
        green_reflection_series(CavityGeometry(r=1.0, d=2.0), 1.0, m_max=3)


def test_evanescent_tail_convergence_error():
    from cavdip.quadrature import SeriesSpec
    with pytest.raises(ConvergenceError):
        re_green_modesum(CavityGeometry(r=1e-3, d=1.0), 1.0,
                         SeriesSpec(n_max=50))


# ---------------------------------------------------------------------------
# imaginary frequency
# ---------------------------------------------------------------------------

def test_imagfreq_matches_defining_integral_oracle():
    for ur, ud in ((0.5, 2.0), (2.0, 2.0), (0.5, 10.0), (2.0, 10.0)):
        geom = CavityGeometry(r=ur, d=ud)
        gi = green_imaginary_freq(geom, 1.0).as_array()
        orc = to_spherical(greens_q_integral_oracle(geom, 1.0)).as_array()
        assert np.max(np.abs(gi - orc) / np.abs(gi)) < 1e-7


def test_imagfreq_matches_reflection_series_continuation():
    geom = CavityGeometry(r=0.5, d=2.0)
    gi = green_imaginary_freq(geom, 1.0).as_array()
    ri = to_spherical(green_reflection_series_imag(geom, 1.0).green).as_array()
    assert np.max(np.abs(gi - ri) / np.abs(gi)) < 1e-6


def test_imagfreq_exponential_suppression():
    gi = green_imaginary_freq(CavityGeometry(r=30.0, d=2.0), 1.0).as_array()
    assert np.max(np.abs(gi)) < math.exp(-25)


def test_imagfreq_large_separation_is_free_space():
    geom = CavityGeometry(r=1.0, d=100.0)
    gi = green_imaginary_freq(geom, 1.0).as_array()
    fs = to_spherical(free_space_green_imag(1.0, 1.0)).as_array()
    assert np.max(np.abs(gi - fs)) < 1e-12


def test_imagfreq_monotone_decay_along_rays():
    us = np.linspace(3.2, 8.0, 10)
    vals = np.array([np.abs(green_imaginary_freq(
        CavityGeometry(r=1.0, d=2.0), float(u)).as_array()) for u in us])
    assert np.all(np.diff(vals, axis=0) < 0)


def test_imagfreq_domain():
    with pytest.raises(DomainError):
        green_imaginary_freq(CavityGeometry(1.0, 1.0), 0.0)


# ---------------------------------------------------------------------------
# Kramers-Kronig
# ---------------------------------------------------------------------------

def test_pv_bessel_moments_match_closed_forms():
    """The KK building blocks against the known Hankel-transform values
    (which the production mode sums rely on through Y/K kernels)."""
    spec = QuadSpec(rel_tol=1e-8, abs_tol=1e-12)
    for sigma, c in ((0.8, 1.0), (1.7, 0.6)):
        a_val = green._pv_bessel_moment("A", sigma * sigma, c, spec)
        assert abs(a_val + math.pi / 2 * special.y0(sigma * c)) < 1e-6
    for kappa, c in ((0.9, 1.0), (2.0, 0.7)):
        a_val = green._pv_bessel_moment("A", -kappa * kappa, c, spec)
        assert abs(a_val - special.k0(kappa * c)) < 1e-7


def test_kramers_kronig_roundtrip_spot():
    geom = CavityGeometry(r=1.0, d=5.0)
    ms = re_green_modesum(geom, 1.0).as_array()
    kk = kramers_kronig_re(geom, 1.0).as_array()
    assert np.max(np.abs(kk - ms) / np.abs(ms)) < 1e-4


def test_kramers_kronig_tightening_tolerance_does_not_hurt():
    geom = CavityGeometry(r=0.8, d=4.0)
    ms = re_green_modesum(geom, 1.0).as_array()
    loose = kramers_kronig_re(geom, 1.0, QuadSpec(rel_tol=1e-6,
                                                  abs_tol=1e-9)).as_array()
    tight = kramers_kronig_re(geom, 1.0, QuadSpec(rel_tol=1e-8,
                                                  abs_tol=1e-11)).as_array()
    d_loose = np.max(np.abs(loose - ms) / np.abs(ms))
    d_tight = np.max(np.abs(tight - ms) / np.abs(ms))
    assert d_tight <= d_loose * 1.5 + 1e-12


def test_kramers_kronig_zero_imaginary_input(monkeypatch):
    """Vanishing Im parts transform to vanishing Re parts: the output is a
    linear functional of the per-mode inputs with no additive bias."""
    monkeypatch.setattr(green, "_kk_inplane_mode",
                        lambda geom, k, n, spec: (0.0, 0.0))
    monkeypatch.setattr(green, "_kk_axial_mode",
                        lambda geom, k, n, spec: 0.0)
    kk = kramers_kronig_re(CavityGeometry(r=1.0, d=5.0), 1.0).as_array()
    assert np.all(kk == 0.0)


# ---------------------------------------------------------------------------
# d/dk [k^2 Re G]
# ---------------------------------------------------------------------------

def test_free_space_derivative_formulas():
    r, k = 1.3, 1.0
    an = d_dk_k2_re_free_space(r, k).as_array()
    h = 1e-5

    def g(kk):
        return kk * kk * free_space_green(r, kk).as_array().real

    fd = (g(k + h) - g(k - h)) / (2 * h)
    assert np.max(np.abs(an - fd)) < 1e-8
    assert an[1] == an[2]  # perp and axial free-space forms coincide


def test_cavity_derivative_dual_path():
    res = d_dk_k2_re_green(CavityGeometry(r=2.0, d=20.0), 1.0)
    assert res.max_rel_mismatch < 1e-6


def test_derivative_mismatch_error_surface():
    with pytest.raises(DerivativeMismatchError):
        d_dk_k2_re_green(CavityGeometry(r=2.0, d=20.0), 1.0,
                         mismatch_tol=1e-18)


def test_derivative_threshold_guard():
    with pytest.raises(ThresholdError):
        d_dk_k2_re_green(CavityGeometry(r=1.0, d=math.pi), 1.0 + 1e-10)
