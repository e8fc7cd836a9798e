import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kraichnan.errors import ConfigError, DomainError
from kraichnan.grid import Grid
from kraichnan.operators import norm_lp
from kraichnan.selfsimilar import (
    SelfSimilarForcing,
    SimilarityProfile,
    annular_constant,
    background,
    dissipation,
    forcing,
    integrability_predicates,
    quadrature_confirmation,
    residual,
    time_derivative,
)

G = Grid(256)


def test_annular_profile_has_zero_integral():
    w = background(SimilarityProfile(0.5, 0.25, radius=2.5), 1.0, G)
    assert abs(w.mean) < 1e-8 * np.abs(w.values).max()
    assert annular_constant() == pytest.approx(3.826854673316793, rel=1e-10)


def test_unit_time_is_plain_profile():
    p = SimilarityProfile(0.5, 0.25, radius=2.0, kind="bump")
    w = background(p, 1.0, G)
    assert w.values.max() == pytest.approx(1.0, rel=1e-3)
    assert w.values[128, 128] == pytest.approx(np.e * np.exp(-1.0), rel=1e-12)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_lp_scaling(p):
    prof = SimilarityProfile(1.0, 0.5, radius=2.5)
    vals = [norm_lp(background(prof, t, G), p) * t ** (1 - 2 / (prof.alpha * p)) for t in (0.25, 0.5, 1.0)]
    assert max(vals) / min(vals) - 1 < 0.01


def test_centre_value_scales_like_inverse_time():
    prof = SimilarityProfile(1.5, 0.5, radius=0.5)
    a = background(prof, 1.0, G).values[128, 128]
    b = background(prof, 2.0, G).values[128, 128]
    assert b == pytest.approx(a / 2, rel=1e-12)


def test_support_must_fit():
    prof = SimilarityProfile(0.5, 0.25, radius=2.5)
    with pytest.raises(DomainError):
        background(prof, 1.2, G)
    with pytest.raises(ConfigError):
        background(prof, 0.0, G)
    with pytest.raises(ConfigError):
        SimilarityProfile(0.5, 0.6)


def test_forcing_is_linear_in_amplitude():
    a = forcing(SimilarityProfile(0.5, 0.25, radius=2.5), 0.8, G).values
    b = forcing(SimilarityProfile(0.5, 0.25, amplitude=3.0, radius=2.5), 0.8, G).values
    np.testing.assert_allclose(b, 3 * a, atol=1e-12 * np.abs(b).max())


def test_time_derivative_matches_central_difference():
    prof = SimilarityProfile(0.5, 0.25, radius=2.5)
    h = 1e-4
    fd = (background(prof, 1 + h, G).values - background(prof, 1 - h, G).values) / (2 * h)
    exact = time_derivative(prof, 1.0, G).values
    assert np.abs(fd - exact).max() < 1e-5 * np.abs(exact).max()


def test_small_beta_dissipation_is_fluctuation():
    prof = SimilarityProfile(0.5, 1e-9, radius=2.5)
    w = background(prof, 1.0, G)
    np.testing.assert_allclose(dissipation(prof, 1.0, G).values, w.values - w.mean, atol=1e-7)


def test_forcing_provider_integral():
    prof = SimilarityProfile(1.0, 0.5, radius=2.5)
    F = SelfSimilarForcing(prof, t0=0.5)
    g = Grid(64)
    total = sum(F.integral(g, 0.01 * i, 0.01 * (i + 1)) for i in range(10))
    jump = background(prof, 0.6, g).hat - background(prof, 0.5, g).hat
    diss = sum(0.01 * dissipation(prof, 0.505 + 0.01 * i, g).hat for i in range(10))
    expect = jump + diss
    expect[0, 0] = 0
    np.testing.assert_allclose(total, expect, atol=1e-12)
    assert F.initial(g).zero_mean


def test_predicate_examples():
    assert all(integrability_predicates(0.5, 0.25, 2).as_dict().values())
    p = integrability_predicates(1.5, 0.5, 2)
    assert p.omega_L2tLp and not p.f_L1tLp and not p.full
    for beta in (0.3, 0.8):
        assert not integrability_predicates(2 - beta, beta, 3).omega_Hbeta2
    with pytest.raises(ConfigError):
        integrability_predicates(0.5, 0.6, 2)


def test_quadrature_examples():
    conv = quadrature_confirmation(0.5, 0.25, 2)
    vals = conv.values["omega_L2tLp"]
    assert abs(vals[-1] - vals[-2]) < 1e-3
    div = quadrature_confirmation(1.5, 0.5, 4)
    assert div.verdicts["omega_L2tLp"] == "power divergence"
    assert div.slopes["omega_L2tLp"] == pytest.approx(2 * (-1 + 2 / 6) + 1, abs=0.05)
    log = quadrature_confirmation(1.0, 0.5, 4)
    assert log.verdicts["omega_L2tLp"] == "log divergence"
    with pytest.raises(ConfigError):
        quadrature_confirmation(0.5, 0.25, 2, t_min=0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.95), st.floats(0.02, 0.98), st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0]))
def test_quadrature_agrees_with_predicates(alpha, frac, p):
    beta = frac * alpha
    pred = integrability_predicates(alpha, beta, p)
    q = quadrature_confirmation(alpha, beta, p).predicates()
    exps = q and quadrature_confirmation(alpha, beta, p).exponents
    # skip points within quadrature resolution of a boundary
    if min(abs(e + 1) for e in exps.values()) < 1e-5:
        return
    assert q == {k: getattr(pred, k) for k in q}


def test_radial_transport_vanishes_and_elliptic_does_not():
    rad = residual(SimilarityProfile(0.5, 0.25, radius=2.5), 1.0, G)
    ell = residual(SimilarityProfile(0.5, 0.25, radius=2.0, ellipticity=1.3), 1.0, G)
    assert rad.transport_relative < 1e-6
    assert ell.transport_relative > 1e-2
