import numpy as np
import pytest

from kraichnan.errors import ConfigError
from kraichnan.grid import Grid
from kraichnan.master_eq import (
    MasterEquation,
    compare_mc,
    integrate,
    jump_form,
    l2_monotonicity_check,
    quadratic_form,
    rhs,
    shell_average,
    wrap_kernel,
)
from kraichnan.spectra import CustomTable, HypoNS, LogEuler, build_noise_model


@pytest.fixture
def model():
    return build_noise_model(LogEuler(1.0), Grid(16), kmax=4)


def random_spectrum(K, seed=0):
    return np.random.default_rng(seed).uniform(0, 1, (2 * K + 1, 2 * K + 1))


def test_absorbing_rhs_matches_jump_form(model):
    a = random_spectrum(6)
    eq = MasterEquation(model, 6)
    np.testing.assert_allclose(eq(a), jump_form(a, model), atol=1e-13 * np.abs(eq(a)).max())


def test_single_mode_loss_rate(model):
    # the loss of an isolated mode is 2 kappa |k|^2
    K = 6
    a = np.zeros((2 * K + 1, 2 * K + 1))
    a[K + 1, K] = 1.0
    assert rhs(a, model)[K + 1, K] == pytest.approx(-2 * model.kappa, rel=1e-13)


def test_wrap_kernel_symmetric_and_fixed_point(model):
    kern = wrap_kernel(model, 5)
    assert np.array_equal(kern, kern.T)
    eq = MasterEquation(model, 5, closure="wrap")
    a = np.full((11, 11), 2.5)
    assert np.max(np.abs(eq(a))) < 1e-12 * model.q.sum()


def test_wrap_kernel_size_guard(model):
    with pytest.raises(ConfigError):
        wrap_kernel(model, 40)


def test_wrap_identities(model):
    a0 = random_spectrum(5, 1)
    traj = integrate(a0, model, T=0.2, dt=0.002, closure="wrap")
    mass = traj.a.sum(axis=(1, 2))
    assert abs(mass[-1] - mass[0]) < 1e-12 * mass[0]
    rep = l2_monotonicity_check(traj, model)
    assert rep.l2_nonincreasing and rep.max_principle
    assert rep.decrement_mismatch < 1e-2
    kern = wrap_kernel(model, 5)
    eq = MasterEquation(model, 5, closure="wrap")
    # d/dt sum a^2 = 2 <a, rhs> = -sum K (a_j - a_k)^2
    assert 2 * np.sum(a0 * eq(a0)) == pytest.approx(-quadratic_form(kern, a0), rel=1e-12)


def test_zero_spectrum_stays_zero(model):
    traj = integrate(np.zeros((9, 9)), model, T=0.1, dt=0.01)
    assert np.all(traj.a == 0)


def test_diagonal_decay_closed_form():
    g = Grid(16)
    zero = build_noise_model(CustomTable((0.0, 100.0), (0.0, 0.0)), g)
    assert zero.kappa == 0
    a0 = random_spectrum(5, 2)
    nu, beta, T = 0.5, 1.3, 0.4
    eq = MasterEquation(zero, 5, nu, beta)
    n = int(np.ceil(50 * T / eq.stability_bound))
    traj = integrate(a0, zero, nu, beta, T=T, dt=T / n)
    kmag = np.sqrt(eq.ksq)
    exact = a0 * np.exp(-2 * nu * kmag**beta * T)
    np.testing.assert_allclose(traj.a[-1], exact, rtol=1e-8, atol=0)


def test_stability_bound_enforced(model):
    eq = MasterEquation(model, 6)
    with pytest.raises(ConfigError):
        integrate(random_spectrum(6), model, T=1.0, dt=2 * eq.stability_bound)


def test_rejects_negative_initial(model):
    with pytest.raises(ConfigError):
        integrate(-random_spectrum(3), model, T=0.1, dt=0.01)


def test_dissipation_only_slows_down():
    m = build_noise_model(HypoNS(0.5), Grid(16), kmax=4)
    a0 = random_spectrum(5, 3)
    a = integrate(a0, m, 0.0, T=0.2, dt=0.005).a[-1]
    b = integrate(a0, m, 1.0, 0.5, T=0.2, dt=0.005).a[-1]
    assert np.all(b <= a + 1e-15)


def fake_traj(model, K, T=0.2):
    a0 = random_spectrum(K, 4)
    return integrate(a0, model, T=T, dt=0.01)


def test_compare_identical_passes(model):
    traj = fake_traj(model, 5)
    times = traj.times[1:]
    mean = np.array([traj.at(t) for t in times])
    rep = compare_mc(times, mean, 0.01 * mean + 1e-12, traj)
    assert rep.passed and rep.fraction_within == 1.0


def test_compare_biased_fails(model):
    traj = fake_traj(model, 5)
    times = traj.times[1:]
    mean = np.array([traj.at(t) for t in times])
    rep = compare_mc(times, 1.2 * mean, 0.01 * mean, traj)
    assert not rep.passed


def test_compare_zero_case(model):
    traj = integrate(np.zeros((11, 11)), model, T=0.1, dt=0.01)
    rep = compare_mc(traj.times, np.zeros_like(traj.a), np.zeros_like(traj.a), traj)
    assert rep.passed
    with pytest.raises(ConfigError):
        compare_mc(traj.times, np.zeros((len(traj.times), 5, 5)), np.zeros((len(traj.times), 5, 5)), traj)


def test_shell_average():
    a = np.ones((7, 7))
    s, avg = shell_average(a)
    assert s[0] == 0 and np.allclose(avg[avg > 0], 1.0)
