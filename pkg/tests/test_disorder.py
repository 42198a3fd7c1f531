import math

import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from polymer2d import _rng
from polymer2d.disorder import (
    GAUSSIAN,
    RADEMACHER,
    EnvironmentSpec,
    cumulant,
    make_coupling,
    omega,
    omega_array,
    sigma,
    zero_coupling,
)


def test_cumulant_closed_forms():
    assert cumulant(GAUSSIAN, 1.0) == pytest.approx(0.5, abs=1e-15)
    assert cumulant(RADEMACHER, 0.0) == 0.0
    assert cumulant(RADEMACHER, 1.0) == pytest.approx(math.log(math.cosh(1.0)), rel=1e-14)
    assert cumulant(RADEMACHER, 1.0) == pytest.approx(0.4337808305, abs=1e-10)
    with pytest.raises(ValueError):
        cumulant("cauchy", 1.0)


def test_sigma_closed_forms():
    assert sigma(GAUSSIAN, 0.0) == 0.0
    assert sigma(GAUSSIAN, 1.0) == pytest.approx(math.sqrt(math.e - 1.0), rel=1e-14)
    # sigma(beta)/beta -> 1 for both laws; gaussian from above, rademacher
    # from below (its fourth cumulant is negative)
    for law in (GAUSSIAN, RADEMACHER):
        assert abs(sigma(law, 1e-3) / 1e-3 - 1.0) < 0.001
    assert sigma(GAUSSIAN, 1e-3) > 1e-3
    assert sigma(RADEMACHER, 1e-3) < 1e-3


def test_make_coupling_small_n():
    c = make_coupling(GAUSSIAN, 0.5, 1)
    assert c.overlap == pytest.approx(0.25, abs=1e-15)
    assert c.beta_n == pytest.approx(1.0, rel=1e-14)
    assert c.sigma_n == pytest.approx(math.sqrt(math.e - 1.0), rel=1e-12)


def test_make_coupling_validation():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(ValueError):
            make_coupling(GAUSSIAN, bad, 16)


def test_beta_n_decreases_with_system_size():
    betas = [make_coupling(GAUSSIAN, 0.5, 2**e).beta_n for e in range(6, 15, 2)]
    assert all(a > b for a, b in zip(betas, betas[1:]))


def test_sigma_over_beta_approaches_one():
    ratios = [
        (lambda c: c.sigma_n / c.beta_n)(make_coupling(GAUSSIAN, 0.5, 2**e))
        for e in (6, 10, 14)
    ]
    assert all(r > 1.0 for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_zero_coupling_collapses():
    c = zero_coupling(GAUSSIAN, 64)
    assert c.beta_n == 0.0 and c.sigma_n == 0.0


def test_omega_purity_and_determinism():
    env = EnvironmentSpec(GAUSSIAN, master_seed=1234, replica=3)
    vals = [omega(env, 5, (2, -1)) for _ in range(3)]
    assert vals[0] == vals[1] == vals[2]
    env2 = EnvironmentSpec(GAUSSIAN, master_seed=1234, replica=3)
    assert omega(env2, 5, (2, -1)) == vals[0]
    assert omega(env, 6, (2, -1)) != vals[0]


def test_omega_domain():
    env = EnvironmentSpec(GAUSSIAN, 1)
    omega(env, 0, (0, 0))  # time 0 is read by backward partition functions
    with pytest.raises(ValueError):
        omega(env, -1, (0, 0))


def _field_sample(env, n_slices, half_width):
    xs = np.arange(-half_width, half_width)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    out = []
    for n in range(1, n_slices + 1):
        out.append(omega_array(env, n, x1, x2))
    return np.concatenate(out)


@pytest.mark.parametrize("law", [GAUSSIAN, RADEMACHER])
def test_omega_moments(law):
    env = EnvironmentSpec(law, master_seed=20240817)
    x = _field_sample(env, 10, 160)  # 1.024e6 variates
    r = x.size
    se_mean = x.std() / math.sqrt(r)
    assert abs(x.mean()) < 4 * se_mean
    v = x.var()
    m4 = np.mean((x - x.mean()) ** 4)
    se_var = math.sqrt(max(m4 - v * v, 1e-30) / r)
    assert abs(v - 1.0) < max(4 * se_var, 1e-9)


@pytest.mark.parametrize("law", [GAUSSIAN, RADEMACHER])
def test_replica_decorrelation(law):
    e0 = EnvironmentSpec(law, master_seed=77, replica=0)
    e1 = EnvironmentSpec(law, master_seed=77, replica=1)
    a = _field_sample(e0, 4, 80)  # 1.024e5 coordinates
    b = _field_sample(e1, 4, 80)
    rho = np.corrcoef(a, b)[0, 1]
    assert not np.allclose(a, b)
    assert abs(rho) < 0.01


@pytest.mark.parametrize(
    "shift", [(1, -1), (2, 0), (0, 2)], ids=["same-word", "next-diag", "next-anti"]
)
def test_neighbour_decorrelation_rademacher(shift):
    # sites sharing one hash word must still look independent
    env = EnvironmentSpec(RADEMACHER, master_seed=99)
    xs = np.arange(-160, 160)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    a = omega_array(env, 3, x1, x2)
    b = omega_array(env, 3, x1 + shift[0], x2 + shift[1])
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) < 0.01


@pytest.mark.parametrize("law", [GAUSSIAN, RADEMACHER])
def test_eta_normalization(law):
    c = make_coupling(law, 0.5, 256)
    env = EnvironmentSpec(law, master_seed=5150)
    x = _field_sample(env, 10, 160)
    w = np.exp(c.beta_n * x - c.lambda1)
    r = x.size
    se_w = w.std() / math.sqrt(r)
    assert abs(w.mean() - 1.0) < 4 * se_w
    et = (w - 1.0) / c.sigma_n
    se_eta = et.std() / math.sqrt(r)
    assert abs(et.mean()) < 4 * se_eta
    v = et.var()
    m4 = np.mean((et - et.mean()) ** 4)
    se_var = math.sqrt(max(m4 - v * v, 1e-30) / r)
    assert abs(v - 1.0) < 4 * se_var


def test_gaussian_inversion_accuracy():
    ps = np.concatenate(
        [np.linspace(1e-12, 1 - 1e-12, 50001), 10 ** np.linspace(-300.0, -1.0, 600)]
    )
    vals = np.array([_rng.norm_ppf(p) for p in ps])
    assert np.max(np.abs(ndtr(vals) - ps)) < 1e-9
    ref = ndtri(ps)
    assert np.max(np.abs(vals - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-12


def test_rademacher_values_are_signs():
    env = EnvironmentSpec(RADEMACHER, master_seed=4)
    vals = _field_sample(env, 3, 50)
    assert set(np.unique(vals)) == {-1.0, 1.0}
