import math

import numpy as np
import pytest

import fnls


@pytest.fixture(scope="module")
def desk():
    return fnls.Problem()


@pytest.fixture(scope="module")
def gs(desk):
    return fnls.ground_state(desk)


def test_problem_geometry(desk):
    assert desk.M == 128 and desk.L == 16.0 and desk.dim == 2
    assert desk.h == pytest.approx(0.25)
    assert desk.beta_sq == pytest.approx(0.5)
    x = desk.coordinates()
    assert x[64] == 0.0 and x[0] == -16.0


def test_invalid_parameters_raise():
    with pytest.raises(fnls.ParameterError):
        fnls.Problem(s=1.2)
    with pytest.raises(ValueError):
        fnls.Problem(b=2.0)


def test_frac_laplacian_of_plane_wave(desk):
    x = np.asarray(desk.coordinates())
    k = 2 * math.pi * 3 / (2 * desk.L)
    u = np.cos(k * x)[:, None] * np.ones(desk.M)[None, :]
    lap = fnls.frac_laplacian(desk, u)
    np.testing.assert_allclose(lap, k ** (2 * desk.s) * u, atol=1e-10)


def test_energy_and_gradient_agree(desk):
    u = desk.random_smooth(3)
    v = desk.random_smooth(4)
    a, h = 1.0, 1e-5
    fd = (fnls.energy(desk, u + h * v, a)["total"] - fnls.energy(desk, u - h * v, a)["total"]) / (2 * h)
    g = fnls.gradient(desk, u, a)
    assert fd == pytest.approx(float(np.sum(g * v)) * desk.h**2, rel=1e-5)


def test_ground_state_and_corpus(desk, gs):
    assert gs["converged"]
    assert 2.2 < gs["a_star"] < 2.3
    assert fnls.weinstein_quotient(desk, gs["Q"]) == pytest.approx(gs["a_star"], rel=1e-6)
    rep = fnls.verify_gn(desk, gs["a_star"], count=20)
    assert rep["violations"] == 0


def test_minimize_below_and_refuse_above(desk, gs):
    r = fnls.minimize(desk, 0.5 * gs["a_star"], a_star=gs["a_star"])
    assert r["converged"] and r["e_a"] > 0
    assert float(np.sum(r["u"] ** 2)) * desk.h**2 == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(fnls.ThresholdError):
        fnls.minimize(desk, 1.05 * gs["a_star"], a_star=gs["a_star"])


def test_eigenpair_matches_a_zero_minimizer(desk):
    e = fnls.first_eigenpair(desk)
    r = fnls.minimize(desk, 0.0)
    assert e["converged"]
    assert r["e_a"] == pytest.approx(e["mu1"], rel=1e-9)


def test_pipeline_roundtrip(tmp_path):
    code, directory, summary = fnls.run_pipeline("eigen", output_dir=str(tmp_path))
    assert code == 0
    assert summary["pipeline"] == "eigen"
    assert (tmp_path / "eigen" / "summary.json").exists()
    with pytest.raises(fnls.ConfigError):
        fnls.run_pipeline("eigen", s=1.2, output_dir=str(tmp_path))
