import numpy as np
import pytest

from fa_lab import problem
from fa_lab.errors import InvalidShape, RankDeficient
from fa_lab.numerics import least_squares


# --- seeding ----------------------------------------------------------------

def test_rng_for_is_deterministic_and_label_separated():
    a1 = problem.rng_for(7, "alpha").standard_normal(4)
    a2 = problem.rng_for(7, "alpha").standard_normal(4)
    b = problem.rng_for(7, "beta").standard_normal(4)
    np.testing.assert_array_equal(a1, a2)
    assert not np.allclose(a1, b)


# --- spectra ----------------------------------------------------------------

def test_flat_spectrum_has_unit_energy():
    s = problem.flat_spectrum(50)
    assert np.sum(s.values**2) == pytest.approx(1.0)
    assert np.all(s.values == s.values[0])


def test_separation_spectrum_energy_split():
    n, r = 500, 50
    s = problem.separation_spectrum(n, r)
    vals = s.values
    assert vals.size == n
    # top-r block carries half the energy, the tail the other half
    assert np.sum(vals[:r] ** 2) == pytest.approx(0.5)
    assert np.sum(vals[r:] ** 2) == pytest.approx(0.5)
    assert vals[0] == pytest.approx(1.0 / np.sqrt(2 * r))
    assert vals[-1] == pytest.approx(1.0 / np.sqrt(2 * (n - r)))


def test_rep_spectrum_shape():
    s = problem.rep_spectrum(100, 0.5)
    assert s.values[0] == 1.0
    assert np.all(s.values[1:] == 0.5)


def test_spectrum_rejects_increasing():
    with pytest.raises(InvalidShape):
        problem.SpectrumSpec(values=np.array([1.0, 2.0]))


@pytest.mark.parametrize("text, expect", [
    ("flat(4)", [0.5, 0.5, 0.5, 0.5]),
    ("rep(3,0.5)", [1.0, 0.5, 0.5]),
    ("1.0,0.5,0.25", [1.0, 0.5, 0.25]),
])
def test_parse_spectrum(text, expect):
    np.testing.assert_allclose(problem.parse_spectrum(text).values, expect)


def test_parse_spectrum_separation_matches_constructor():
    np.testing.assert_array_equal(problem.parse_spectrum("separation(500,50)").values,
                                  problem.separation_spectrum(500, 50).values)


# --- target / feedback construction ------------------------------------------

def test_make_target_realizes_spectrum():
    Y = problem.make_target(30, 20, problem.flat_spectrum(10), seed=3)
    sv = np.linalg.svd(Y.Y, compute_uv=False)
    np.testing.assert_allclose(sv[:10], problem.flat_spectrum(10).values, atol=1e-12)
    np.testing.assert_allclose(sv[10:], 0.0, atol=1e-12)
    assert Y.rank == 10
    assert np.linalg.norm(Y.Y) == pytest.approx(1.0)


def test_make_target_deterministic():
    Y1 = problem.make_target(12, 9, problem.flat_spectrum(4), seed=11)
    Y2 = problem.make_target(12, 9, problem.flat_spectrum(4), seed=11)
    np.testing.assert_array_equal(Y1.Y, Y2.Y)


def test_target_from_matrix_recovers_rank():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 6))
    T = problem.target_from_matrix(M)
    assert T.rank == 3
    np.testing.assert_allclose(T.svd.reconstruct(), M, atol=1e-12)


def test_gaussian_init_moments():
    st = problem.gaussian_init(200, 50, 100, std=0.01, seed=5)
    assert st.shape == (200, 50, 100)
    assert np.std(st.Z) == pytest.approx(0.01, rel=0.05)
    assert np.std(st.W) == pytest.approx(0.01, rel=0.05)


def test_fa_star_init_orthonormal_with_optimal_w():
    Y = problem.make_target(20, 15, problem.flat_spectrum(6), seed=9)
    st = problem.fa_star_init(20, 5, Y, seed=9)
    np.testing.assert_allclose(st.Z.T @ st.Z, np.eye(5), atol=1e-12)
    np.testing.assert_allclose(st.W, least_squares(st.Z, Y.Y), atol=1e-12)


def test_fa_star_init_gaussian_mode():
    Y = problem.make_target(20, 15, problem.flat_spectrum(6), seed=9)
    st = problem.fa_star_init(20, 5, Y, seed=9, z_mode="gaussian", std=0.001)
    assert abs(np.std(st.Z) - 0.001) < 0.0005
    np.testing.assert_allclose(st.W, least_squares(st.Z, Y.Y), atol=1e-8)


def test_make_feedback_deterministic_and_shaped():
    C1 = problem.make_feedback(4, 7, seed=2)
    C2 = problem.make_feedback(4, 7, seed=2)
    assert C1.C.shape == (4, 7)
    np.testing.assert_array_equal(C1.C, C2.C)


def test_adversarial_1d_init():
    y = np.array([[1.0], [2.0], [0.0]])
    c = np.array([[0.5]])
    st = problem.adversarial_1d_init(y, c)
    np.testing.assert_allclose(st.Z, -y * 0.5)
    np.testing.assert_allclose(st.W, np.zeros((1, 1)))


def test_adversarial_1d_rejects_wide_inputs():
    with pytest.raises(InvalidShape):
        problem.adversarial_1d_init(np.ones((3, 2)), np.ones((1, 1)))
