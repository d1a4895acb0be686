import numpy as np
import pytest

from fa_lab import dynamics, problem
from fa_lab.dynamics import TrainerConfig, fa_star_step, fa_step, gd_step, run
from fa_lab.errors import InvalidShape, NonFinite, NotIsotropic
from fa_lab.numerics import least_squares, orthonormalize
from fa_lab.state import FactorState


def _small_problem(seed=0, n=10, r=3, m=8):
    Y = problem.make_target(n, m, problem.flat_spectrum(r), seed=seed)
    init = problem.gaussian_init(n, r, m, std=0.1, seed=seed)
    C = problem.make_feedback(r, m, seed=seed)
    return Y, init, C


# --- single-step oracles -----------------------------------------------------

def test_gd_step_scalar_hand_oracle():
    # n = r = m = 1, y = 1, z = w = 0.5, eta = 0.1:
    # e = 1 - 0.25 = 0.75; z' = 0.5 + 0.1*0.75*0.5 = 0.5375 = w'
    st = FactorState(Z=np.array([[0.5]]), W=np.array([[0.5]]))
    nxt = gd_step(st, np.array([[1.0]]), eta=0.1)
    assert nxt.Z[0, 0] == pytest.approx(0.5375, abs=1e-15)
    assert nxt.W[0, 0] == pytest.approx(0.5375, abs=1e-15)


def test_fa_step_scalar_hand_oracle():
    # same state, c = 2: z' = 0.5 + 0.1*0.75*2 = 0.65; w' = 0.5375 as in GD
    st = FactorState(Z=np.array([[0.5]]), W=np.array([[0.5]]))
    nxt = fa_step(st, np.array([[1.0]]), np.array([[2.0]]), eta_z=0.1)
    assert nxt.Z[0, 0] == pytest.approx(0.65, abs=1e-15)
    assert nxt.W[0, 0] == pytest.approx(0.5375, abs=1e-15)


def test_fa_step_separate_w_rate():
    st = FactorState(Z=np.array([[0.5]]), W=np.array([[0.5]]))
    nxt = fa_step(st, np.array([[1.0]]), np.array([[2.0]]), eta_z=0.1, eta_w=0.2)
    assert nxt.W[0, 0] == pytest.approx(0.5 + 0.2 * 0.75 * 0.5, abs=1e-15)


def test_fa_star_step_sets_optimal_w():
    Y, init, C = _small_problem()
    nxt = fa_star_step(init, Y.Y, C.C, eta=0.05)
    np.testing.assert_allclose(nxt.W, least_squares(nxt.Z, Y.Y), atol=1e-12)
    # Z moved by the FA direction evaluated at the pre-step state
    E = Y.Y - init.Yhat
    np.testing.assert_allclose(nxt.Z, init.Z + 0.05 * (E @ C.C.T), atol=1e-14)


def test_gd_step_is_negative_gradient_finite_difference():
    rng = np.random.default_rng(3)
    Y = rng.standard_normal((6, 5))
    st = FactorState(Z=rng.standard_normal((6, 3)), W=rng.standard_normal((3, 5)))

    def loss(Z, W):
        return 0.5 * np.linalg.norm(Z @ W - Y) ** 2

    nxt = gd_step(st, Y, eta=1.0)
    gZ = st.Z - nxt.Z  # eta = 1 so the step is exactly the gradient
    gW = st.W - nxt.W
    h = 1e-6
    for idx in [(0, 0), (2, 1), (5, 2)]:
        dZ = np.zeros_like(st.Z)
        dZ[idx] = h
        num = (loss(st.Z + dZ, st.W) - loss(st.Z - dZ, st.W)) / (2 * h)
        assert num == pytest.approx(gZ[idx], rel=1e-5)
    for idx in [(0, 0), (1, 4), (2, 2)]:
        dW = np.zeros_like(st.W)
        dW[idx] = h
        num = (loss(st.Z, st.W + dW) - loss(st.Z, st.W - dW)) / (2 * h)
        assert num == pytest.approx(gW[idx], rel=1e-5)


def test_fa_equals_gd_when_c_equals_w():
    Y, init, _ = _small_problem(seed=4)
    g = gd_step(init, Y.Y, eta=0.1)
    f = fa_step(init, Y.Y, init.W, eta_z=0.1)
    np.testing.assert_array_equal(g.Z, f.Z)
    np.testing.assert_array_equal(g.W, f.W)


def test_updates_are_jacobi_not_gauss_seidel():
    # the W update must use the pre-step Z
    Y, init, C = _small_problem(seed=5)
    nxt = fa_step(init, Y.Y, C.C, eta_z=0.1)
    E = Y.Y - init.Yhat
    np.testing.assert_allclose(nxt.W, init.W + 0.1 * (init.Z.T @ E), atol=1e-15)


def test_scalar_adversarial_descent_rate():
    # with Z = -y c^T, w = 0 (m = 1): d(c^T w)/dt = c^T Z^T y = -||c||^2 ||y||^2
    y = np.array([[0.6], [0.8]])
    c = np.array([[2.0]])
    st = problem.adversarial_1d_init(y, c)
    eta = 1e-6
    nxt = fa_step(st, y, c.T, eta_z=eta)
    d_ctw = float((c.T @ nxt.W - c.T @ st.W).item()) / eta
    assert d_ctw == pytest.approx(-np.linalg.norm(c) ** 2 * np.linalg.norm(y) ** 2,
                                  rel=1e-6)


# --- conservation facts -------------------------------------------------------

def test_fa_star_residual_orthogonal_to_z():
    # with optimal W, Z^T (Y - Yhat) = 0 at every step
    Y, init, C = _small_problem(seed=6)
    st = FactorState(Z=init.Z, W=least_squares(init.Z, Y.Y))
    for _ in range(50):
        st = fa_star_step(st, Y.Y, C.C, eta=0.05)
        res = np.linalg.norm(st.Z.T @ (Y.Y - st.Yhat))
        assert res <= 1e-10 * np.linalg.norm(Y.Y)


def test_fa_star_gram_drift_scales_with_eta():
    # Z^T Z is conserved by the continuous flow; Euler drift is O(eta)
    Y, init, C = _small_problem(seed=7)

    def drift(eta, steps):
        st = FactorState(Z=init.Z, W=least_squares(init.Z, Y.Y))
        G0 = st.Z.T @ st.Z
        for _ in range(steps):
            st = fa_star_step(st, Y.Y, C.C, eta=eta)
        return np.linalg.norm(st.Z.T @ st.Z - G0)

    ratio = drift(0.02, 100) / drift(0.01, 200)
    assert 4 / 3 <= ratio <= 3


# --- fixed points and guards ---------------------------------------------------

def test_exact_fit_is_bitwise_fixed_point():
    rng = np.random.default_rng(8)
    Z = rng.standard_normal((6, 2))
    W = rng.standard_normal((2, 4))
    Y = Z @ W
    st = FactorState(Z=Z, W=W)
    C = rng.standard_normal((2, 4))
    for nxt in (gd_step(st, Y, 0.1), fa_step(st, Y, C, 0.1), fa_star_step(st, Y, C, 0.1)):
        assert nxt.Z is st.Z or np.array_equal(nxt.Z, st.Z)
        np.testing.assert_array_equal(nxt.Z, st.Z)


def test_divergence_raises_non_finite():
    Y, init, C = _small_problem(seed=9)
    st = init
    with pytest.raises(NonFinite):
        for _ in range(3000):
            st = gd_step(st, Y.Y, eta=50.0)


# --- trajectory runner ----------------------------------------------------------

def test_run_records_stride_and_final():
    Y, init, C = _small_problem(seed=10)
    cfg = TrainerConfig(rule="FA", eta=0.05, max_steps=25, record_stride=10)
    records, final = run(Y, init, C, cfg)
    assert [r.step for r in records] == [0, 10, 20, 25]
    assert records[-1].t == pytest.approx(25 * 0.05)
    np.testing.assert_allclose(final.Yhat, final.Z @ final.W)


def test_run_zero_steps_single_record():
    Y, init, C = _small_problem(seed=11)
    cfg = TrainerConfig(rule="GD", eta=0.1, max_steps=0)
    records, final = run(Y, init, None, cfg)
    assert len(records) == 1 and records[0].step == 0
    np.testing.assert_array_equal(final.Z, init.Z)


def test_run_early_stop_on_residual():
    Y, init, C = _small_problem(seed=12)
    Z0 = orthonormalize(init.Z)
    st = FactorState(Z=Z0, W=least_squares(Z0, Y.Y))
    cfg = TrainerConfig(rule="FA_STAR", eta=0.05, max_steps=100_000,
                        record_stride=1000, stop_residual=1e-6)
    records, _ = run(Y, st, C, cfg)
    assert records[-1].residual_sq <= 1e-6
    assert records[-1].step < 100_000


def test_run_error_decreases_for_gd():
    Y, init, C = _small_problem(seed=13)
    cfg = TrainerConfig(rule="GD", eta=0.2, max_steps=500, record_stride=50)
    records, _ = run(Y, init, None, cfg)
    errs = [r.error for r in records]
    assert errs[-1] < 1e-6
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def test_run_step_failure_keeps_partial_records():
    Y, init, C = _small_problem(seed=14)
    cfg = TrainerConfig(rule="GD", eta=50.0, max_steps=5000, record_stride=10)
    with pytest.raises(dynamics.StepFailure) as exc_info:
        run(Y, init, None, cfg)
    assert len(exc_info.value.records) >= 1
    assert all(np.isfinite(r.error) for r in exc_info.value.records)


def test_trainer_config_validation():
    with pytest.raises(InvalidShape):
        TrainerConfig(rule="NEWTON", eta=0.1, max_steps=1)
    with pytest.raises(InvalidShape):
        TrainerConfig(rule="GD", eta=-0.1, max_steps=1)
    with pytest.raises(InvalidShape):
        TrainerConfig(rule="GD", eta=0.1, max_steps=1, record_stride=0)


# --- network equivalence ----------------------------------------------------------

@pytest.mark.parametrize("rule", dynamics.RULES)
def test_nn_equivalence_identity_inputs_exact(rule):
    Y, init, C = _small_problem(seed=15)
    dev = dynamics.nn_equivalence_check(np.eye(10), Y.Y, init, C, rule,
                                        eta=0.05, steps=50)
    assert dev == 0.0


@pytest.mark.parametrize("rule", dynamics.RULES)
def test_nn_equivalence_orthonormal_inputs(rule):
    Y, init, C = _small_problem(seed=16)
    X = orthonormalize(np.random.default_rng(16).standard_normal((14, 10)))
    dev = dynamics.nn_equivalence_check(X, Y.Y, init, C, rule, eta=0.05, steps=100)
    assert dev <= 1e-10


def test_nn_equivalence_rejects_non_isotropic_inputs():
    Y, init, C = _small_problem(seed=17)
    X = 2.0 * np.eye(10)
    with pytest.raises(NotIsotropic):
        dynamics.nn_equivalence_check(X, Y.Y, init, C, "GD", eta=0.05, steps=1)
