import numpy as np
import pytest

from invexreg.analysis import estimate_L, ridge_closed_form
from invexreg.errors import InvalidTrace, NonFinite, TraceIncomplete
from invexreg.linalg import gram_extreme_eigs
from invexreg.models import AffineMap
from invexreg.objectives import InvexObjective, PlainObjective
from invexreg.optimizers import AdamConfig, GdConfig, adam_run, gd_run, p_recursion_check


def test_start_at_global_minimum_terminates_immediately(sigmoid):
    obj = InvexObjective(sigmoid, 0.1)
    x0 = np.ones(8)
    start = obj.start(x0, -sigmoid.value(x0) / 0.1)
    trace = gd_run(obj, start, GdConfig(step_size=0.1))
    assert trace.iterations == 0 and trace.reason == "grad_tol"


def test_gd_linear_converges_to_ridge(affine):
    lam = 0.5
    obj = InvexObjective(affine, lam)
    alpha = 0.9 / (gram_extreme_eigs(affine.A)[1] + lam ** 2)
    trace = gd_run(obj, np.zeros(50), GdConfig(step_size=alpha))
    x, _ = obj.split(trace.final_point)
    # independent oracle: dense normal equations
    A, b = affine.A, affine.b
    x_ref = np.linalg.solve(A.T @ A + lam ** 2 * np.eye(50), A.T @ b)
    assert np.max(np.abs(x - x_ref)) <= 1e-6
    np.testing.assert_allclose(ridge_closed_form(A, b, lam).x_star, x_ref, atol=1e-10)


def test_gd_linear_rate_with_inverse_L(sigmoid):
    lam = 0.5
    obj = InvexObjective(sigmoid, lam)
    est = estimate_L(obj, np.zeros(8), sample_count=16)
    trace = gd_run(obj, np.zeros(8), GdConfig(step_size=1.0 / est.L_hat, max_iters=3000))
    fh = trace["fhat"]
    t = trace["t"]
    assert np.all(np.diff(fh) <= 0)
    assert np.all(fh <= (1 - lam ** 2 / est.L_hat) ** t * fh[0] + 1e-9 * fh[0])


def test_auto_step_size(sigmoid):
    obj = InvexObjective(sigmoid, 1.0)
    trace = gd_run(obj, np.zeros(8), GdConfig(max_iters=10), sample_count=8)
    assert trace.L_hat is not None
    assert trace.step_size == pytest.approx(0.9 / trace.L_hat)
    with pytest.raises(ValueError):
        gd_run(PlainObjective(sigmoid), np.zeros(8), GdConfig())


def test_trace_bookkeeping(sigmoid):
    obj = InvexObjective(sigmoid, 0.1)
    trace = gd_run(obj, np.zeros(8), GdConfig(step_size=0.1, max_iters=50), keep_iterates=True)
    assert len(trace) == 51 and trace.reason == "max_iters"
    np.testing.assert_array_equal(trace["t"], np.arange(51))
    np.testing.assert_allclose(trace["path_len"], np.cumsum(trace["step_len"]), rtol=1e-14)
    steps = np.linalg.norm(np.diff(trace.iterates, axis=0), axis=1)
    np.testing.assert_allclose(trace["step_len"][1:], steps, rtol=1e-14)
    assert trace["step_len"][0] == 0.0
    assert np.all(trace["pl_ratio"] <= 1 + 1e-9)


def test_divergence_detected(sigmoid):
    obj = InvexObjective(sigmoid, 1.0)
    with pytest.raises(NonFinite):
        gd_run(obj, np.zeros(8), GdConfig(step_size=100.0, max_iters=1000))


def test_gd_deterministic(sigmoid):
    obj = InvexObjective(sigmoid, 0.05)
    a = gd_run(obj, np.zeros(8), GdConfig(step_size=0.1, max_iters=200))
    b = gd_run(obj, np.zeros(8), GdConfig(step_size=0.1, max_iters=200))
    for c in a.columns:
        assert a[c].tobytes() == b[c].tobytes()


def test_adam_fixed_at_stationary_point():
    obj = PlainObjective(AffineMap(np.eye(2), [1.0, 1.0]))
    trace = adam_run(obj, [1.0, 1.0], AdamConfig(max_iters=5))
    assert trace.iterations == 0
    np.testing.assert_array_equal(trace.final_point, [1.0, 1.0])


def test_adam_deterministic_and_sign_like(sigmoid):
    obj = InvexObjective(sigmoid, 0.1)
    cfg = AdamConfig(step_size=1e-2, beta1=0.0, beta2=0.0, eps=1e-12, max_iters=1)
    trace = adam_run(obj, np.zeros(8), cfg, keep_iterates=True)
    g = obj.gradient(obj.start(np.zeros(8)))
    np.testing.assert_allclose(trace.iterates[1], -1e-2 * np.sign(g), rtol=1e-9)
    again = adam_run(obj, np.zeros(8), cfg, keep_iterates=True)
    assert trace.iterates.tobytes() == again.iterates.tobytes()


def test_adam_and_gd_interpolate(sigmoid):
    obj = InvexObjective(sigmoid, 0.1)
    adam = adam_run(obj, np.zeros(8), AdamConfig(step_size=1e-2, max_iters=20_000))
    gd = gd_run(obj, np.zeros(8), GdConfig(step_size=0.13, max_iters=20_000))
    assert adam["fhat"][-1] <= 1e-8
    assert gd["fhat"][-1] <= 1e-8


def test_p_recursion_first_step(sigmoid):
    lam, alpha = 0.2, 0.05
    obj = InvexObjective(sigmoid, lam)
    trace = gd_run(obj, np.zeros(8), GdConfig(step_size=alpha, max_iters=1), keep_iterates=True)
    p1 = trace.iterates[1][8:]
    np.testing.assert_allclose(p1, -alpha * lam * sigmoid.value(np.zeros(8)), rtol=1e-15)


def test_p_recursion_replay_linear(affine):
    obj = InvexObjective(affine, 0.3)
    alpha = 0.9 / (gram_extreme_eigs(affine.A)[1] + 0.09)
    trace = gd_run(obj, np.zeros(50), GdConfig(step_size=alpha), keep_iterates=True)
    dev = p_recursion_check(trace, obj)
    assert dev <= 1e-10 * (1 + np.max(trace["p_norm"]))


def test_p_recursion_preconditions(sigmoid):
    obj = InvexObjective(sigmoid, 0.1)
    adam = adam_run(obj, np.zeros(8), AdamConfig(max_iters=3), keep_iterates=True)
    with pytest.raises(InvalidTrace):
        p_recursion_check(adam, obj)
    gd = gd_run(obj, np.zeros(8), GdConfig(step_size=0.1, max_iters=3))
    with pytest.raises(TraceIncomplete):
        p_recursion_check(gd, obj)


def test_config_validation():
    with pytest.raises(ValueError):
        GdConfig(step_size=-1.0)
    with pytest.raises(ValueError):
        GdConfig(max_iters=0)
    with pytest.raises(ValueError):
        AdamConfig(beta1=1.0)
