import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invexreg.models import AffineMap
from invexreg.objectives import (
    AugmentedPoint,
    InvexObjective,
    L2Objective,
    PlainObjective,
    eval_f,
    eval_fhat,
    grad_f,
    grad_fhat,
    grad_l2,
)


def central_fd(fun, z, h=1e-6):
    out = np.empty_like(z)
    for j in range(z.size):
        e = np.zeros_like(z)
        e[j] = h
        out[j] = (fun(z + e) - fun(z - e)) / (2 * h)
    return out


def identity_map(n=2):
    return AffineMap(np.eye(n), np.zeros(n))


def test_eval_f_examples(sigmoid):
    assert eval_f(PlainObjective(AffineMap(np.eye(2), [1.0, 1.0])), [1.0, 1.0]) == 0.0
    assert eval_f(PlainObjective(identity_map()), [3.0, 4.0]) == 12.5
    # every residual is +-1/2 at the origin: 1/2 * 64 * 1/4
    assert eval_f(PlainObjective(sigmoid), np.zeros(8)) == 8.0


def test_fhat_hand_example():
    obj = InvexObjective(identity_map(), 1.0)
    pt = AugmentedPoint([1.0, 0.0], [0.0, 1.0])
    assert eval_fhat(obj, pt) == 1.0
    np.testing.assert_array_equal(grad_fhat(obj, pt), [1.0, 1.0, 1.0, 1.0])


@pytest.mark.parametrize("name", ["affine", "sigmoid", "mlp"])
def test_fhat_reductions(bundled, name):
    gmap, x0 = bundled[name]
    obj = InvexObjective(gmap, 0.3)
    x = x0 + np.random.default_rng(0).standard_normal(gmap.input_dim)
    assert eval_fhat(obj, AugmentedPoint(x, np.zeros(gmap.output_dim))) == eval_f(obj, x)
    p_star = -gmap.value(x) / obj.lam
    pt = AugmentedPoint(x, p_star)
    assert eval_fhat(obj, pt) <= 1e-28 * (1 + eval_f(obj, x))
    assert np.max(np.abs(grad_fhat(obj, pt))) <= 1e-12 * (1 + np.max(np.abs(gmap.jacobian(x))))


@pytest.mark.parametrize("name", ["affine", "sigmoid", "mlp"])
def test_gradients_match_finite_differences(bundled, name):
    gmap, x0 = bundled[name]
    rng = np.random.default_rng(1)
    inv = InvexObjective(gmap, 0.1)
    plain = PlainObjective(gmap)
    l2 = L2Objective(gmap, 0.1)
    for _ in range(10):
        x = x0 + rng.standard_normal(gmap.input_dim)
        z = np.concatenate([x, rng.standard_normal(gmap.output_dim)])
        for fun, grad, point in [(inv.value, inv.gradient, z), (plain.value, plain.gradient, x), (l2.value, l2.gradient, x)]:
            an = grad(point)
            assert np.max(np.abs(central_fd(fun, point) - an)) <= 1e-6 * (1 + np.max(np.abs(an)))


def test_plain_gradients():
    obj = PlainObjective(identity_map())
    np.testing.assert_array_equal(grad_f(obj, [2.0, -1.0]), [2.0, -1.0])
    l2 = L2Objective(identity_map(), 0.5)
    np.testing.assert_array_equal(grad_l2(l2, [0.0, 0.0]), grad_f(obj, [0.0, 0.0]))
    assert l2.value([1.0, 1.0]) == pytest.approx(1.0 + 0.5 * 2.0)


def test_evaluate_agrees_with_separate_calls(sigmoid):
    rng = np.random.default_rng(2)
    for obj, dim in [(InvexObjective(sigmoid, 0.2), 72), (L2Objective(sigmoid, 0.2), 8), (PlainObjective(sigmoid), 8)]:
        z = rng.standard_normal(dim)
        value, grad, f, g_norm = obj.evaluate(z)
        assert value == pytest.approx(obj.value(z), rel=1e-15)
        np.testing.assert_allclose(grad, obj.gradient(z), rtol=1e-15)
        x = z[:8]
        assert f == pytest.approx(eval_f(obj, x), rel=1e-15)
        assert g_norm == pytest.approx(np.linalg.norm(sigmoid.value(x)), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(1e-3, 10.0))
def test_structure_and_pl(sigmoid, seed, lam):
    rng = np.random.default_rng(seed)
    obj = InvexObjective(sigmoid, lam)
    x = 3 * rng.standard_normal(8)
    p = 3 * rng.standard_normal(64)
    pt = AugmentedPoint(x, p)
    grad = grad_fhat(obj, pt)
    r = sigmoid.value(x) + lam * p
    np.testing.assert_array_equal(grad[8:], lam * r)
    fh = eval_fhat(obj, pt)
    assert fh >= 0
    assert grad @ grad - 2 * lam ** 2 * fh >= -1e-9 * (1 + fh)


def test_lambda_must_be_positive(sigmoid):
    with pytest.raises(ValueError):
        InvexObjective(sigmoid, 0.0)
    with pytest.raises(ValueError):
        L2Objective(sigmoid, -1.0)
