import numpy as np
import pytest

from dnc.baseline import LinearClassifier, init_linear, linear_logits, softmax_ce_loss
from dnc.errors import LabelError, ShapeError
from oracles import central_diff, dot, rel_err


def test_logits_examples(rng):
    x = rng.standard_normal((3, 4))
    assert np.all(linear_logits(x, LinearClassifier(np.zeros((4, 2)), np.zeros(2))) == 0)
    eye = np.eye(3)
    assert np.array_equal(linear_logits(eye, LinearClassifier(eye, np.zeros(3))), eye)
    clf = init_linear(4, 5, seed=0)
    loop = np.array([[dot(xn, clf.W[:, c]) + clf.b[c] for c in range(5)] for xn in x])
    np.testing.assert_allclose(linear_logits(x, clf), loop, atol=1e-14)
    with pytest.raises(ShapeError):
        linear_logits(np.ones((2, 3)), clf)


def test_loss_values():
    loss, *_ = softmax_ce_loss(np.ones((2, 3)), [0, 1], LinearClassifier(np.zeros((3, 2)), np.zeros(2)))
    assert loss == pytest.approx(0.693147181, abs=1e-9)
    loss, *_ = softmax_ce_loss(np.zeros((1, 2)), [1], LinearClassifier(np.zeros((2, 3)), np.array([0.0, 50.0, 0.0])))
    assert loss < 1e-20
    with pytest.raises(LabelError):
        softmax_ce_loss(np.zeros((1, 2)), [3], LinearClassifier(np.zeros((2, 3)), np.zeros(3)))


def test_init_is_seeded_and_scaled():
    a, b = init_linear(16, 4, 3), init_linear(16, 4, 3)
    assert np.array_equal(a.W, b.W) and np.all(a.b == 0)
    assert np.max(np.abs(a.W)) <= 1 / 4


@pytest.mark.parametrize("seed", range(10))
def test_gradients_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 4))
    labels = rng.integers(0, 3, 5)
    clf = LinearClassifier(rng.standard_normal((4, 3)), rng.standard_normal(3))
    _, gx, gw, gb = softmax_ce_loss(x, labels, clf)
    assert rel_err(gx, central_diff(lambda z: softmax_ce_loss(z, labels, clf)[0], x)) < 1e-4
    assert rel_err(gw, central_diff(lambda w: softmax_ce_loss(x, labels, LinearClassifier(w, clf.b))[0], clf.W)) < 1e-4
    assert rel_err(gb, central_diff(lambda b: softmax_ce_loss(x, labels, LinearClassifier(clf.W, b))[0], clf.b)) < 1e-4


def test_shift_invariance_and_bias_closed_form(rng):
    x = rng.standard_normal((6, 4))
    labels = rng.integers(0, 3, 6)
    clf = LinearClassifier(rng.standard_normal((4, 3)), rng.standard_normal(3))
    shifted = LinearClassifier(clf.W, clf.b + 7.5)
    base, moved = softmax_ce_loss(x, labels, clf), softmax_ce_loss(x, labels, shifted)
    assert moved[0] == pytest.approx(base[0], abs=1e-12)
    for a, b in zip(base[1:], moved[1:]):
        np.testing.assert_allclose(a, b, atol=1e-12)
    logits = x @ clf.W + clf.b
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    p[np.arange(6), labels] -= 1
    np.testing.assert_allclose(base[3], p.mean(axis=0), atol=1e-14)
