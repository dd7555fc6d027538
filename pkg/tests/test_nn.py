import math

import numpy as np
import pytest

from ldts.errors import ArgumentError, ConfigError, DatasetError, NumericError, ShapeError
from ldts.nn import (
    ModelParams,
    forward,
    glorot_bound,
    init_params,
    load_checkpoint,
    logit_gradient,
    masked_backward,
    per_sample_loss,
    save_checkpoint,
    sgd_step,
)
from ldts.sampler import RngState, SampleSet


def random_instance(seed, n=10, d=5, h=7, c=3):
    g = np.random.default_rng(seed)
    p = ModelParams(g.normal(size=(h, d)), g.normal(size=h) * 0.1, g.normal(size=(c, h)), g.normal(size=c) * 0.1)
    return p, g.normal(size=(n, d)), g.integers(0, c, n)


def oracle_loss(arrays, X, Y, rows):
    """Mean cross-entropy over ``rows`` in extended precision, written out independently."""
    W1, b1, W2, b2 = arrays
    hidden = np.maximum(X @ W1.T + b1, 0)
    H = hidden @ W2.T + b2
    H = H - H.max(axis=1, keepdims=True)
    nll = np.log(np.exp(H).sum(axis=1)) - H[np.arange(len(Y)), Y]
    return nll[rows].mean()


def finite_difference(params, X, Y, sample, h=1e-6):
    """Central differences; long double keeps round-off well below the gradient's size."""
    ext = [a.astype(np.longdouble) for a in params.arrays()]
    Xl = X.astype(np.longdouble)
    grads = []
    for a in ext:
        g = np.zeros(a.shape)
        for i in np.ndindex(a.shape):
            orig = a[i]
            a[i] = orig + h
            up = oracle_loss(ext, Xl, Y, sample.indices)
            a[i] = orig - h
            down = oracle_loss(ext, Xl, Y, sample.indices)
            a[i] = orig
            g[i] = float((up - down) / (2 * h))
        grads.append(g)
    return ModelParams(*grads)


def relative_error(a, b):
    scale = np.maximum(np.abs(a), np.abs(b))
    return np.divide(np.abs(a - b), scale, out=np.zeros_like(a), where=scale > 0)


def naive_forward(p, X):
    out = np.zeros((X.shape[0], p.class_count))
    for r in range(X.shape[0]):
        hidden = [max(0.0, sum(p.W1[j, i] * X[r, i] for i in range(p.input_dim)) + p.b1[j])
                  for j in range(p.hidden_dim)]
        for c in range(p.class_count):
            out[r, c] = sum(p.W2[c, j] * hidden[j] for j in range(p.hidden_dim)) + p.b2[c]
    return out


def test_init_shapes_and_zero_bias():
    p = init_params(4, 8, 3, RngState(0))
    assert p.W1.shape == (8, 4) and p.W2.shape == (3, 8)
    assert not p.b1.any() and not p.b2.any()
    assert np.abs(p.W1).max() <= glorot_bound(4, 8)


def test_init_deterministic():
    assert init_params(4, 8, 3, RngState(5)).allclose(init_params(4, 8, 3, RngState(5)))


def test_glorot_bound_value():
    assert glorot_bound(4, 8) == pytest.approx(math.sqrt(0.5), abs=1e-15)
    assert glorot_bound(4, 8) == pytest.approx(0.7071, abs=1e-4)


def test_init_rejects_zero_dim():
    with pytest.raises(ArgumentError):
        init_params(0, 3, 2, RngState(0))


def test_zero_params_give_zero_logits():
    p = ModelParams(np.zeros((3, 2)), np.zeros(3), np.zeros((4, 3)), np.zeros(4))
    assert not forward(p, np.ones((5, 2))).any()


def test_scalar_passthrough():
    p = ModelParams([[1.0]], [0.0], [[1.0]], [0.0])
    assert forward(p, [[2.0]]).tolist() == [[2.0]]


def test_forward_matches_naive_loops():
    p = init_params(4, 3, 2, RngState(3))
    p.b1[:] = [0.1, -0.2, 0.3]
    X = np.random.default_rng(2).normal(size=(6, 4))
    np.testing.assert_allclose(forward(p, X), naive_forward(p, X), rtol=0, atol=1e-12)


def test_forward_shape_mismatch():
    with pytest.raises(ShapeError):
        forward(init_params(4, 3, 2, RngState(0)), np.zeros((2, 5)))


def test_uniform_logits_loss():
    np.testing.assert_allclose(per_sample_loss(np.zeros((3, 4)), [0, 1, 3]), math.log(4), rtol=1e-15)


def test_confident_binary_loss():
    got = per_sample_loss([[10.0, 0.0]], [0])[0]
    assert got == pytest.approx(math.log1p(math.exp(-10.0)), rel=1e-12)
    assert got == pytest.approx(4.54e-5, rel=1e-3)


def test_duplicate_rows_same_loss():
    H = np.array([[0.3, -1.0, 2.0], [0.3, -1.0, 2.0]])
    loss = per_sample_loss(H, [1, 1])
    assert loss[0] == loss[1] and np.all(loss > 0)


def test_label_out_of_range():
    with pytest.raises(DatasetError):
        per_sample_loss(np.zeros((2, 3)), [0, 3])


def test_full_sample_is_full_batch_gradient():
    p, X, Y = random_instance(0)
    full = masked_backward(p, X, Y, SampleSet(np.arange(10)))
    # reference: autograd-free formula over all rows
    pre = X @ p.W1.T + p.b1
    hidden = np.maximum(pre, 0)
    H = hidden @ p.W2.T + p.b2
    S = np.exp(H - H.max(1, keepdims=True))
    S /= S.sum(1, keepdims=True)
    S[np.arange(10), Y] -= 1
    S /= 10
    np.testing.assert_allclose(full.W2, S.T @ hidden, atol=1e-14)
    np.testing.assert_allclose(full.b2, S.sum(0), atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    p, X, Y = random_instance(seed)
    sample = SampleSet(np.sort(np.random.default_rng(seed).choice(10, 4, replace=False)))
    analytic = masked_backward(p, X, Y, sample)
    numeric = finite_difference(p, X, Y, sample)
    for a, b in zip(analytic.arrays(), numeric.arrays()):
        assert relative_error(a, b).max() < 1e-5


def test_excluded_node_has_no_influence():
    p, X, Y = random_instance(1, n=2)
    base = masked_backward(p, X, Y, SampleSet([0]))
    X2, Y2 = X.copy(), Y.copy()
    X2[1] = 100.0
    Y2[1] = (Y[1] + 1) % 3
    assert base.allclose(masked_backward(p, X2, Y2, SampleSet([0])))


def test_mask_linearity():
    p, X, Y = random_instance(4)
    S = [1, 4, 5, 8]
    combined = masked_backward(p, X, Y, SampleSet(S))
    singles = [masked_backward(p, X, Y, SampleSet([i])) for i in S]
    for j, a in enumerate(combined.arrays()):
        np.testing.assert_allclose(a, sum(s.arrays()[j] for s in singles) / len(S), atol=1e-14)


def test_logit_gradient_zero_off_sample():
    H = np.random.default_rng(0).normal(size=(6, 3))
    dH = logit_gradient(H, [0, 1, 2, 0, 1, 2], SampleSet([1, 4]))
    assert not dH[[0, 2, 3, 5]].any()
    assert np.all(np.linalg.norm(dH[[1, 4]], axis=1) > 0)


def test_sgd_step():
    g = ModelParams(np.ones((2, 2)), np.ones(2), np.ones((1, 2)), np.ones(1))
    zero = ModelParams(np.zeros((2, 2)), np.zeros(2), np.zeros((1, 2)), np.zeros(1))
    out = sgd_step(zero, g, 1.0)
    assert all(np.all(a == -1.0) for a in out.arrays())
    p, _, _ = random_instance(3)
    assert sgd_step(sgd_step(p, zero_like(p), 0.1), zero_like(p), 0.1).allclose(p)
    gr, _, _ = random_instance(9)
    stepped = sgd_step(p, gr, 0.05)
    for a, b, c in zip(stepped.arrays(), p.arrays(), gr.arrays()):
        np.testing.assert_allclose(a, b - 0.05 * c, rtol=0, atol=1e-15)


def zero_like(p):
    return ModelParams(*(np.zeros_like(a) for a in p.arrays()))


def test_sgd_rejects_bad_inputs():
    p, _, _ = random_instance(0)
    with pytest.raises(ConfigError):
        sgd_step(p, zero_like(p), 0.0)
    bad = zero_like(p)
    bad.b2[0] = np.nan
    with pytest.raises(NumericError):
        sgd_step(p, bad, 0.1)


def test_checkpoint_round_trip(tmp_path):
    p = init_params(5, 4, 3, RngState(2))
    path = tmp_path / "m.bin"
    save_checkpoint(p, path)
    raw = path.read_bytes()
    assert raw[:4] == b"LDTS"
    assert len(raw) == 24 + 8 * (4 * 5 + 4 + 3 * 4 + 3)
    back = load_checkpoint(path)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), back.arrays()))


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(DatasetError, match="bad.bin"):
        load_checkpoint(path)
