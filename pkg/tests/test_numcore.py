import math

import numpy as np
import pytest

from langlab.numcore import ShapeError, Tape, Tensor, finite_difference_check

RNG = np.random.default_rng(7)


def rand(*shape):
    return Tensor(RNG.normal(size=shape))


# ------------------------------------------------------------ forward values


def test_softmax_uniform_row():
    y = Tape().softmax(Tensor([[0.0, 0.0, 0.0]]))
    assert np.allclose(y.data, 1 / 3, atol=1e-15)


def test_softmax_rows_sum_to_one():
    y = Tape().softmax(rand(5, 9))
    sums = y.data.sum(axis=-1)
    assert np.all(np.abs(sums - 1.0) <= 1e-12)
    assert np.all(y.data > 0) and np.all(y.data < 1)


def test_matmul_identity():
    a = RNG.normal(size=(3, 5))
    out = Tape().matmul(Tensor(np.eye(3)), Tensor(a))
    assert np.array_equal(out.data, a)


def test_layer_norm_against_scalar_oracle():
    # independent one-off mean/variance computation
    row = [1.0, 2.0, 3.0]
    eps = 1e-5
    mu = sum(row) / 3
    var = sum((v - mu) ** 2 for v in row) / 3
    expected = [(v - mu) / math.sqrt(var + eps) for v in row]
    out = Tape().layer_norm(
        Tensor([row]), Tensor(np.ones(3)), Tensor(np.zeros(3)), eps=eps
    )
    assert np.all(np.abs(out.data[0] - np.array(expected)) < 1e-12)


def test_cross_entropy_uniform_logits():
    tape = Tape()
    loss = tape.cross_entropy(Tensor(np.zeros((2, 3, 10))),
                              np.zeros((2, 3), dtype=int))
    assert abs(float(loss.data) - math.log(10)) < 1e-12


def test_cross_entropy_near_one_hot():
    logits = np.zeros((1, 1, 5))
    logits[0, 0, 2] = 100.0
    loss = Tape().cross_entropy(Tensor(logits), np.array([[2]]))
    assert float(loss.data) < 1e-12


def test_cross_entropy_against_brute_force_oracle():
    logits = RNG.normal(size=(2, 3, 7))
    targets = RNG.integers(0, 7, size=(2, 3))
    # direct softmax-then-log oracle
    total = 0.0
    for b in range(2):
        for t in range(3):
            row = logits[b, t]
            p = np.exp(row) / np.exp(row).sum()
            total += -math.log(p[targets[b, t]])
    expected = total / 6
    loss = Tape().cross_entropy(Tensor(logits), targets)
    assert abs(float(loss.data) - expected) < 1e-12


def test_cross_entropy_ignore_id():
    logits = RNG.normal(size=(1, 4, 6))
    targets = np.array([[2, 0, 0, 3]])
    loss = Tape().cross_entropy(Tensor(logits), targets, ignore_id=0)
    rows = [0, 3]
    total = 0.0
    for t in rows:
        row = logits[0, t]
        p = np.exp(row) / np.exp(row).sum()
        total += -math.log(p[targets[0, t]])
    assert abs(float(loss.data) - total / 2) < 1e-12


def test_cross_entropy_all_ignored():
    with pytest.raises(ValueError, match="all targets ignored"):
        Tape().cross_entropy(Tensor(np.zeros((1, 2, 4))),
                             np.zeros((1, 2), dtype=int), ignore_id=0)


def test_cross_entropy_nonnegative():
    for _ in range(10):
        loss = Tape().cross_entropy(rand(2, 3, 9), RNG.integers(0, 9, (2, 3)))
        assert float(loss.data) >= 0.0


# ----------------------------------------------------------------- backward


def test_backward_sum_gives_ones():
    tape = Tape()
    x = Tensor(RNG.normal(size=(3, 4)), requires_grad=True)
    tape.backward(tape.sum_all(x))
    assert np.array_equal(x.grad, np.ones((3, 4)))


def test_backward_dot_square():
    tape = Tape()
    x = Tensor(RNG.normal(size=(5,)), requires_grad=True)
    loss = tape.sum_all(tape.mul(x, x))
    tape.backward(loss)
    assert np.allclose(x.grad, 2 * x.data, atol=1e-15)


def test_backward_requires_scalar():
    tape = Tape()
    x = Tensor(RNG.normal(size=(2, 2)), requires_grad=True)
    y = tape.scale(x, 2.0)
    with pytest.raises(ValueError, match="scalar"):
        tape.backward(y)


def test_gradient_accumulates_over_reuse():
    tape = Tape()
    x = Tensor(np.array(3.0), requires_grad=True)
    y = tape.add(x, x)
    tape.backward(tape.sum_all(y))
    assert x.grad == pytest.approx(2.0)


# ------------------------------------------------- finite-difference checks


def fd(f, x, h=1e-5):
    err = finite_difference_check(f, x, h)
    assert err < 1e-6, f"finite-difference error {err:.3e}"


def test_fd_requires_positive_step():
    with pytest.raises(ValueError, match="step must be positive"):
        finite_difference_check(lambda t, x: t.sum_all(x), rand(2), h=0.0)


def test_fd_sum_of_squares_tight():
    err = finite_difference_check(
        lambda t, x: t.sum_all(t.mul(x, x)), rand(3, 3)
    )
    assert err < 1e-9


def test_fd_add():
    other = rand(3, 4)
    fd(lambda t, x: t.sum_all(t.mul(t.add(x, other), t.add(x, other))), rand(3, 4))


def test_fd_add_bias():
    a = rand(2, 3, 4)
    fd(lambda t, b: t.sum_all(t.mul(t.add_bias(a, b), t.add_bias(a, b))), rand(4))
    bias = rand(4)
    fd(lambda t, x: t.sum_all(t.mul(t.add_bias(x, bias), t.add_bias(x, bias))),
       rand(2, 3, 4))


def test_fd_mul():
    other = rand(4, 2)
    fd(lambda t, x: t.sum_all(t.mul(t.mul(x, other), x)), rand(4, 2))


def test_fd_scale():
    fd(lambda t, x: t.sum_all(t.mul(t.scale(x, -1.7), t.scale(x, 0.3))), rand(5))


def test_fd_matmul_2d():
    b = rand(4, 3)
    fd(lambda t, x: t.sum_all(t.mul(t.matmul(x, b), t.matmul(x, b))), rand(2, 4))
    a = rand(2, 4)
    fd(lambda t, x: t.sum_all(t.mul(t.matmul(a, x), t.matmul(a, x))), rand(4, 3))


def test_fd_matmul_batched():
    b = rand(2, 4, 3)
    fd(lambda t, x: t.sum_all(t.mul(t.matmul(x, b), t.matmul(x, b))), rand(2, 5, 4))


def test_fd_transpose():
    fd(lambda t, x: t.sum_all(t.mul(t.transpose(x), t.transpose(x))), rand(3, 5))


def test_fd_reshape():
    fd(lambda t, x: t.sum_all(t.mul(t.reshape(x, (6,)), t.reshape(x, (6,)))),
       rand(2, 3))


def test_fd_concat():
    other = rand(2, 3)
    fd(lambda t, x: t.sum_all(t.mul(t.concat([x, other], 1),
                                    t.concat([other, x], 1))), rand(2, 3))


def test_fd_slice():
    fd(lambda t, x: t.sum_all(t.mul(t.slice_axis(x, 1, 1, 3),
                                    t.slice_axis(x, 1, 2, 4))), rand(3, 5))


def test_fd_embedding_lookup():
    ids = np.array([[0, 2], [1, 0]])
    fd(lambda t, x: t.sum_all(t.mul(t.embedding_lookup(x, ids),
                                    t.embedding_lookup(x, ids))), rand(3, 4))


def test_fd_softmax():
    w = rand(4, 6)
    fd(lambda t, x: t.sum_all(t.mul(t.softmax(x), w)), rand(4, 6))


def test_fd_layer_norm():
    gain, bias = rand(5), rand(5)
    w = rand(3, 5)
    fd(lambda t, x: t.sum_all(t.mul(t.layer_norm(x, gain, bias), w)), rand(3, 5))
    x0 = rand(3, 5)
    fd(lambda t, g: t.sum_all(t.mul(t.layer_norm(x0, g, bias), w)), rand(5))
    fd(lambda t, b: t.sum_all(t.mul(t.layer_norm(x0, gain, b), w)), rand(5))


def test_fd_tanh_sigmoid_gelu():
    for op in ("tanh", "sigmoid", "gelu"):
        fd(lambda t, x, op=op: t.sum_all(t.mul(getattr(t, op)(x),
                                               getattr(t, op)(x))), rand(3, 4))


def test_fd_softmax_cross_entropy():
    targets = RNG.integers(0, 7, size=(2, 3))
    err = finite_difference_check(
        lambda t, x: t.cross_entropy(x, targets), rand(2, 3, 7)
    )
    assert err < 1e-6


# ----------------------------------------------------------- shapes, errors


def test_shape_errors_name_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(3, 2\)"):
        Tape().add(rand(2, 3), rand(3, 2))
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
        Tape().matmul(rand(2, 3), rand(2, 2))
    with pytest.raises(ShapeError):
        Tape().layer_norm(rand(2, 3), rand(4), rand(3))
    with pytest.raises(ShapeError):
        Tape().slice_axis(rand(2, 3), 1, 2, 5)
    with pytest.raises(ShapeError):
        Tape().reshape(rand(2, 3), (7,))


def test_embedding_range_check():
    with pytest.raises(ShapeError, match="out of range"):
        Tape().embedding_lookup(rand(3, 4), np.array([[5]]))


def test_forward_determinism_bit_identical():
    x = rand(4, 6)
    a = Tape().softmax(Tensor(x.data.copy())).data
    b = Tape().softmax(Tensor(x.data.copy())).data
    assert a.tobytes() == b.tobytes()


def test_check_finite_mode():
    tape = Tape(check_finite=True)
    big = Tensor(np.full((2, 2), 1e308))
    with np.errstate(over="ignore"):
        with pytest.raises(FloatingPointError, match="add"):
            tape.add(big, big)
