"""Dense float64 tensors with tape-based reverse-mode differentiation.

A Tape records every differentiable op it executes; Tape.backward walks the
record in reverse, accumulating gradients into every tensor on the path that
requires them.  Tensors are written once by their producing op and treated as
immutable afterwards; independent Tapes are independent, so separate threads
may each run their own.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = ["Tensor", "Tape", "ShapeError", "finite_difference_check"]


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


# Backward rules receive the output gradient and return one gradient (or None)
# per input, in input order.
_BackwardFn = Callable[[np.ndarray], tuple]


class Tape:
    """Ordered record of executed ops; single-threaded by design."""

    def __init__(self, record: bool = True, check_finite: bool = False):
        self.record = record
        self.check_finite = check_finite
        self._records: list[tuple[Tensor, tuple[Tensor, ...], _BackwardFn]] = []

    # ------------------------------------------------------------------ core

    def _emit(self, name: str, out_data: np.ndarray, inputs: tuple[Tensor, ...],
              bwd: _BackwardFn) -> Tensor:
        if self.check_finite and not np.all(np.isfinite(out_data)):
            raise FloatingPointError(f"{name}: non-finite value in forward output")
        out = Tensor(out_data)
        if self.record and any(t.requires_grad for t in inputs):
            out.requires_grad = True
            self._records.append((out, inputs, bwd))
        return out

    def backward(self, loss: Tensor) -> None:
        """Populate .grad for every requires_grad tensor reachable from loss."""
        if loss.shape != ():
            raise ValueError(f"loss must be scalar, got shape {loss.shape}")
        for out, inputs, _ in self._records:
            out.grad = None
            for t in inputs:
                t.grad = None
        loss.grad = np.ones(())
        for out, inputs, bwd in reversed(self._records):
            g = out.grad
            if g is None:
                continue
            for t, gi in zip(inputs, bwd(g)):
                if gi is None or not t.requires_grad:
                    continue
                if t.grad is None:
                    t.grad = np.zeros_like(t.data)
                t.grad += gi

    # ------------------------------------------------------- elementwise ops

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"add: shapes {a.shape} vs {b.shape}")
        return self._emit("add", a.data + b.data, (a, b), lambda g: (g, g))

    def add_bias(self, a: Tensor, b: Tensor) -> Tensor:
        """a + b with b broadcast over a's leading axes (b matches a's trailing dims)."""
        k = b.data.ndim
        if k > a.data.ndim or a.shape[a.data.ndim - k:] != b.shape:
            raise ShapeError(f"add_bias: shapes {a.shape} vs {b.shape}")
        lead = tuple(range(a.data.ndim - k))

        def bwd(g):
            return g, g.sum(axis=lead) if lead else g

        return self._emit("add_bias", a.data + b.data, (a, b), bwd)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"mul: shapes {a.shape} vs {b.shape}")
        return self._emit("mul", a.data * b.data, (a, b),
                          lambda g: (g * b.data, g * a.data))

    def scale(self, a: Tensor, c: float) -> Tensor:
        return self._emit("scale", a.data * c, (a,), lambda g: (g * c,))

    def tanh(self, a: Tensor) -> Tensor:
        y = np.tanh(a.data)
        return self._emit("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))

    def sigmoid(self, a: Tensor) -> Tensor:
        x = a.data
        y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                     np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        return self._emit("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))

    def gelu(self, a: Tensor) -> Tensor:
        """Gaussian error linear unit, tanh approximation."""
        x = a.data
        c = math.sqrt(2.0 / math.pi)
        u = c * (x + 0.044715 * x ** 3)
        t = np.tanh(u)
        y = 0.5 * x * (1.0 + t)

        def bwd(g):
            du = c * (1.0 + 3 * 0.044715 * x ** 2)
            return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du),)

        return self._emit("gelu", y, (a,), bwd)

    # ------------------------------------------------------- structural ops

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        ok = (
            a.data.ndim == b.data.ndim
            and a.data.ndim in (2, 3)
            and a.shape[-1] == b.shape[-2]
            and (a.data.ndim == 2 or a.shape[0] == b.shape[0])
        )
        if not ok:
            raise ShapeError(f"matmul: shapes {a.shape} vs {b.shape}")

        def bwd(g):
            return (
                np.matmul(g, b.data.swapaxes(-1, -2)),
                np.matmul(a.data.swapaxes(-1, -2), g),
            )

        return self._emit("matmul", np.matmul(a.data, b.data), (a, b), bwd)

    def transpose(self, a: Tensor) -> Tensor:
        """Swap the last two axes."""
        if a.data.ndim < 2:
            raise ShapeError(f"transpose: need rank >= 2, got shape {a.shape}")
        return self._emit("transpose", a.data.swapaxes(-1, -2), (a,),
                          lambda g: (g.swapaxes(-1, -2),))

    def reshape(self, a: Tensor, shape: Sequence[int]) -> Tensor:
        shape = tuple(shape)
        if int(np.prod(shape, dtype=np.int64)) != a.data.size:
            raise ShapeError(f"reshape: {a.shape} to {shape}")
        return self._emit("reshape", a.data.reshape(shape), (a,),
                          lambda g: (g.reshape(a.shape),))

    def concat(self, parts: Sequence[Tensor], axis: int) -> Tensor:
        if not parts:
            raise ShapeError("concat: no inputs")
        first = parts[0].shape
        for p in parts[1:]:
            if (p.data.ndim != len(first)
                    or any(p.shape[i] != first[i]
                           for i in range(len(first)) if i != axis % len(first))):
                raise ShapeError(f"concat: shapes {first} vs {p.shape} on axis {axis}")
        sizes = [p.shape[axis] for p in parts]
        offsets = np.cumsum(sizes)[:-1]

        def bwd(g):
            return tuple(np.split(g, offsets, axis=axis))

        return self._emit("concat", np.concatenate([p.data for p in parts], axis=axis),
                          tuple(parts), bwd)

    def slice_axis(self, a: Tensor, axis: int, start: int, stop: int) -> Tensor:
        dim = a.shape[axis]
        if not (0 <= start < stop <= dim):
            raise ShapeError(f"slice_axis: range [{start}:{stop}] on axis {axis} of {a.shape}")
        sl = tuple(slice(None) if i != axis % a.data.ndim else slice(start, stop)
                   for i in range(a.data.ndim))

        def bwd(g):
            full = np.zeros_like(a.data)
            full[sl] = g
            return (full,)

        return self._emit("slice_axis", a.data[sl], (a,), bwd)

    def embedding_lookup(self, table: Tensor, ids: np.ndarray) -> Tensor:
        ids = np.asarray(ids, dtype=np.int64)
        if table.data.ndim != 2:
            raise ShapeError(f"embedding_lookup: table must be 2-d, got {table.shape}")
        if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
            raise ShapeError(
                f"embedding_lookup: id out of range for table rows {table.shape[0]}"
            )

        def bwd(g):
            gt = np.zeros_like(table.data)
            np.add.at(gt, ids.ravel(), g.reshape(-1, table.shape[1]))
            return (gt,)

        return self._emit("embedding_lookup", table.data[ids], (table,), bwd)

    # ----------------------------------------------------------- row-wise ops

    def softmax(self, a: Tensor) -> Tensor:
        """Softmax over the last axis with max-subtraction."""
        m = a.data.max(axis=-1, keepdims=True)
        e = np.exp(a.data - m)
        y = e / e.sum(axis=-1, keepdims=True)

        def bwd(g):
            return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

        return self._emit("softmax", y, (a,), bwd)

    def layer_norm(self, a: Tensor, gain: Tensor, bias: Tensor,
                   eps: float = 1e-5) -> Tensor:
        k = a.shape[-1]
        if gain.shape != (k,) or bias.shape != (k,):
            raise ShapeError(
                f"layer_norm: gain {gain.shape} / bias {bias.shape} vs rows of {a.shape}"
            )
        mu = a.data.mean(axis=-1, keepdims=True)
        d = a.data - mu
        var = (d * d).mean(axis=-1, keepdims=True)
        std = np.sqrt(var + eps)
        xhat = d / std
        lead = tuple(range(a.data.ndim - 1))

        def bwd(g):
            gx = g * gain.data
            dx = (gx - gx.mean(axis=-1, keepdims=True)
                  - xhat * (gx * xhat).mean(axis=-1, keepdims=True)) / std
            dgain = (g * xhat).sum(axis=lead) if lead else g * xhat
            dbias = g.sum(axis=lead) if lead else g
            return dx, dgain, dbias

        return self._emit("layer_norm", xhat * gain.data + bias.data,
                          (a, gain, bias), bwd)

    # ------------------------------------------------------------- reductions

    def sum_all(self, a: Tensor) -> Tensor:
        return self._emit("sum_all", np.asarray(a.data.sum()), (a,),
                          lambda g: (g * np.ones_like(a.data),))

    def cross_entropy(self, logits: Tensor, targets: np.ndarray,
                      ignore_id: int | None = None) -> Tensor:
        """Mean negative log-likelihood of targets under row-softmax of logits.

        logits: [..., vocab]; targets: matching leading shape, integer ids.
        Targets equal to ignore_id contribute nothing; the mean is over the
        remaining target count.  Log-sum-exp uses max-subtraction.
        """
        targets = np.asarray(targets, dtype=np.int64)
        if logits.shape[:-1] != targets.shape:
            raise ShapeError(
                f"cross_entropy: logits {logits.shape} vs targets {targets.shape}"
            )
        vocab = logits.shape[-1]
        flat = logits.data.reshape(-1, vocab)
        tgt = targets.ravel()
        mask = np.ones_like(tgt, dtype=bool) if ignore_id is None else tgt != ignore_id
        n = int(mask.sum())
        if n == 0:
            raise ValueError("cross_entropy: all targets ignored")
        safe_tgt = np.where(mask, tgt, 0)
        if safe_tgt.min() < 0 or safe_tgt.max() >= vocab:
            raise ValueError("cross_entropy: target id out of range")
        m = flat.max(axis=-1, keepdims=True)
        lse = m + np.log(np.exp(flat - m).sum(axis=-1, keepdims=True))
        logp = flat[np.arange(flat.shape[0]), safe_tgt] - lse[:, 0]
        loss = -(logp * mask).sum() / n

        def bwd(g):
            p = np.exp(flat - lse)
            p[np.arange(flat.shape[0]), safe_tgt] -= 1.0
            p[~mask] = 0.0
            return ((float(g) / n) * p.reshape(logits.shape),)

        return self._emit("cross_entropy", np.asarray(loss), (logits,), bwd)


def finite_difference_check(
    f: Callable[[Tape, Tensor], Tensor],
    x: Tensor,
    h: float = 1e-5,
) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``f`` must map (tape, tensor) to a scalar Tensor and be deterministic.
    Relative error per coordinate uses denominator max(|analytic|, |numeric|,
    1e-8).
    """
    if h <= 0:
        raise ValueError("step must be positive")
    base = x.data.copy()

    tape = Tape()
    probe = Tensor(base.copy(), requires_grad=True)
    tape.backward(f(tape, probe))
    analytic = (probe.grad if probe.grad is not None
                else np.zeros_like(base)).ravel()

    def value_at(arr: np.ndarray) -> float:
        out = f(Tape(record=False), Tensor(arr))
        return float(out.data)

    worst = 0.0
    flat = base.ravel()
    for i in range(flat.size):
        plus = flat.copy()
        plus[i] += h
        minus = flat.copy()
        minus[i] -= h
        numeric = (value_at(plus.reshape(base.shape))
                   - value_at(minus.reshape(base.shape))) / (2 * h)
        denom = max(abs(analytic[i]), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic[i] - numeric) / denom)
    return worst
