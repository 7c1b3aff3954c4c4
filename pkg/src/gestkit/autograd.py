"""Minimal reverse-mode automatic differentiation over numpy arrays.

A ``Tape`` records every operation it executes; ``Tape.backward`` walks the
records in exact reverse order, accumulating gradients additively on fan-out.
Shapes are explicit everywhere (no broadcasting); the only implicit expansion
is the per-channel bias inside ``conv1d``. Also home to the Adam optimizer,
its step-decay schedule, and a central-finite-difference gradient checker.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError, StateError

__all__ = [
    "Tensor",
    "Tape",
    "Adam",
    "decayed_lr",
    "grad_check",
    "zero_grads",
]


class Tensor:
    """A float64 array with a same-shape gradient accumulator."""

    __slots__ = ("data", "grad", "tape")

    def __init__(self, data, tape: "Tape | None" = None):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.grad = np.zeros_like(arr)
        self.tape = tape

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, tape={'yes' if self.tape else 'leaf'})"


def zero_grads(params: Sequence[Tensor]) -> None:
    for p in params:
        p.grad[...] = 0.0


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


class Tape:
    """Ordered operation record; one forward/backward cycle per instance."""

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self._spent = False

    # -- recording ---------------------------------------------------------

    def _emit(self, data: np.ndarray, inputs: tuple[Tensor, ...], backward) -> Tensor:
        out = Tensor(data, tape=self)
        self._records.append((out, inputs, backward))
        return out

    def custom(self, data, inputs: Sequence[Tensor], backward) -> Tensor:
        """Register an externally computed op.

        ``backward(grad_out)`` must return one gradient array (or None) per
        input, in order.
        """
        return self._emit(np.asarray(data, dtype=np.float64), tuple(inputs), backward)

    # -- elementwise and linear ops ----------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "add")
        return self._emit(a.data + b.data, (a, b), lambda g: (g, g))

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "sub")
        return self._emit(a.data - b.data, (a, b), lambda g: (g, -g))

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "mul")
        da, db = a.data, b.data
        return self._emit(da * db, (a, b), lambda g: (g * db, g * da))

    def div(self, a: Tensor, b: Tensor) -> Tensor:
        _same_shape(a, b, "div")
        da, db = a.data, b.data
        return self._emit(da / db, (a, b), lambda g: (g / db, -g * da / (db * db)))

    def scale(self, a: Tensor, c: float) -> Tensor:
        c = float(c)
        return self._emit(a.data * c, (a,), lambda g: (g * c,))

    def add_const(self, a: Tensor, c: float) -> Tensor:
        c = float(c)
        return self._emit(a.data + c, (a,), lambda g: (g,))

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
            raise DimensionError(
                f"matmul: incompatible shapes {a.data.shape} @ {b.data.shape}"
            )
        da, db = a.data, b.data
        return self._emit(da @ db, (a, b), lambda g: (g @ db.T, da.T @ g))

    def transpose(self, a: Tensor) -> Tensor:
        if a.data.ndim != 2:
            raise DimensionError("transpose expects a 2-D tensor")
        return self._emit(a.data.T.copy(), (a,), lambda g: (g.T.copy(),))

    def relu(self, a: Tensor) -> Tensor:
        mask = a.data > 0  # gradient at exactly 0 is 0
        return self._emit(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))

    def abs(self, a: Tensor) -> Tensor:
        sign = np.sign(a.data)
        return self._emit(np.abs(a.data), (a,), lambda g: (g * sign,))

    def sqrt(self, a: Tensor) -> Tensor:
        if np.any(a.data < 0):
            raise DomainError("sqrt of negative value")
        root = np.sqrt(a.data)
        return self._emit(root, (a,), lambda g: (g * 0.5 / np.maximum(root, 1e-300),))

    def sum(self, a: Tensor) -> Tensor:
        shape = a.data.shape
        return self._emit(np.sum(a.data), (a,), lambda g: (np.full(shape, float(g)),))

    def sum_axis(self, a: Tensor, axis: int) -> Tensor:
        if a.data.ndim != 2:
            raise DimensionError("sum_axis expects a 2-D tensor")
        data = np.sum(a.data, axis=axis)
        shape = a.data.shape

        def backward(g):
            return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

        return self._emit(data, (a,), backward)

    # -- 1-D convolution -----------------------------------------------------

    def conv1d(
        self,
        x: Tensor,
        kernel: Tensor,
        padding: str,
        bias: Tensor | None = None,
    ) -> Tensor:
        """Multi-channel 1-D convolution over the time axis.

        ``x`` is (C_in, t), ``kernel`` is (K, C_in, C_out). ``same`` padding
        centers each tap with left offset (K-1)//2; ``causal`` padding makes
        output frame tau depend only on inputs at tau and earlier (tap i reads
        the input i frames back, zero-padded on the left).
        """
        if x.data.ndim != 2 or kernel.data.ndim != 3:
            raise DimensionError("conv1d expects x (C_in, t) and kernel (K, C_in, C_out)")
        k, c_in, c_out = kernel.data.shape
        if x.data.shape[0] != c_in:
            raise DimensionError(
                f"conv1d: input has {x.data.shape[0]} channels, kernel expects {c_in}"
            )
        if padding == "same":
            shifts = [tap - (k - 1) // 2 for tap in range(k)]
        elif padding == "causal":
            shifts = [-tap for tap in range(k)]
        else:
            raise ArgumentError(f"unknown padding {padding!r}")
        if bias is not None and bias.data.shape != (c_out,):
            raise DimensionError(f"bias must have shape ({c_out},)")

        t = x.data.shape[1]
        xd, kd = x.data, kernel.data
        out = np.zeros((c_out, t))
        for tap, s in enumerate(shifts):
            out += kd[tap].T @ _shift(xd, s)
        if bias is not None:
            out += bias.data[:, None]

        def backward(g):
            gx = np.zeros_like(xd)
            gk = np.zeros_like(kd)
            for tap, s in enumerate(shifts):
                gx += _shift(kd[tap] @ g, -s)
                gk[tap] = _shift(xd, s) @ g.T
            if bias is not None:
                return gx, gk, np.sum(g, axis=1)
            return gx, gk

        inputs = (x, kernel) if bias is None else (x, kernel, bias)
        return self._emit(out, inputs, backward)

    # -- reverse pass --------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Propagate d(loss)/d(input) into every tensor's ``grad``."""
        if loss.tape is not self:
            raise ArgumentError("loss was not produced on this tape")
        if loss.data.size != 1:
            raise ArgumentError(f"loss must be scalar, got shape {loss.data.shape}")
        if self._spent:
            raise StateError("tape already backpropagated; build a fresh tape")
        self._spent = True
        loss.grad = np.ones_like(loss.data)
        for out, inputs, backward in reversed(self._records):
            grads = backward(out.grad)
            for tensor, grad in zip(inputs, grads):
                if grad is not None:
                    tensor.grad = tensor.grad + grad


def _shift(x: np.ndarray, s: int) -> np.ndarray:
    """Time shift with zero fill: result[:, tau] = x[:, tau + s]."""
    if s == 0:
        return x
    out = np.zeros_like(x)
    if s > 0:
        if s < x.shape[1]:
            out[:, : x.shape[1] - s] = x[:, s:]
    else:
        if -s < x.shape[1]:
            out[:, -s:] = x[:, : x.shape[1] + s]
    return out


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------


class Adam:
    """Adam with bias correction and decoupled weight decay.

    With ``decoupled=True`` (the default) the decay ``lr * wd * theta`` is
    subtracted from the parameter directly and never enters the moment
    estimates; ``decoupled=False`` folds ``wd * theta`` into the gradient
    instead, for sensitivity runs.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        decoupled: bool = True,
    ):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = float(weight_decay)
        self.decoupled = decoupled
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        zero_grads(self.params)

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.step_count
        bias2 = 1.0 - b2**self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad.shape != p.data.shape:
                raise DimensionError("gradient/parameter shape mismatch")
            g = p.grad
            if self.weight_decay and not self.decoupled:
                g = g + self.weight_decay * p.data
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            p.data -= self.lr * update
            if self.weight_decay and self.decoupled:
                p.data -= self.lr * self.weight_decay * p.data


def decayed_lr(lr0: float, factor: float, every: int, updates_done: int) -> float:
    """Step schedule: multiply by ``factor`` once per ``every`` updates."""
    if every < 1:
        raise ArgumentError(f"decay interval must be >= 1, got {every}")
    return lr0 * factor ** (updates_done // every)


# ---------------------------------------------------------------------------
# Finite-difference checking
# ---------------------------------------------------------------------------


def grad_check(
    f: Callable[[Tape, Tensor], Tensor], x: np.ndarray, h: float = 1e-5
) -> float:
    """Max relative error between the tape gradient of ``f`` and central
    finite differences, over every coordinate of ``x``."""
    x = np.asarray(x, dtype=np.float64)

    def value_at(arr: np.ndarray) -> float:
        tape = Tape()
        out = f(tape, Tensor(arr))
        val = float(out.data)
        if not math.isfinite(val):
            raise DomainError("function returned a non-finite value")
        return val

    tape = Tape()
    probe = Tensor(x.copy())
    loss = f(tape, probe)
    if loss.data.size != 1:
        raise ArgumentError("grad_check needs a scalar-valued function")
    if not np.all(np.isfinite(loss.data)):
        raise DomainError("function returned a non-finite value")
    tape.backward(loss)
    analytic = probe.grad.copy()

    worst = 0.0
    for idx in np.ndindex(x.shape):
        bumped = x.copy()
        bumped[idx] += h
        f_plus = value_at(bumped)
        bumped[idx] -= 2.0 * h
        f_minus = value_at(bumped)
        numeric = (f_plus - f_minus) / (2.0 * h)
        denom = max(abs(float(analytic[idx])), abs(numeric), 1e-8)
        worst = max(worst, abs(float(analytic[idx]) - numeric) / denom)
    return worst
