"""Dense float64 tensors with define-by-run reverse-mode differentiation.

Every operation on a :class:`Tensor` that involves at least one operand with
``requires_grad=True`` records its parents and a closure mapping the output
gradient to the parent gradients. :class:`Tape` replays those closures in
reverse topological order.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ContractError, DimensionError, DomainError

CE_EPS = 1e-12


def _as_array(value):
    arr = np.asarray(value, dtype=np.float64)
    return arr


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    ndiff = grad.ndim - len(shape)
    if ndiff > 0:
        grad = grad.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward", "__weakref__")

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _backward=None):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._parents = _parents
        self._backward = _backward

    # -- basic protocol -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self):
        return Tensor(self.data)

    def __len__(self):
        return self.data.shape[0]

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def backward(self, params=None):
        return backward(self, params)

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def tanh(self):
        return tanh(self)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def relu(self):
        return relu(self)


def tensor(data, requires_grad=False, name=None):
    return Tensor(data, requires_grad=requires_grad, name=name)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn):
    needs = any(p.requires_grad for p in parents)
    if needs:
        return Tensor(data, True, None, tuple(parents), backward_fn)
    return Tensor(data)


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------
class Tape:
    """Reverse-order record of the graph that produced ``loss``.

    ``order`` lists the recorded tensors in topological order; ``grads`` holds
    one gradient slot per recorded tensor after :meth:`backward`.
    """

    def __init__(self, loss: Tensor):
        self.loss = loss
        self.order = []
        seen = set()
        stack = [(loss, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                self.order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grads = {}

    def backward(self, params=None):
        loss = self.loss
        if loss.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if params is not None:
            for p in params:
                p.grad = np.zeros_like(p.data)
        grads = self.grads
        grads[id(loss)] = np.ones_like(loss.data)
        for node in reversed(self.order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.grad is None:
                    node.grad = g.copy()
                else:
                    node.grad = node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        return self


def backward(loss: Tensor, params=None):
    """Populate ``.grad`` on every leaf with ``requires_grad`` reachable from ``loss``.

    When ``params`` is given their gradients are reset to zero first, so any
    parameter the loss does not depend on ends with an exact zero gradient.
    """
    if not isinstance(loss, Tensor):
        raise ContractError("loss must be a Tensor")
    return Tape(loss).backward(params)


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------
def add(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data
    sa, sb = a.shape, b.shape
    return _make(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.data - b.data
    sa, sb = a.shape, b.shape
    return _make(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    ad, bd = a.data, b.data
    return _make(ad * bd, (a, b),
                 lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    ad, bd = a.data, b.data
    out = ad / bd
    return _make(out, (a, b),
                 lambda g: (_unbroadcast(g / bd, ad.shape), _unbroadcast(-g * out / bd, bd.shape)))


def scale(a, factor: float):
    a = _wrap(a)
    factor = float(factor)
    return _make(a.data * factor, (a,), lambda g: (g * factor,))


def power(a, exponent: float):
    a = _wrap(a)
    exponent = float(exponent)
    ad = a.data
    return _make(ad ** exponent, (a,), lambda g: (g * exponent * ad ** (exponent - 1.0),))


def tanh(a):
    a = _wrap(a)
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def exp(a):
    a = _wrap(a)
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a):
    a = _wrap(a)
    if np.any(a.data <= 0):
        raise DomainError("log of a non-positive value")
    ad = a.data
    return _make(np.log(ad), (a,), lambda g: (g / ad,))


def relu(a):
    a = _wrap(a)
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def softplus(a):
    a = _wrap(a)
    ad = a.data
    out = np.logaddexp(0.0, ad)
    return _make(out, (a,), lambda g: (g * _sigmoid(ad),))


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def sigmoid(a):
    a = _wrap(a)
    out = _sigmoid(a.data)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),))


# ---------------------------------------------------------------------------
# reductions and shape
# ---------------------------------------------------------------------------
def tsum(a, axis=None, keepdims=False):
    a = _wrap(a)
    shape = a.shape
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    return _make(out, (a,), bw)


def mean(a, axis=None, keepdims=False):
    a = _wrap(a)
    if axis is None:
        n = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        n = int(np.prod([a.shape[i] for i in axes]))
    return scale(tsum(a, axis, keepdims), 1.0 / n)


def reshape(a, shape):
    a = _wrap(a)
    old = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None):
    a = _wrap(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),))


def swap_last(a):
    a = _wrap(a)
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


def getitem(a, index):
    a = _wrap(a)
    shape = a.shape

    def bw(g):
        out = np.zeros(shape)
        np.add.at(out, index, g)
        return (out,)

    return _make(a.data[index], (a,), bw)


def concat(tensors, axis=-1):
    tensors = [_wrap(t) for t in tensors]
    ref = tensors[0].shape
    ax = axis % len(ref)
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(t.shape[i] != ref[i] for i in range(len(ref)) if i != ax):
            raise DimensionError(f"cannot concatenate shapes {ref} and {t.shape} on axis {axis}")
    sizes = [t.shape[ax] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    out = np.concatenate([t.data for t in tensors], axis=ax)
    return _make(out, tuple(tensors), lambda g: tuple(np.split(g, splits, axis=ax)))


def concat_last_dim(*tensors):
    return concat(tensors, axis=-1)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------
def matmul(a, b):
    """Matrix product over the last two axes; leading batch axes broadcast."""
    a, b = _wrap(a), _wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs ≥2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    out = np.matmul(ad, bd)

    def bw(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(bd, -1, -2)), ad.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(ad, -1, -2), g), bd.shape)
        return ga, gb

    return _make(out, (a, b), bw)


# ---------------------------------------------------------------------------
# composite primitives with analytic adjoints
# ---------------------------------------------------------------------------
def softmax_rows(a):
    """Softmax over the trailing axis, stabilised by max subtraction."""
    a = _wrap(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _make(out, (a,), bw)


def layer_norm(x, gamma, beta, eps=1e-5):
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    xc = xd - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gamma.data + beta.data
    n = xd.shape[-1]

    def bw(g):
        gx = None
        if x.requires_grad:
            gh = g * gamma.data
            gx = inv * (gh - gh.mean(axis=-1, keepdims=True)
                        - xhat * (gh * xhat).sum(axis=-1, keepdims=True) / n)
        gg = _unbroadcast(g * xhat, gamma.shape) if gamma.requires_grad else None
        gb = _unbroadcast(g, beta.shape) if beta.requires_grad else None
        return gx, gg, gb

    return _make(out, (x, gamma, beta), bw)


def unfold1d(x, kernel: int, stride: int = 1):
    """(N, T, F) -> (N, T_out, kernel*F) sliding patches along axis 1."""
    x = _wrap(x)
    n, t, f = x.shape
    t_out = (t - kernel) // stride + 1
    if t_out < 1:
        raise DimensionError(f"length {t} shorter than kernel {kernel}")
    idx = np.arange(t_out)[:, None] * stride + np.arange(kernel)[None, :]
    out = x.data[:, idx, :].reshape(n, t_out, kernel * f)

    def bw(g):
        gx = np.zeros((n, t, f))
        np.add.at(gx, (slice(None), idx), g.reshape(n, t_out, kernel, f))
        return (gx,)

    return _make(out, (x,), bw)


def dropout(x, rate: float, rng, training=True):
    """Inverted dropout; identity when ``rate == 0`` or not training."""
    x = _wrap(x)
    if not training or rate <= 0.0:
        return x
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep) / keep
    return _make(x.data * mask, (x,), lambda g: (g * mask,))


def cross_entropy(pred, target, eps=CE_EPS):
    """Mean over rows of ``-sum(target * log(max(pred, eps)))``.

    ``pred`` holds probabilities (not logits); rows are the trailing axis and
    every leading axis counts as a row index.
    """
    pred, target = _wrap(pred), _wrap(target)
    if pred.shape != target.shape:
        raise DimensionError(f"cross_entropy shapes differ: {pred.shape} vs {target.shape}")
    pd, td = pred.data, target.data
    clipped = np.maximum(pd, eps)
    rows = pd.size // pd.shape[-1]
    loss = -(td * np.log(clipped)).sum() / rows

    def bw(g):
        gp = -g * td / clipped / rows * (pd >= eps)
        gt = -g * np.log(clipped) / rows if target.requires_grad else None
        return gp, gt

    return _make(np.asarray(loss), (pred, target), bw)


def mse(a, b):
    a, b = _wrap(a), _wrap(b)
    if a.shape != b.shape:
        raise DimensionError(f"mse shapes differ: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    n = diff.size
    loss = (diff * diff).sum() / n
    return _make(np.asarray(loss), (a, b), lambda g: (2.0 * g * diff / n, -2.0 * g * diff / n))


def elementwise(a, f: str, b=None, **kwargs):
    """Dispatch by name: tanh, exp, log, add, mul, concat_last_dim, mean, scale."""
    table = {
        "tanh": lambda: tanh(a),
        "exp": lambda: exp(a),
        "log": lambda: log(a),
        "relu": lambda: relu(a),
        "softplus": lambda: softplus(a),
        "add": lambda: add(a, b),
        "mul": lambda: mul(a, b),
        "concat_last_dim": lambda: concat((a, b), axis=-1),
        "mean": lambda: mean(a, kwargs.get("axis")),
        "scale": lambda: scale(a, kwargs["factor"]),
    }
    if f not in table:
        raise ContractError(f"unknown elementwise op {f!r}")
    return table[f]()


SQRT_2PI = math.sqrt(2.0 * math.pi)
