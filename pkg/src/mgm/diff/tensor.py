"""Minimal define-by-run reverse-mode autodiff over float64 numpy arrays.

The tape is rebuilt on every forward pass: each op returns a Tensor that
remembers its parents and a vector-Jacobian callback. ``backward`` walks the
graph in reverse topological order and accumulates gradients into leaves
with ``requires_grad`` set. Leaves with ``requires_grad=False`` are treated
as constants, which is how the E/M freeze contracts are enforced.
"""

import numpy as np
from scipy import special

from ..errors import PreconditionError, ShapeError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, name=None):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.item())

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag}, requires_grad={self.requires_grad})"

    # operator sugar --------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def backward(self):
        backward(self)


def astensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


def backward(t: Tensor):
    if t.data.size != 1:
        raise ShapeError("backward requires a scalar output")
    topo = []
    seen = set()
    stack = [(t, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))

    t.grad = np.ones_like(t.data)
    for node in reversed(topo):
        if node._vjp is None or node.grad is None:
            continue
        grads = node._vjp(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = g.copy()
            else:
                parent.grad = parent.grad + g


# ---------------------------------------------------------------------------
# elementwise arithmetic (numpy broadcasting, gradients unbroadcast)
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(out, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    out = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(out, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    out = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make(out, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    out = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return _make(out, (a, b), vjp)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = astensor(a), astensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    out = a.data @ b.data

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _make(out, (a, b), vjp)


def transpose(a) -> Tensor:
    a = astensor(a)

    def vjp(g):
        return (g.T,)

    return _make(a.data.T, (a,), vjp)


# ---------------------------------------------------------------------------
# reductions and shaping
# ---------------------------------------------------------------------------

def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = astensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        g2 = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g2, a.data.shape).copy(),)

    return _make(out, (a,), vjp)


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = astensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def concat(tensors, axis=1) -> Tensor:
    tensors = [astensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    return _make(out, tuple(tensors), vjp)


def take_rows(a, idx) -> Tensor:
    """Differentiable row gather; gradients scatter-add back."""
    a = astensor(a)
    idx = np.asarray(idx, dtype=np.intp)
    out = a.data[idx]

    def vjp(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, idx, g)
        return (ga,)

    return _make(out, (a,), vjp)


def slice_cols(a, start, stop) -> Tensor:
    a = astensor(a)
    out = a.data[:, start:stop]

    def vjp(g):
        ga = np.zeros_like(a.data)
        ga[:, start:stop] = g
        return (ga,)

    return _make(out, (a,), vjp)


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------

def relu(a) -> Tensor:
    a = astensor(a)
    out = np.maximum(a.data, 0.0)

    def vjp(g):
        return (g * (a.data > 0.0),)

    return _make(out, (a,), vjp)


def elu(a, alpha=1.0) -> Tensor:
    a = astensor(a)
    out = np.where(a.data > 0.0, a.data, alpha * np.expm1(a.data))

    def vjp(g):
        return (g * np.where(a.data > 0.0, 1.0, out + alpha),)

    return _make(out, (a,), vjp)


def exp(a) -> Tensor:
    a = astensor(a)
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return _make(out, (a,), vjp)


def log(a) -> Tensor:
    a = astensor(a)
    out = np.log(a.data)

    def vjp(g):
        return (g / a.data,)

    return _make(out, (a,), vjp)


def sqrt(a) -> Tensor:
    a = astensor(a)
    out = np.sqrt(a.data)

    def vjp(g):
        return (g * 0.5 / out,)

    return _make(out, (a,), vjp)


def square(a) -> Tensor:
    a = astensor(a)

    def vjp(g):
        return (g * 2.0 * a.data,)

    return _make(a.data * a.data, (a,), vjp)


def softplus(a) -> Tensor:
    a = astensor(a)
    out = np.logaddexp(0.0, a.data)

    def vjp(g):
        return (g * special.expit(a.data),)

    return _make(out, (a,), vjp)


def gammaln(a) -> Tensor:
    a = astensor(a)
    out = special.gammaln(a.data)

    def vjp(g):
        return (g * special.digamma(a.data),)

    return _make(out, (a,), vjp)


def digamma(a) -> Tensor:
    a = astensor(a)
    out = special.digamma(a.data)

    def vjp(g):
        return (g * special.polygamma(1, a.data),)

    return _make(out, (a,), vjp)


def xlogy(q, r) -> Tensor:
    """q * log(r) with the 0 * log(.) = 0 convention of scipy.special.xlogy."""
    q, r = astensor(q), astensor(r)
    out = special.xlogy(q.data, r.data)

    def vjp(g):
        with np.errstate(divide="ignore", invalid="ignore"):
            gq = g * np.log(r.data)
            ratio = np.where(q.data == 0.0, 0.0, q.data / np.where(r.data == 0.0, 1.0, r.data))
        gq = np.where(q.data == 0.0, np.where(r.data == 0.0, 0.0, gq), gq)
        return _unbroadcast(gq, q.data.shape), _unbroadcast(g * ratio, r.data.shape)

    return _make(out, (q, r), vjp)


def dropout(a, rate, rng, training=True) -> Tensor:
    """Inverted dropout; identity when not training or rate == 0."""
    a = astensor(a)
    if not training or rate == 0.0:
        return a
    keep = (rng.random(a.data.shape) >= rate) / (1.0 - rate)
    return mul(a, Tensor(keep))


# ---------------------------------------------------------------------------
# softmax family
# ---------------------------------------------------------------------------

def softmax(a) -> Tensor:
    """Row-wise softmax, stabilized by max subtraction."""
    a = astensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return _make(out, (a,), vjp)


def log_softmax(a) -> Tensor:
    a = astensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    s = np.exp(out)

    def vjp(g):
        return (g - s * g.sum(axis=-1, keepdims=True),)

    return _make(out, (a,), vjp)


def masked_softmax(a, mask) -> Tensor:
    """Row-wise softmax over entries where ``mask`` is true; others get 0.

    Rows with no admissible entry raise; callers that want a fallback must
    check the mask first.
    """
    a = astensor(a)
    m = np.asarray(mask, dtype=bool)
    m = np.broadcast_to(m, a.data.shape)
    if not m.any(axis=-1).all():
        raise PreconditionError("masked_softmax: a row has no admissible entry")
    shifted = a.data - np.where(m, a.data, -np.inf).max(axis=-1, keepdims=True)
    e = np.exp(shifted) * m
    out = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return _make(out, (a,), vjp)


def softmax_cross_entropy(logits, targets, mask=None) -> Tensor:
    """Mean negative log-likelihood of one-hot ``targets`` over masked rows.

    ``mask`` is a boolean vector selecting rows that enter the mean; all
    rows participate when omitted.
    """
    logits, targets = astensor(logits), astensor(targets)
    if logits.shape != targets.shape:
        raise ShapeError(
            f"logits {logits.shape} and targets {targets.shape} disagree"
        )
    n = logits.shape[0]
    if mask is None:
        rows = np.ones(n, dtype=bool)
    else:
        rows = np.asarray(mask, dtype=bool)
        if rows.shape != (n,):
            raise ShapeError("mask must be one boolean per row")
    k = int(rows.sum())
    if k == 0:
        raise PreconditionError("softmax_cross_entropy: empty row mask")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    loss = -(targets.data * logp)[rows].sum() / k

    def vjp(g):
        probs = np.exp(logp)
        gl = (probs - targets.data) * rows[:, None] / k
        return (g * gl, None)

    return _make(loss, (logits, targets), vjp)
