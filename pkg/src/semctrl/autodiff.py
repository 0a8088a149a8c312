"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every differentiable operation is a method on :class:`Graph`, which appends
one node per call.  :func:`backward` walks the tape in reverse append order
and accumulates gradients into ``Tensor.grad``.

Stop-gradient is explicit: :meth:`Graph.detach` returns a constant copy and
remembers it, so a graph built with ``frozen=`` replays those constants.
:func:`grad_check` relies on this to compare autodiff against central
differences of the *same* function, with detached values held at the base
point.
"""

import math

import numpy as np

from .errors import ContractError, DimensionError, DomainError

__all__ = ["Tensor", "Graph", "backward", "grad_check", "zero_grad"]


class Tensor:
    """A rank-0, 1 or 2 array of float64 values with an optional gradient."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, name=None):
        data = np.array(data, dtype=np.float64)
        if data.ndim > 2:
            raise DimensionError(f"rank {data.ndim} tensors are not supported (max 2)")
        if 0 in data.shape:
            raise DimensionError(f"empty dimension in shape {data.shape}")
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, data, requires_grad):
        # internal fast path: data is already a fresh float64 ndarray
        t = cls.__new__(cls)
        t.data = data
        t.grad = None
        t.requires_grad = requires_grad
        t.name = None
        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def numpy(self):
        return self.data.copy()

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


def _const(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _acc(t, g):
    if t.requires_grad:
        t.grad = g if t.grad is None else t.grad + g


def _check_same(op, a, b):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


class Graph:
    """Append-only tape of operations.

    Parameters
    ----------
    frozen : list of ndarray, optional
        Values to substitute, in order, for successive :meth:`detach` calls.
        Used to re-evaluate a function with its stop-gradient values pinned.
    """

    def __init__(self, frozen=None):
        self.nodes = []
        self.detached = []
        self._frozen = frozen

    def __len__(self):
        return len(self.nodes)

    def _node(self, kind, inputs, data, back):
        needs = any(t.requires_grad for t in inputs)
        out = Tensor._wrap(data, needs)
        if needs:
            self.nodes.append((kind, inputs, out, back))
        return out

    # -- affine ----------------------------------------------------------------

    def linear(self, x, W, b=None):
        """``W @ x + b`` for a vector ``x``; row-wise ``x @ W.T + b`` for a matrix."""
        x, W = _const(x), _const(W)
        if W.data.ndim != 2 or x.data.ndim not in (1, 2) or x.shape[-1] != W.shape[1]:
            raise DimensionError(f"linear: x{x.shape} incompatible with W{W.shape}")
        if b is not None:
            b = _const(b)
            if b.shape != (W.shape[0],):
                raise DimensionError(f"linear: b{b.shape} incompatible with W{W.shape}")
        xd, Wd = x.data, W.data
        if xd.ndim == 1:
            out = Wd @ xd
        else:
            out = xd @ Wd.T
        if b is not None:
            out = out + b.data
        inputs = (x, W) if b is None else (x, W, b)

        def back(g):
            if x.requires_grad:
                _acc(x, Wd.T @ g if xd.ndim == 1 else g @ Wd)
            if W.requires_grad:
                _acc(W, np.outer(g, xd) if xd.ndim == 1 else g.T @ xd)
            if b is not None and b.requires_grad:
                _acc(b, g if xd.ndim == 1 else g.sum(axis=0))

        return self._node("linear", inputs, out, back)

    # -- elementwise -----------------------------------------------------------

    def sigmoid(self, x):
        y = np.empty_like(x.data)
        pos = x.data >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
        ex = np.exp(x.data[~pos])
        y[~pos] = ex / (1.0 + ex)

        def back(g):
            _acc(x, g * y * (1.0 - y))

        return self._node("sigmoid", (x,), y, back)

    def tanh(self, x):
        y = np.tanh(x.data)

        def back(g):
            _acc(x, g * (1.0 - y * y))

        return self._node("tanh", (x,), y, back)

    def add(self, a, b):
        a, b = _const(a), _const(b)
        _check_same("add", a, b)

        def back(g):
            _acc(a, g)
            _acc(b, g)

        return self._node("add", (a, b), a.data + b.data, back)

    def sub(self, a, b):
        a, b = _const(a), _const(b)
        _check_same("sub", a, b)

        def back(g):
            _acc(a, g)
            _acc(b, -g)

        return self._node("sub", (a, b), a.data - b.data, back)

    def mul(self, a, b):
        a, b = _const(a), _const(b)
        _check_same("mul", a, b)
        ad, bd = a.data, b.data

        def back(g):
            _acc(a, g * bd)
            _acc(b, g * ad)

        return self._node("mul", (a, b), ad * bd, back)

    def scale(self, x, c):
        """Multiply by a constant real ``c``."""
        c = float(c)

        def back(g):
            _acc(x, c * g)

        return self._node("scale", (x,), c * x.data, back)

    def concat(self, *xs):
        xs = tuple(_const(x) for x in xs)
        if not xs or any(x.data.ndim != 1 for x in xs):
            raise DimensionError("concat: inputs must be rank-1 tensors")
        bounds = np.cumsum([x.size for x in xs])[:-1]

        def back(g):
            for x, part in zip(xs, np.split(g, bounds)):
                _acc(x, part)

        return self._node("concat", xs, np.concatenate([x.data for x in xs]), back)

    def stack(self, xs):
        """Stack equal-length vectors as the rows of a matrix."""
        xs = tuple(xs)
        if not xs or any(x.data.ndim != 1 or x.shape != xs[0].shape for x in xs):
            raise DimensionError("stack: inputs must be equal-length rank-1 tensors")

        def back(g):
            for i, x in enumerate(xs):
                _acc(x, g[i])

        return self._node("stack", xs, np.stack([x.data for x in xs]), back)

    def rows(self, E, ids):
        """Gather rows ``E[ids]``; a single int index yields a vector."""
        n = E.shape[0]
        idx = np.asarray(ids, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise IndexError(f"row index out of range for table with {n} rows: {ids}")
        out = E.data[idx]

        def back(g):
            if E.requires_grad:
                full = np.zeros_like(E.data)
                np.add.at(full, idx, g)
                _acc(E, full)

        return self._node("rows", (E,), out, back)

    def mean_rows(self, X):
        """Column-wise mean of a matrix, giving a vector."""
        if X.data.ndim != 2:
            raise DimensionError(f"mean_rows: expected a matrix, got {X.shape}")
        n = X.shape[0]

        def back(g):
            _acc(X, np.broadcast_to(g / n, X.shape).copy())

        return self._node("mean_rows", (X,), X.data.mean(axis=0), back)

    def recurrent_tanh(self, h0, X, W, b):
        """Run ``d_t = tanh(W @ [d_{t-1}; X[t]] + b)`` from ``d_0 = h0``.

        Returns the stacked states ``d_1..d_L`` as an ``L x H`` matrix.  This
        is the same computation as chaining ``concat``, ``linear`` and
        ``tanh`` once per row, collapsed into a single tape node.
        """
        H = h0.shape[0]
        if (h0.data.ndim != 1 or X.data.ndim != 2 or W.shape != (H, H + X.shape[1])
                or b.shape != (H,)):
            raise DimensionError(
                f"recurrent_tanh: h0{h0.shape}, X{X.shape}, W{W.shape}, b{b.shape}")
        Wh = W.data[:, :H]
        Wx = W.data[:, H:]
        Xd = X.data
        pre = Xd @ Wx.T + b.data
        L = Xd.shape[0]
        D = np.empty((L, H))
        d = h0.data
        for t in range(L):
            d = np.tanh(Wh @ d + pre[t])
            D[t] = d

        def back(G):
            GA = np.empty_like(D)
            carry = np.zeros(H)
            for t in range(L - 1, -1, -1):
                ga = (G[t] + carry) * (1.0 - D[t] * D[t])
                GA[t] = ga
                carry = Wh.T @ ga
            _acc(h0, carry)
            if W.requires_grad:
                prev = np.vstack([h0.data[None, :], D[:-1]])
                _acc(W, np.hstack([GA.T @ prev, GA.T @ Xd]))
            _acc(X, GA @ Wx)
            _acc(b, GA.sum(axis=0))

        return self._node("recurrent_tanh", (h0, X, W, b), D, back)

    # -- reductions ------------------------------------------------------------

    def sum_sq(self, x):
        xd = x.data

        def back(g):
            _acc(x, 2.0 * g * xd)

        return self._node("sum_sq", (x,), np.array(np.dot(xd.ravel(), xd.ravel())), back)

    def l1(self, x):
        xd = x.data

        def back(g):
            # sign(0) == 0: the chosen subgradient of |.| at zero
            _acc(x, g * np.sign(xd))

        return self._node("l1", (x,), np.array(np.abs(xd).sum()), back)

    def sum(self, x):
        def back(g):
            _acc(x, np.full(x.shape, float(g)))

        return self._node("sum", (x,), np.array(x.data.sum()), back)

    def mean(self, x):
        n = x.size

        def back(g):
            _acc(x, np.full(x.shape, float(g) / n))

        return self._node("mean", (x,), np.array(x.data.mean()), back)

    def total(self, terms):
        """Sum of scalar tensors."""
        terms = tuple(terms)
        if not terms:
            raise DomainError("total: no terms")

        def back(g):
            for t in terms:
                _acc(t, g)

        return self._node("total", terms, np.array(sum(float(t.data) for t in terms)), back)

    def softmax_xent(self, logits, target):
        """Cross-entropy ``-log softmax(logits)[target]``.

        With a matrix of logits and a sequence of targets, returns the sum of
        the row-wise losses.
        """
        z = logits.data
        V = z.shape[-1]
        tgt = np.asarray(target, dtype=np.int64)
        if tgt.size and (tgt.min() < 0 or tgt.max() >= V):
            raise IndexError(f"softmax_xent: target {target} out of range for {V} classes")
        if z.ndim == 2 and tgt.shape != (z.shape[0],):
            raise DimensionError(f"softmax_xent: {tgt.size} targets for {z.shape[0]} rows")
        if z.ndim == 1 and tgt.ndim != 0:
            raise DimensionError("softmax_xent: vector logits take a single target")
        p = softmax(z)
        shifted = z - z.max(axis=-1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=-1))
        if z.ndim == 1:
            loss = lse - shifted[tgt]
        else:
            loss = (lse - shifted[np.arange(z.shape[0]), tgt]).sum()

        def back(g):
            d = p.copy()
            if z.ndim == 1:
                d[tgt] -= 1.0
            else:
                d[np.arange(z.shape[0]), tgt] -= 1.0
            _acc(logits, float(g) * d)

        return self._node("softmax_xent", (logits,), np.array(loss), back)

    # -- stop-gradient ---------------------------------------------------------

    def detach(self, x):
        """Constant copy of ``x``; replayed from ``frozen`` when given."""
        k = len(self.detached)
        if self._frozen is not None:
            data = self._frozen[k].copy()
        else:
            data = np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
        self.detached.append(data)
        return Tensor._wrap(data.copy(), False)


def softmax(z):
    """Numerically stable softmax along the last axis."""
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def backward(graph, loss):
    """Populate ``grad`` on every tensor that requires it.

    Leaf gradients accumulate: calling this twice on the same graph without
    zeroing leaves doubles every leaf gradient.
    """
    if loss.size != 1:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.shape}")
    for _, _, out, _ in graph.nodes:
        out.grad = None
    loss.grad = np.ones_like(loss.data)
    for _, _, out, back in reversed(graph.nodes):
        if out.grad is not None:
            back(out.grad)


def zero_grad(params):
    for p in params:
        p.grad = None


def grad_check(f, params, eps=1e-5):
    """Worst relative error between autodiff and central differences.

    ``f(graph)`` must deterministically build a scalar loss on ``graph``, or
    a list of scalar terms whose sum is the loss.  With a list, the central
    difference is accumulated term by term, which avoids cancelling a small
    term's change against a large unrelated one.  Values passed through
    ``graph.detach`` on the base evaluation are held fixed in the perturbed
    ones.
    """
    params = list(params)

    def values(graph):
        out = f(graph)
        if isinstance(out, Tensor):
            return [out.item()]
        return [t.item() for t in out]

    zero_grad(params)
    g = Graph()
    out = f(g)
    loss = out if isinstance(out, Tensor) else g.total(out)
    backward(g, loss)
    frozen = g.detached
    worst = 0.0
    for p in params:
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        flat = p.data.reshape(-1)
        an = analytic.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = values(Graph(frozen=frozen))
            flat[i] = orig - eps
            down = values(Graph(frozen=frozen))
            flat[i] = orig
            num = math.fsum(u - d for u, d in zip(up, down)) / (2.0 * eps)
            err = abs(an[i] - num) / max(1e-8, abs(an[i]) + abs(num))
            worst = max(worst, err)
    zero_grad(params)
    return worst
