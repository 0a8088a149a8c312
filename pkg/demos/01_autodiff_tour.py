"""
A tour of the autodiff tape
===========================

Every operation is a method on a Graph, which records it.  backward()
replays the tape in reverse.  grad_check() compares the result with
central differences.
"""

import numpy as np

from semctrl.autodiff import Graph, Tensor, backward, grad_check

# a tiny affine map and a quadratic loss
x = Tensor([1.0, 2.0], requires_grad=True)
W = Tensor([[3.0, 4.0], [5.0, 6.0]], requires_grad=True)
b = Tensor([1.0, 1.0], requires_grad=True)

g = Graph()
y = g.linear(x, W, b)
print("W x + b      =", y.data)          # [12. 18.]
loss = g.sum(y)
backward(g, loss)
print("d loss / dx  =", x.grad)          # W^T [1, 1] = [8. 10.]

# stop-gradient: the detached copy is a constant, so nothing flows back
x.grad = None
g = Graph()
backward(g, g.sum_sq(g.sub(x, g.detach(x))))
print("through detach:", x.grad)

# finite-difference check of a small recurrent net
rng = np.random.default_rng(0)
h0 = Tensor(rng.normal(size=4), requires_grad=True)
X = Tensor(rng.normal(size=(5, 3)))
Wr = Tensor(rng.normal(size=(4, 7)) * 0.5, requires_grad=True)
br = Tensor(np.zeros(4), requires_grad=True)


def f(graph):
    return graph.sum_sq(graph.recurrent_tanh(h0, X, Wr, br))


print("max relative error:", grad_check(f, [h0, Wr, br]))
