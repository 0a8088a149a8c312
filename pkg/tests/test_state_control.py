import numpy as np
import pytest

from semctrl.autodiff import Graph, Tensor, backward, grad_check
from semctrl.control import (N_ATTR, attribute_loss, attribute_target, condition, control_vector,
                             ctrl_loss, flip_style, orthonormal_rows)
from semctrl.errors import DomainError
from semctrl.rng import Rng
from semctrl.semantic_state import (aggregate, domain_onehot, encode_state, project,
                                    smoothness_loss, update_memory)


def zeroed(params):
    p = params.copy()
    for _, t in p.named():
        t.data[:] = 0.0
    return p


def test_encode_zero_weights(params):
    p = zeroed(params)
    s = encode_state(Graph(), [4, 5], "hotel", Tensor(np.zeros(6)), p)
    np.testing.assert_array_equal(s.data, np.zeros(6))


def test_encode_first_turn_ignores_history(params):
    a = encode_state(Graph(), [4, 7, 9], "taxi", Tensor(np.zeros(6)), params)
    b = encode_state(Graph(), [4, 7, 9], "taxi", Tensor(np.zeros(6)), params)
    np.testing.assert_array_equal(a.data, b.data)
    c = encode_state(Graph(), [4, 7, 9], "taxi", Tensor(np.ones(6)), params)
    assert not np.array_equal(a.data, c.data)


def test_encode_errors(params):
    with pytest.raises(DomainError):
        encode_state(Graph(), [], "hotel", Tensor(np.zeros(6)), params)
    with pytest.raises(IndexError):
        domain_onehot("spaceport")


def test_encode_grad_wx(params):
    h_prev = Tensor(np.full(6, 0.2))

    def f(g):
        return g.sum(encode_state(g, [4, 5, 11], "restaurant", h_prev, params))

    assert grad_check(f, [params.W_x]) < 1e-6


def test_memory_mu_zero():
    s = np.array([0.3, -0.7])
    np.testing.assert_array_equal(update_memory(np.ones(2), s, 0.0).data, s)


def test_memory_geometric_convergence():
    s = np.array([1.0, -2.0, 0.5])
    mu = 0.6
    m = np.zeros(3)  # m_1
    for t in range(2, 9):
        m = update_memory(m, s, mu).data
        assert np.linalg.norm(m - s) == pytest.approx(mu ** (t - 1) * np.linalg.norm(s), rel=1e-12)


def test_memory_bad_mu():
    with pytest.raises(DomainError):
        update_memory(np.zeros(2), np.zeros(2), 1.0)


def test_memory_is_constant():
    s = Tensor(np.ones(2), requires_grad=True)
    m = update_memory(np.zeros(2), s, 0.5, Graph())
    assert not m.requires_grad


def test_aggregate_zero_and_positional(params):
    rng = np.random.default_rng(0)
    s, a, b = (Tensor(rng.normal(size=6)) for _ in range(3))
    np.testing.assert_array_equal(aggregate(Graph(), s, a, b, zeroed(params)).data, np.zeros(6))
    x = aggregate(Graph(), s, a, b, params).data
    y = aggregate(Graph(), s, b, a, params).data
    assert not np.allclose(x, y)


def test_aggregate_grad_wf(params):
    rng = np.random.default_rng(1)
    s, a, b = (Tensor(rng.normal(size=6)) for _ in range(3))
    assert grad_check(lambda g: g.sum_sq(aggregate(g, s, a, b, params)), [params.W_f, params.b_f]) < 1e-6


def test_project_range_and_half(params):
    p = params.copy()
    p.b_u.data[:] = 0.0
    u, v = project(Graph(), Tensor(np.zeros(6)), p)
    np.testing.assert_array_equal(v.data, np.full(3, 0.5))
    # s_hat is a tanh output, so its entries lie in [-1, 1]
    for s_hat in (np.ones(6), -np.ones(6), np.linspace(-1, 1, 6)):
        _, v = project(Graph(), Tensor(s_hat), params)
        assert np.all((v.data > 0) & (v.data < 1))


def test_project_grad(params):
    s_hat = Tensor(np.linspace(-0.5, 0.5, 6))
    assert grad_check(lambda g: g.sum_sq(project(g, s_hat, params)[1]), [params.W_u, params.b_u]) < 1e-6


def test_smoothness_values():
    g = Graph()
    v = [Tensor([0.0, 0.0]), Tensor([1.0, 1.0]), Tensor([1.0, 1.0])]
    assert smoothness_loss(g, v).item() == 2.0
    assert smoothness_loss(g, [Tensor([0.3, 0.4])] * 4).item() == 0.0
    assert smoothness_loss(g, [Tensor([0.3, 0.4])]).item() == 0.0


def test_smoothness_reversal_invariant():
    rng = np.random.default_rng(3)
    v = [Tensor(rng.random(4)) for _ in range(5)]
    a = smoothness_loss(Graph(), v).item()
    b = smoothness_loss(Graph(), v[::-1]).item()
    assert a == pytest.approx(b, abs=1e-12)


def test_control_vector_zero_and_bounds(params):
    p = params.copy()
    p.b_z.data[:] = 0.0
    np.testing.assert_array_equal(control_vector(Graph(), Tensor(np.zeros(6)), p).data, np.zeros(3))
    z = control_vector(Graph(), Tensor(np.full(6, 3.0)), params).data
    assert np.all(np.abs(z) <= 1.0)


def test_control_vector_grad(params):
    s = Tensor(np.linspace(-1, 1, 6))
    assert grad_check(lambda g: g.sum_sq(control_vector(g, s, params)), [params.W_z]) < 1e-6


def test_attribute_loss_values():
    A = np.array([[1.0, 0.0]])
    g = Graph()
    assert attribute_loss(g, [Tensor([3.0, 5.0])], [np.array([1.0])], A).item() == 4.0
    assert attribute_loss(g, [Tensor([1.0, 9.0])], [np.array([1.0])], A).item() == 0.0


def test_attribute_loss_quadratic_homogeneity():
    rng = np.random.default_rng(4)
    A = orthonormal_rows(N_ATTR, 8, Rng(1))
    hs = [rng.normal(size=8) for _ in range(3)]
    rs = [rng.normal(size=N_ATTR) for _ in range(3)]
    base = attribute_loss(Graph(), [Tensor(h) for h in hs], rs, A).item()
    # doubling every residual A h - r: keep h, move r to A h - 2(A h - r)
    rs2 = [A @ h - 2 * (A @ h - r) for h, r in zip(hs, rs)]
    doubled = attribute_loss(Graph(), [Tensor(h) for h in hs], rs2, A).item()
    assert doubled == pytest.approx(4 * base, rel=1e-12)


def test_attribute_loss_errors():
    with pytest.raises(DomainError):
        attribute_loss(Graph(), [Tensor([1.0])], [], np.eye(1))


def test_ctrl_loss():
    g = Graph()
    attr = Tensor(4.0)
    assert ctrl_loss(g, attr, 0.0).item() == 0.0
    assert ctrl_loss(g, attr, 1.0).item() == 4.0
    assert ctrl_loss(g, attr, 0.5).item() == 2.0


def test_orthonormal_rows():
    A = orthonormal_rows(5, 12, Rng(7))
    np.testing.assert_allclose(A @ A.T, np.eye(5), atol=1e-12)
    with pytest.raises(DomainError):
        orthonormal_rows(5, 3, Rng(0))


def test_targets_and_flip():
    r = attribute_target("casual", "taxi")
    np.testing.assert_array_equal(r, [0, 1, 0, 0, 1])
    np.testing.assert_array_equal(flip_style(r), [1, 0, 0, 0, 1])


def test_condition_sets_attribute_projection():
    A = orthonormal_rows(N_ATTR, 10, Rng(2))
    h = Tensor(np.random.default_rng(5).normal(size=10))
    r = attribute_target("formal", "hotel")
    out = condition(Graph(), h, r, A).data
    np.testing.assert_allclose(A @ out, r, atol=1e-12)
    # the orthogonal complement of h is untouched
    P = np.eye(10) - A.T @ A
    np.testing.assert_allclose(P @ out, P @ h.data, atol=1e-12)


def test_attribute_loss_gradient():
    A = orthonormal_rows(N_ATTR, 6, Rng(3))
    h = Tensor(np.linspace(-1, 1, 6), requires_grad=True)
    r = attribute_target("formal", "taxi")
    g = Graph()
    backward(g, attribute_loss(g, [h], [r], A))
    np.testing.assert_allclose(h.grad, 2 * A.T @ (A @ h.data - r), atol=1e-12)
