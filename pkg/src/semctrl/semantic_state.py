"""Per-turn semantic state: encoding, memory, aggregation, projection, smoothness."""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .corpus import DOMAINS, noise_like
from .errors import DimensionError, DomainError


@dataclass
class TurnTrace:
    """Intermediate values of one turn's forward pass."""

    s: Tensor       # semantic state
    s_hat: Tensor   # aggregated state
    u: Tensor       # projection
    v: Tensor       # sigmoid(u)
    m: Tensor       # memory (constant)
    z: Tensor = None       # control vector
    h: Tensor = None       # fused representation
    h_dec: Tensor = None   # decoder seed (h with attribute coordinates set to r)


def domain_onehot(domain):
    if domain not in DOMAINS:
        raise IndexError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    x = np.zeros(len(DOMAINS))
    x[DOMAINS.index(domain)] = 1.0
    return x


def encode_state(g, x_ids, domain, h_prev, params, rng=None, noise_sigma=0.0):
    """``s = tanh(W_x e + W_c onehot(c) + W_h h_prev + b_s)``.

    ``e`` is the mean token embedding of ``x_ids``; with ``noise_sigma > 0``
    each token embedding is perturbed by Gaussian noise from ``rng`` first.
    """
    if len(x_ids) == 0:
        raise DomainError("encode_state: empty user utterance")
    onehot = domain_onehot(domain)
    X = g.rows(params.E, list(x_ids))
    if noise_sigma > 0:
        X = g.add(X, Tensor(noise_like(X.shape, noise_sigma, rng)))
    e = g.mean_rows(X)
    pre = g.linear(e, params.W_x, params.b_s)
    pre = g.add(pre, g.linear(onehot, params.W_c))
    pre = g.add(pre, g.linear(h_prev, params.W_h))
    return g.tanh(pre)


def update_memory(m_prev, s_prev, mu, g=None):
    """Exponential moving average ``mu * m_prev + (1 - mu) * s_prev``.

    The result is a constant: no gradient flows into past states.
    """
    if not 0.0 <= mu < 1.0:
        raise DomainError(f"memory decay must lie in [0, 1), got {mu}")
    m = np.asarray(getattr(m_prev, "data", m_prev), dtype=np.float64)
    s = np.asarray(getattr(s_prev, "data", s_prev), dtype=np.float64)
    if m.shape != s.shape:
        raise DimensionError(f"update_memory: {m.shape} vs {s.shape}")
    out = mu * m + (1.0 - mu) * s
    return g.detach(out) if g is not None else Tensor(out)


def aggregate(g, s, s_lag, m, params):
    """``s_hat = tanh(W_f [s; s_lag; m] + b_f)``."""
    if not (s.shape == s_lag.shape == m.shape):
        raise DimensionError(f"aggregate: {s.shape}, {s_lag.shape}, {m.shape}")
    return g.tanh(g.linear(g.concat(s, s_lag, m), params.W_f, params.b_f))


def project(g, s_hat, params):
    u = g.linear(s_hat, params.W_u, params.b_u)
    return u, g.sigmoid(u)


def smoothness_loss(g, v_seq):
    """Sum over consecutive turns of ``||v_t - v_{t-1}||^2``."""
    if not v_seq:
        raise DomainError("smoothness_loss: empty sequence")
    if len(v_seq) == 1:
        return Tensor(0.0)
    return g.total(g.sum_sq(g.sub(b, a)) for a, b in zip(v_seq, v_seq[1:]))
