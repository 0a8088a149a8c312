"""Control vectors, attribute targets and the attribute-constraint loss."""

import numpy as np

from .autodiff import Tensor
from .corpus import DOMAINS, STYLES
from .errors import DomainError

N_ATTR = len(STYLES) + len(DOMAINS)


def control_vector(g, s, params):
    """``z = tanh(W_z s + b_z)``."""
    return g.tanh(g.linear(s, params.W_z, params.b_z))


def attribute_target(style, domain):
    """Style one-hot followed by domain one-hot (length 5)."""
    r = np.zeros(N_ATTR)
    r[STYLES.index(style)] = 1.0
    r[len(STYLES) + DOMAINS.index(domain)] = 1.0
    return r


def flip_style(r):
    """Swap the two style coordinates of a target."""
    out = np.array(r, dtype=np.float64)
    out[0], out[1] = out[1], out[0]
    return out


def orthonormal_rows(n_rows, n_cols, rng):
    """Gram-Schmidt on Gaussian rows drawn from ``rng``."""
    if n_rows > n_cols:
        raise DomainError(f"cannot build {n_rows} orthonormal rows in dimension {n_cols}")
    rows = []
    while len(rows) < n_rows:
        v = rng.gaussian_array(n_cols)
        for q in rows:
            v = v - (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            rows.append(v / norm)
    return np.array(rows)


def attribute_loss(g, h_seq, r_seq, A):
    """``sum_t ||A h_t - r_t||^2`` with ``A`` held fixed."""
    if len(h_seq) != len(r_seq):
        raise DomainError(f"attribute_loss: {len(h_seq)} states vs {len(r_seq)} targets")
    if not h_seq:
        raise DomainError("attribute_loss: empty sequence")
    A = Tensor(A)
    return g.total(g.sum_sq(g.sub(g.linear(h, A), r)) for h, r in zip(h_seq, r_seq))


def ctrl_loss(g, attr, lambda_attr):
    if lambda_attr < 0:
        raise DomainError(f"lambda_attr must be >= 0, got {lambda_attr}")
    return g.scale(attr, lambda_attr)


def condition(g, h, r, A):
    """Replace the attribute coordinates of ``h`` by ``r``.

    Returns ``h + A^T (r - A h)``, the closest vector to ``h`` whose attribute
    projection equals ``r`` exactly (``A`` has orthonormal rows).
    """
    P = np.eye(A.shape[1]) - A.T @ A
    return g.add(g.linear(h, P), A.T @ np.asarray(r, dtype=np.float64))
