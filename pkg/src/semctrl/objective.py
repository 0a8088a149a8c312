"""Structural and drift penalties and the weighted total loss."""

import math
from dataclasses import asdict, dataclass, fields

from .autodiff import Tensor
from .errors import DomainError


@dataclass
class LossWeights:
    alpha: float = 0.1          # structural consistency
    beta: float = 0.01          # semantic drift
    gamma_gen: float = 1.0      # generation NLL
    lambda_attr: float = 0.1    # attribute constraint
    lambda_smooth: float = 0.1  # cross-turn smoothness

    def __post_init__(self):
        for f in fields(self):
            w = getattr(self, f.name)
            if not math.isfinite(w) or w < 0:
                raise DomainError(f"loss weight {f.name} must be finite and >= 0, got {w}")


@dataclass
class LossBreakdown:
    gen: float = 0.0
    attr: float = 0.0
    ctrl: float = 0.0
    smooth: float = 0.0
    struct_: float = 0.0
    drift: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return asdict(self)

    @classmethod
    def mean(cls, items):
        items = list(items)
        if not items:
            raise DomainError("LossBreakdown.mean: no items")
        return cls(**{f.name: sum(getattr(b, f.name) for b in items) / len(items)
                      for f in fields(cls)})


def struct_loss(g, h_seq):
    """``sum_t ||h_t - h_bar||^2`` around the episode mean, which is held constant."""
    if not h_seq:
        raise DomainError("struct_loss: empty sequence")
    # mean taken relative to the first state so identical inputs give exactly 0
    h0 = h_seq[0].data
    h_bar = g.detach(h0 + sum(h.data - h0 for h in h_seq) / len(h_seq))
    return g.total(g.sum_sq(g.sub(h, h_bar)) for h in h_seq)


def drift_loss(g, s_seq):
    """``sum_t ||s_t - s_1||_1`` against a constant copy of the first state.

    The first term is zero by construction and is not put on the tape: its
    kink sits exactly at the evaluation point.
    """
    if not s_seq:
        raise DomainError("drift_loss: empty sequence")
    s0 = g.detach(s_seq[0])
    if len(s_seq) == 1:
        return Tensor(0.0)
    return g.total(g.l1(g.sub(s, s0)) for s in s_seq[1:])


def weighted_terms(g, components, weights):
    """The nonzero-weight terms ``w_k * L_k`` in a fixed order."""
    pairs = [
        (weights.alpha, components["struct_"]),
        (weights.beta, components["drift"]),
        (weights.gamma_gen, components["gen"]),
        (weights.lambda_attr, components["attr"]),
        (weights.lambda_smooth, components["smooth"]),
    ]
    return [g.scale(t, w) for w, t in pairs if w != 0]


def total_loss(g, components, weights):
    """Weighted sum of the five loss terms.

    ``components`` maps ``gen``, ``attr``, ``smooth``, ``struct_`` and
    ``drift`` to scalar tensors.  Zero-weight terms are left out of the graph
    entirely, so ablating a term leaves the remaining gradient bit-identical.
    """
    terms = weighted_terms(g, components, weights)
    total = g.total(terms) if terms else Tensor(0.0)
    v = {k: float(t.data) for k, t in components.items()}
    breakdown = LossBreakdown(
        gen=v["gen"],
        attr=v["attr"],
        ctrl=weights.lambda_attr * v["attr"],
        smooth=v["smooth"],
        struct_=v["struct_"],
        drift=v["drift"],
        total=float(total.data),
    )
    return total, breakdown
