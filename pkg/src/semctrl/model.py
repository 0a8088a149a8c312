"""Parameter container and the per-episode forward pass."""

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .control import N_ATTR, attribute_loss, attribute_target, condition, control_vector, orthonormal_rows
from .corpus import DOMAINS
from .errors import DomainError
from .generator import fuse, sequence_nll
from .objective import drift_loss, struct_loss, total_loss
from .semantic_state import TurnTrace, aggregate, encode_state, project, smoothness_loss, update_memory

# Trainable tensors in canonical order: name -> (rows, cols) as functions of the dims.
PARAM_SHAPES = {
    "E": lambda d: (d["V"], d["d_emb"]),
    "W_x": lambda d: (d["d_s"], d["d_emb"]),
    "W_c": lambda d: (d["d_s"], len(DOMAINS)),
    "W_h": lambda d: (d["d_s"], d["d_h"]),
    "b_s": lambda d: (d["d_s"],),
    "W_f": lambda d: (d["d_s"], 3 * d["d_s"]),
    "b_f": lambda d: (d["d_s"],),
    "W_u": lambda d: (d["d_p"], d["d_s"]),
    "b_u": lambda d: (d["d_p"],),
    "W_z": lambda d: (d["d_z"], d["d_s"]),
    "b_z": lambda d: (d["d_z"],),
    "W_phi": lambda d: (d["d_h"], d["d_s"] + d["d_z"]),
    "b_phi": lambda d: (d["d_h"],),
    "W_r": lambda d: (d["d_h"], d["d_h"] + d["d_emb"]),
    "b_r": lambda d: (d["d_h"],),
    "W_o": lambda d: (d["V"], d["d_h"]),
    "b_o": lambda d: (d["V"],),
}
DIM_NAMES = ("V", "d_emb", "d_s", "d_p", "d_z", "d_h")


@dataclass
class ModelParams:
    """All trainable tensors plus the frozen attribute matrix ``A``."""

    tensors: dict
    A: np.ndarray
    dims: dict
    mu: float = 0.5

    def __getattr__(self, name):
        try:
            return self.__dict__["tensors"][name]
        except KeyError:
            raise AttributeError(name) from None

    def trainable(self):
        return [self.tensors[k] for k in PARAM_SHAPES]

    def named(self):
        return [(k, self.tensors[k]) for k in PARAM_SHAPES]

    def zero_grad(self):
        for t in self.tensors.values():
            t.grad = None

    def copy(self):
        return ModelParams({k: Tensor(t.data.copy(), requires_grad=True, name=k)
                            for k, t in self.tensors.items()},
                           self.A.copy(), dict(self.dims), self.mu)


def init_params(dims, rng, mu=0.5):
    """Gaussian weights with std ``1/sqrt(fan_in)``, zero biases, orthonormal frozen ``A``.

    ``dims`` maps each of V, d_emb, d_s, d_p, d_z, d_h to a positive int.
    Embedding rows use ``fan_in = d_emb``.
    """
    for k in DIM_NAMES:
        if int(dims[k]) < 1:
            raise DomainError(f"dimension {k} must be >= 1, got {dims[k]}")
    if dims["d_h"] < N_ATTR:
        raise DomainError(f"d_h must be >= {N_ATTR} to host the attribute map")
    dims = {k: int(dims[k]) for k in DIM_NAMES}
    tensors = {}
    for name, shape_fn in PARAM_SHAPES.items():
        shape = shape_fn(dims)
        if len(shape) == 1:
            data = np.zeros(shape)
        else:
            fan_in = dims["d_emb"] if name == "E" else shape[1]
            data = rng.gaussian_array(shape) / np.sqrt(fan_in)
        tensors[name] = Tensor(data, requires_grad=True, name=name)
    A = orthonormal_rows(N_ATTR, dims["d_h"], rng)
    return ModelParams(tensors, A, dims, mu)


def forward_episode(g, episode, params, rng=None, noise_sigma=0.0, targets=None,
                    conditioning=True):
    """Run the semantic-state / control / fusion pipeline over every turn.

    ``targets`` overrides the per-turn attribute targets used to seed the
    decoder (defaults to the turns' own style and domain).
    """
    d_s, d_h = params.dims["d_s"], params.dims["d_h"]
    h_prev = Tensor(np.zeros(d_h))
    s_lag = Tensor(np.zeros(d_s))
    m = update_memory(np.zeros(d_s), np.zeros(d_s), 0.0, g)
    traces = []
    for t, turn in enumerate(episode.turns):
        if t > 0:
            m = update_memory(m, traces[-1].s, params.mu, g)
        s = encode_state(g, turn.user_tokens, turn.condition, h_prev, params, rng, noise_sigma)
        s_hat = aggregate(g, s, s_lag, m, params)
        u, v = project(g, s_hat, params)
        z = control_vector(g, s, params)
        h = fuse(g, s, z, params)
        r = targets[t] if targets is not None else attribute_target(turn.style, turn.condition)
        h_dec = condition(g, h, r, params.A) if conditioning else h
        traces.append(TurnTrace(s=s, s_hat=s_hat, u=u, v=v, m=m, z=z, h=h, h_dec=h_dec))
        h_prev, s_lag = h, s
    return traces


def loss_components(g, episode, params, rng=None, noise_sigma=0.0, conditioning=True):
    """Forward one episode; return the unweighted loss terms and the traces."""
    traces = forward_episode(g, episode, params, rng, noise_sigma, conditioning=conditioning)
    targets = [attribute_target(t.style, t.condition) for t in episode.turns]
    h_seq = [tr.h for tr in traces]
    components = {
        "gen": sequence_nll(g, episode, traces, params),
        "attr": attribute_loss(g, h_seq, targets, params.A),
        "smooth": smoothness_loss(g, [tr.v for tr in traces]),
        "struct_": struct_loss(g, h_seq),
        "drift": drift_loss(g, [tr.s for tr in traces]),
    }
    return components, traces


def episode_loss(g, episode, params, weights, rng=None, noise_sigma=0.0, conditioning=True):
    """Forward one episode and return ``(total, breakdown, traces)``."""
    components, traces = loss_components(g, episode, params, rng, noise_sigma, conditioning)
    total, breakdown = total_loss(g, components, weights)
    return total, breakdown, traces
