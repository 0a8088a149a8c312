"""Fusion of state and control, recurrent token decoder, likelihood and generation."""

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Graph, Tensor, softmax
from .control import condition
from .corpus import BOS, EOS
from .errors import DomainError


@dataclass
class DecodeResult:
    tokens: list
    log_prob: float
    h_t: Tensor


def fuse(g, s, z, params):
    """``h = tanh(W_phi [s; z] + b_phi)``."""
    return g.tanh(g.linear(g.concat(s, z), params.W_phi, params.b_phi))


def decode_step(g, d_prev, y_prev, params):
    """One decoder step; returns ``(logits, d_next)``."""
    V = params.E.shape[0]
    if not 0 <= y_prev < V:
        raise IndexError(f"decode_step: token {y_prev} out of range for vocabulary of {V}")
    x = g.rows(params.E, int(y_prev))
    d_next = g.tanh(g.linear(g.concat(d_prev, x), params.W_r, params.b_r))
    return g.linear(d_next, params.W_o, params.b_o), d_next


def response_nll(g, h0, tokens, params):
    """Teacher-forced NLL of one response given the decoder seed ``h0``."""
    if len(tokens) == 0:
        raise DomainError("response_nll: empty response")
    inputs = [BOS] + list(tokens[:-1])
    X = g.rows(params.E, inputs)
    D = g.recurrent_tanh(h0, X, params.W_r, params.b_r)
    return g.softmax_xent(g.linear(D, params.W_o, params.b_o), list(tokens))


def response_nll_stepwise(g, h0, tokens, params):
    """Same quantity as :func:`response_nll`, built from :func:`decode_step`."""
    if len(tokens) == 0:
        raise DomainError("response_nll: empty response")
    d, prev, terms = h0, BOS, []
    for y in tokens:
        logits, d = decode_step(g, d, prev, params)
        terms.append(g.softmax_xent(logits, y))
        prev = y
    return g.total(terms)


def sequence_nll(g, episode, traces, params):
    """Sum over turns and response tokens of the teacher-forced cross-entropy."""
    return g.total(response_nll(g, tr.h_dec, turn.response_tokens, params)
                   for turn, tr in zip(episode.turns, traces))


def generate(s, z, params, max_len=20, mode="greedy", temperature=1.0, rng=None, r=None):
    """Decode one response from state ``s`` and control ``z``.

    ``r``, when given, is the attribute target written into the decoder
    seed.  Greedy decoding breaks ties toward the lowest token id; sampling
    draws from ``softmax(logits / temperature)`` using ``rng``.
    """
    if max_len < 1:
        raise DomainError("max_len must be >= 1")
    if mode not in ("greedy", "sample"):
        raise DomainError(f"unknown decoding mode {mode!r}")
    if mode == "sample" and temperature <= 0:
        raise DomainError("temperature must be > 0")
    if mode == "sample" and rng is None:
        raise DomainError("sampling requires an rng")
    g = Graph()
    h = fuse(g, s, z, params)
    d = condition(g, h, r, params.A) if r is not None else h
    tokens, log_prob, prev = [], 0.0, BOS
    for _ in range(max_len):
        logits, d = decode_step(g, d, prev, params)
        if mode == "greedy":
            y = int(np.argmax(logits.data))  # argmax returns the first maximum
            log_prob += float(np.log(softmax(logits.data)[y]))
        else:
            p = softmax(logits.data / temperature)
            y = rng.categorical(p)
            log_prob += math.log(max(p[y], 1e-300))
        tokens.append(y)
        prev = y
        if y == EOS:
            break
    return DecodeResult(tokens, log_prob, h)
