"""Training configuration, Adam, the training loop, evaluation and checkpoints."""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import metrics
from .autodiff import Graph, Tensor, backward
from .control import attribute_target, flip_style
from .corpus import EOS, RESERVED, Vocab, split
from .errors import DivergenceError, DomainError
from .generator import generate
from .model import DIM_NAMES, ModelParams, episode_loss, forward_episode, init_params
from .objective import LossBreakdown, LossWeights
from .rng import Rng

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6


@dataclass
class TrainConfig:
    d_emb: int = 16
    d_s: int = 32
    d_p: int = 16
    d_z: int = 8
    d_h: int = 32
    epochs: int = 20
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 42
    weights: LossWeights = field(default_factory=LossWeights)
    noise_sigma_eval: float = 0.0
    noise_sigma_train: float = 0.0
    grad_clip: float = 5.0
    mu: float = 0.5
    max_len: int = 20
    conditioning: bool = True

    def __post_init__(self):
        if isinstance(self.weights, dict):
            self.weights = LossWeights(**self.weights)
        for k in ("d_emb", "d_s", "d_p", "d_z", "d_h", "epochs", "max_len"):
            if int(getattr(self, k)) < 1:
                raise DomainError(f"{k} must be >= 1")
        if not self.learning_rate > 0:
            raise DomainError("learning_rate must be > 0")
        if self.noise_sigma_eval < 0 or self.noise_sigma_train < 0:
            raise DomainError("noise sigma must be >= 0")

    def dims(self, vocab_size):
        return {"V": vocab_size, "d_emb": self.d_emb, "d_s": self.d_s, "d_p": self.d_p,
                "d_z": self.d_z, "d_h": self.d_h}

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


class OptimizerState:
    """Adam first/second moments per parameter and the step counter."""

    def __init__(self, params):
        self.m = {k: np.zeros_like(t.data) for k, t in params.named()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.named()}
        self.step = 0


def clip_gradients(grads, max_norm):
    """Scale ``grads`` (name -> array) in place so their global L2 norm is at most ``max_norm``."""
    norm = math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


def adam_step(params, state, config):
    """Clip, then apply one bias-corrected Adam update to every trainable tensor.

    ``A`` is not a trainable tensor and is never touched.
    """
    grads = {}
    for name, t in params.named():
        g = np.zeros_like(t.data) if t.grad is None else t.grad
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient in parameter {name}")
        grads[name] = g
    clip_gradients(grads, config.grad_clip)
    state.step += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, t in params.named():
        g = grads[name]
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        t.data -= config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.adam_eps)
    return params, state


def _episode_rng(seed, epoch, index):
    return Rng((seed * 1_000_003 + epoch * 10_007 + index) & ((1 << 64) - 1))


def loss_on(episodes, params, config, noise_sigma=0.0):
    """Mean loss breakdown over ``episodes`` without updating anything."""
    out = []
    for i, ep in enumerate(episodes):
        g = Graph()
        _, br, _ = episode_loss(g, ep, params, config.weights, _episode_rng(config.seed, -1, i),
                                noise_sigma, config.conditioning)
        out.append(br)
    return LossBreakdown.mean(out)


def train(corpus, config, params=None, splits=None, callback=None):
    """Fit the model on the train split of ``corpus``.

    Returns ``(params, history)``; ``history`` holds one dict per epoch with
    ``train`` (mean over the epoch's updates) and ``dev`` breakdowns.
    """
    train_eps, dev_eps, _ = splits if splits is not None else split(corpus, seed=config.seed)
    if not train_eps:
        raise DomainError("train: empty training split")
    rng = Rng(config.seed)
    if params is None:
        params = init_params(config.dims(len(corpus.vocab)), rng.spawn(), config.mu)
    state = OptimizerState(params)
    order_rng = rng.spawn()
    history = []
    for epoch in range(config.epochs):
        order = list(range(len(train_eps)))
        order_rng.shuffle(order)
        seen = []
        for i in order:
            g = Graph()
            params.zero_grad()
            total, br, _ = episode_loss(g, train_eps[i], params, config.weights,
                                        _episode_rng(config.seed, epoch, i),
                                        config.noise_sigma_train, config.conditioning)
            if not math.isfinite(br.total) or br.total > DIVERGENCE_LIMIT:
                raise DivergenceError(f"loss diverged at epoch {epoch + 1}: {br.total}", br)
            if total.requires_grad:
                backward(g, total)
            adam_step(params, state, config)
            seen.append(br)
        record = {"epoch": epoch + 1, "train": LossBreakdown.mean(seen),
                  "dev": loss_on(dev_eps, params, config) if dev_eps else None}
        history.append(record)
        log.info("epoch %d train total %.4f", epoch + 1, record["train"].total)
        if callback is not None:
            callback(record)
    params.zero_grad()
    return params, history


def decode_split(episodes, params, config, noise_sigma=None, flip=False):
    """Greedy outputs for every turn; returns a list of per-turn dicts."""
    sigma = config.noise_sigma_eval if noise_sigma is None else noise_sigma
    rng = Rng(config.seed ^ 0x5EED)
    rows = []
    for ep in episodes:
        g = Graph()
        traces = forward_episode(g, ep, params, rng, sigma, conditioning=config.conditioning)
        s0 = traces[0].s.data
        drift = sum(float(np.abs(tr.s.data - s0).sum()) for tr in traces) / len(traces)
        for turn, tr in zip(ep.turns, traces):
            r = attribute_target(turn.style, turn.condition)
            row = {"episode_id": ep.episode_id, "turn": turn, "drift": drift}
            cond = r if config.conditioning else None
            row["output"] = _strip(generate(tr.s, tr.z, params, config.max_len, r=cond).tokens)
            if flip:
                rf = flip_style(r) if config.conditioning else None
                row["flipped"] = _strip(generate(tr.s, tr.z, params, config.max_len, r=rf).tokens)
            rows.append(row)
    return rows


def _strip(tokens):
    return tokens[:tokens.index(EOS)] if EOS in tokens else list(tokens)


def evaluate(params, episodes, config, vocab, noise_sigma=None, flip=True):
    """Greedy-decode every turn and score against the references."""
    if not episodes:
        raise DomainError("evaluate: empty split")
    rows = decode_split(episodes, params, config, noise_sigma, flip)
    hyps = [r["output"] for r in rows]
    refs = [_strip(r["turn"].response_tokens) for r in rows]
    styles = [r["turn"].style for r in rows]
    words = [vocab.decode(h) for h in hyps]
    per_episode = {}
    for r in rows:
        per_episode[r["episode_id"]] = r["drift"]
    report = metrics.MetricsReport(
        bleu=metrics.bleu(hyps, refs),
        rouge_l=metrics.rouge_l_corpus(hyps, refs),
        meteor_s=metrics.meteor_corpus(hyps, refs),
        control_accuracy=metrics.control_accuracy(words, styles),
        mean_drift=sum(per_episode.values()) / len(per_episode),
        n_turns=len(rows),
    )
    if flip:
        other = {"formal": "casual", "casual": "formal"}
        flipped = [vocab.decode(r["flipped"]) for r in rows]
        report.flip_rate = metrics.control_accuracy(flipped, [other[s] for s in styles])
    return report


# -- checkpoints -----------------------------------------------------------------

CHECKPOINT_FORMAT = "semctrl-checkpoint-v1"


def save_checkpoint(params, config, path, vocab=None):
    """JSON: format tag, dimensions header, name -> {shape, data} map, config echo, vocab.

    Floats are written with ``repr`` precision, so loading restores them exactly.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "dims": params.dims,
        "mu": params.mu,
        "params": {k: {"shape": list(t.shape), "data": t.data.ravel().tolist()}
                   for k, t in params.named()},
        "A": {"shape": list(params.A.shape), "data": params.A.ravel().tolist()},
        "config": config.to_dict() if config is not None else None,
        "vocab": list(vocab.itos) if vocab is not None else None,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns ``(params, config, vocab)``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DomainError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    tensors = {k: Tensor(np.array(v["data"], dtype=np.float64).reshape(v["shape"]),
                         requires_grad=True, name=k)
               for k, v in doc["params"].items()}
    A = np.array(doc["A"]["data"], dtype=np.float64).reshape(doc["A"]["shape"])
    dims = {k: int(doc["dims"][k]) for k in DIM_NAMES}
    config = TrainConfig.from_dict(doc["config"]) if doc.get("config") else None
    vocab = Vocab(doc["vocab"][len(RESERVED):]) if doc.get("vocab") else None
    return ModelParams(tensors, A, dims, float(doc["mu"])), config, vocab
