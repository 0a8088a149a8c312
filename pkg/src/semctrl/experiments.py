"""Sensitivity sweeps (control dim, state dim, noise, data size) and the full-model gradient check."""

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import grad_check
from .corpus import DOMAINS, STYLES, Episode, Turn, generate_corpus, split
from .model import init_params, loss_components
from .objective import LossWeights, weighted_terms
from .rng import Rng
from .trainer import TrainConfig, evaluate, train

AXES = ("control_dim", "hidden_dim", "noise", "data_size")
DEFAULT_VALUES = {
    "control_dim": (2, 4, 8, 16, 32, 64),
    "hidden_dim": (8, 16, 32, 64, 128),
    "noise": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
    "data_size": (100, 300, 1000, 3000),
}
DEFAULT_SEEDS = (1, 2, 3, 4, 5)
CSV_COLUMNS = ("axis", "value", "seed", "aggregate", "bleu", "rouge_l", "meteor_s",
               "control_accuracy", "mean_drift", "final_total_loss", "wall_seconds")
METRIC_COLUMNS = CSV_COLUMNS[4:]
CSV_VERSION = 1


class UsageError(ValueError):
    """Invalid command-line or sweep arguments."""


def sweep_base_config():
    """Reduced training budget used by default for every sweep point."""
    return TrainConfig(epochs=8)


@dataclass
class SweepSpec:
    axis: str
    values: tuple = None
    seeds: tuple = DEFAULT_SEEDS
    base: TrainConfig = field(default_factory=sweep_base_config)
    n_episodes: int = 500
    corpus_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise UsageError(f"unknown sweep axis {self.axis!r}; choose from {', '.join(AXES)}")
        if self.values is None:
            self.values = DEFAULT_VALUES[self.axis]
        values = tuple(self.values)
        if not values:
            raise UsageError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise UsageError(f"sweep values must be strictly increasing: {values}")
        if self.axis == "noise":
            if any(float(v) < 0 for v in values):
                raise UsageError("noise values must be >= 0")
            values = tuple(float(v) for v in values)
        else:
            if any(float(v) != int(v) or int(v) < 1 for v in values):
                raise UsageError(f"{self.axis} values must be positive integers")
            values = tuple(int(v) for v in values)
        self.values = values
        if not self.seeds:
            raise UsageError("at least one seed is required")
        self.seeds = tuple(int(s) for s in self.seeds)


def _config_for(spec, value, seed):
    cfg = replace(spec.base, seed=seed)
    if spec.axis == "control_dim":
        cfg = replace(cfg, d_z=value)
    elif spec.axis == "hidden_dim":
        cfg = replace(cfg, d_s=value)
    return cfg


def _metrics_row(axis, value, seed, report, final_loss, seconds):
    return {"axis": axis, "value": value, "seed": seed, "aggregate": 0,
            "bleu": report.bleu, "rouge_l": report.rouge_l, "meteor_s": report.meteor_s,
            "control_accuracy": report.control_accuracy, "mean_drift": report.mean_drift,
            "final_total_loss": final_loss, "wall_seconds": seconds}


def _run_point(args):
    """One training run; for the noise axis, evaluated at every noise level."""
    spec, value, seed = args
    if spec.axis == "data_size":
        corpus = generate_corpus(value, spec.corpus_seed)
    else:
        corpus = generate_corpus(spec.n_episodes, spec.corpus_seed)
    cfg = _config_for(spec, value, seed)
    splits = split(corpus, seed=seed)
    t0 = time.perf_counter()
    params, history = train(corpus, cfg, splits=splits)
    train_seconds = time.perf_counter() - t0
    final = history[-1]["train"].total
    levels = spec.values if spec.axis == "noise" else (value,)
    rows = []
    for level in levels:
        t1 = time.perf_counter()
        sigma = level if spec.axis == "noise" else cfg.noise_sigma_eval
        report = evaluate(params, splits[2], cfg, corpus.vocab, noise_sigma=sigma, flip=False)
        seconds = train_seconds + time.perf_counter() - t1
        rows.append(_metrics_row(spec.axis, level, seed, report, final, seconds))
    return rows


def run_points(spec):
    """Every data row of the sweep, in (value, seed) order."""
    if spec.axis == "noise":
        # noise is applied at evaluation time, so one model per seed serves all levels
        jobs = [(spec, None, s) for s in spec.seeds]
    else:
        jobs = [(spec, v, s) for v in spec.values for s in spec.seeds]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    rows = [r for batch in results for r in batch]
    order = {v: i for i, v in enumerate(spec.values)}
    seed_order = {s: i for i, s in enumerate(spec.seeds)}
    rows.sort(key=lambda r: (order[r["value"]], seed_order[r["seed"]]))
    return rows


def aggregate_rows(rows, values):
    out = []
    for v in values:
        group = [r for r in rows if r["value"] == v]
        agg = {"axis": group[0]["axis"], "value": v, "seed": "", "aggregate": 1}
        for k in METRIC_COLUMNS:
            agg[k] = float(np.mean([r[k] for r in group]))
        out.append(agg)
    return out


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def format_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def run_sweep(spec, out_path=None):
    """Train and evaluate every (value, seed) point; write data rows then per-value means.

    Returns ``(data_rows, aggregate_rows)``.
    """
    data = run_points(spec)
    agg = aggregate_rows(data, spec.values)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(data + agg))
    return data, agg


def read_sweep_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


def spearman(x, y):
    """Spearman rank correlation (average ranks for ties)."""
    from scipy.stats import spearmanr

    return float(spearmanr(x, y).statistic)


# -- gradient check on the full objective ----------------------------------------

def tiny_episode(rng, vocab_size=50, n_turns=2):
    style = STYLES[rng.randbelow(2)]
    turns = []
    for _ in range(n_turns):
        user = [4 + rng.randbelow(vocab_size - 4) for _ in range(3 + rng.randbelow(4))]
        resp = [4 + rng.randbelow(vocab_size - 4) for _ in range(2 + rng.randbelow(4))] + [2]
        turns.append(Turn(user, DOMAINS[rng.randbelow(3)], resp, style))
    return Episode(0, turns)


def full_model_grad_check(seed=1, d_s=8, d_p=4, d_z=4, d_h=8, d_emb=8, vocab_size=50,
                          weights=None, eps=1e-5):
    """Max relative error of the total-loss gradient over every trainable entry."""
    rng = Rng(seed)
    dims = {"V": vocab_size, "d_emb": d_emb, "d_s": d_s, "d_p": d_p, "d_z": d_z, "d_h": d_h}
    params = init_params(dims, rng.spawn())
    for name, t in params.named():
        if t.data.ndim == 1:
            # nonzero biases so every bias gradient is exercised away from the init point
            t.data[:] = 0.1 * rng.gaussian_array(t.shape)
    episode = tiny_episode(rng, vocab_size)
    weights = weights or LossWeights()

    def f(g):
        comps, _ = loss_components(g, episode, params)
        return weighted_terms(g, comps, weights)

    return grad_check(f, params.trainable(), eps)
