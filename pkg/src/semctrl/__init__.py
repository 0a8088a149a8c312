"""Semantic-state modelling with controllable dialogue generation, in plain numpy."""

from .autodiff import Graph, Tensor, backward, grad_check
from .corpus import Corpus, Episode, Turn, Vocab, generate_corpus, load_multiwoz_json, split
from .errors import ContractError, DimensionError, DivergenceError, DomainError, ParseError
from .metrics import MetricsReport, bleu, meteor_simplified, rouge_l
from .objective import LossBreakdown, LossWeights
from .rng import Rng
from .trainer import TrainConfig, evaluate, load_checkpoint, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "ContractError", "Corpus", "DimensionError", "DivergenceError", "DomainError", "Episode",
    "Graph", "LossBreakdown", "LossWeights", "MetricsReport", "ParseError", "Rng", "Tensor",
    "TrainConfig", "Turn", "Vocab", "backward", "bleu", "evaluate", "generate_corpus",
    "grad_check", "load_checkpoint", "load_multiwoz_json", "meteor_simplified", "rouge_l",
    "save_checkpoint", "split", "train",
]
