"""Synthetic multi-domain dialogue corpus, vocabulary and JSON-lines I/O.

The generator produces MultiWOZ-shaped episodes over three domains (hotel,
restaurant, taxi) with a per-episode response style.  User utterances carry
no style information; every response carries at least one marker of its
episode's style and none of the other, so style can be read back off any
output by marker counting.
"""

import difflib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .errors import DomainError, ParseError
from .rng import Rng

log = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")

DOMAINS = ("hotel", "restaurant", "taxi")
STYLES = ("formal", "casual")
FORMAL_MARKERS = frozenset({"certainly", "however", "recommend", "assist"})
CASUAL_MARKERS = frozenset({"yeah", "gonna", "cool", "no_problem"})
MARKERS = {"formal": FORMAL_MARKERS, "casual": CASUAL_MARKERS}

PRICES = ("cheap", "moderate", "expensive")
AREAS = ("north", "south", "centre")
FOODS = ("italian", "chinese", "indian", "french")
TIMES = ("7am", "9am", "noon", "3pm", "6pm", "8pm")
PARTY = ("1", "2", "3", "4", "5", "6")
LANDMARKS = ("the station", "the airport")

HOTEL_NAMES = {
    ("cheap", "north"): "acorn lodge", ("cheap", "south"): "bridge inn",
    ("cheap", "centre"): "city rooms", ("moderate", "north"): "hamilton house",
    ("moderate", "south"): "oak grange", ("moderate", "centre"): "the regent",
    ("expensive", "north"): "the lensfield", ("expensive", "south"): "riverside manor",
    ("expensive", "centre"): "the grand",
}
RESTAURANT_NAMES = {
    ("italian", "north"): "da vinci", ("italian", "south"): "pizza hut",
    ("italian", "centre"): "la margherita", ("chinese", "north"): "golden wok",
    ("chinese", "south"): "lucky star", ("chinese", "centre"): "jade garden",
    ("indian", "north"): "curry king", ("indian", "south"): "taj tandoori",
    ("indian", "centre"): "saffron", ("french", "north"): "le bistro",
    ("french", "south"): "chez nous", ("french", "centre"): "cote brasserie",
}
CARS = dict(zip(TIMES, ("red toyota", "white ford", "black audi", "blue honda",
                        "grey skoda", "silver volvo")))
PHONE_DIGITS = ("01223", "01224", "01225", "01226")

USER_TEMPLATES = {
    "hotel": (
        "i need a {price} hotel in the {area}",
        "i am looking for a {price} place to stay in the {area} of town",
        "please find me a hotel in the {area} , something {price}",
    ),
    "restaurant": (
        "i want {food} food in the {area}",
        "find me a {food} restaurant in the {area} please",
        "is there a {food} place to eat in the {area} of town",
    ),
    "taxi": (
        "i need a taxi to {dest} at {time}",
        "can you book a taxi for {time} going to {dest}",
    ),
    "book": (
        "book it for {n} people please",
        "please reserve it for {n} people",
    ),
    "info": (
        "what is the phone number ?",
        "can i get their phone number please ?",
    ),
    "close": (
        "thank you , that is all",
        "thanks , goodbye",
    ),
}

RESPONSE_TEMPLATES = {
    ("hotel", "formal"): "certainly . i recommend {name} , a {price} hotel in the {area} . shall i book ?",
    ("hotel", "casual"): "yeah , {name} is a cool {price} spot in the {area} . book it ?",
    ("restaurant", "formal"): "certainly . i recommend {name} for {food} food in the {area} . shall i book ?",
    ("restaurant", "casual"): "yeah , {name} does {food} food in the {area} . gonna grab a table ?",
    ("taxi", "formal"): "certainly . a {car} will collect you at {time} for {dest} .",
    ("taxi", "casual"): "cool , a {car} is gonna pick you up at {time} for {dest} .",
    ("book", "formal"): "certainly . {name} is booked for {n} people . may i assist with anything else ?",
    ("book", "casual"): "no_problem , {name} is booked for {n} people . anything else ?",
    ("info", "formal"): "certainly . the phone number for {name} is {phone} .",
    ("info", "casual"): "yeah , {name} is on {phone} .",
    ("close", "formal"): "it was a pleasure to assist you . goodbye .",
    ("close", "casual"): "cool , see you around !",
}


def phone_for(name):
    """Deterministic phone-number token for an establishment name."""
    code = sum(ord(ch) for ch in name)
    return f"{PHONE_DIGITS[code % len(PHONE_DIGITS)]}-{code % 1000:03d}"


class Vocab:
    """Token <-> id map with ids 0-3 reserved for PAD, BOS, EOS and UNK."""

    def __init__(self, tokens=()):
        self.itos = list(RESERVED)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        for t in tokens:
            self.add(t)

    def add(self, token):
        if token not in self.stoi:
            self.stoi[token] = len(self.itos)
            self.itos.append(token)
        return self.stoi[token]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.itos == other.itos

    def id(self, token):
        return self.stoi.get(token, UNK)

    def decode(self, ids, strip=True):
        out = []
        for i in ids:
            if strip and i == EOS:
                break
            if strip and i in (PAD, BOS):
                continue
            out.append(self.itos[i])
        return out

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for tok in self.itos[len(RESERVED):]:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(line.rstrip("\n") for line in fh if line.rstrip("\n"))


@dataclass
class Turn:
    user_tokens: list
    condition: str
    response_tokens: list
    style: str

    def __post_init__(self):
        if not self.user_tokens or not self.response_tokens:
            raise DomainError("turn token lists must be non-empty")
        if self.condition not in DOMAINS:
            raise DomainError(f"unknown domain {self.condition!r}")
        if self.style not in STYLES:
            raise DomainError(f"unknown style {self.style!r}")


@dataclass
class Episode:
    episode_id: int
    turns: list

    @property
    def style(self):
        return self.turns[0].style

    def __len__(self):
        return len(self.turns)


@dataclass
class Corpus:
    episodes: list
    vocab: Vocab
    warnings: int = 0
    texts: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.episodes)


def tokenize(text, vocab, eos=False):
    """Lowercase, split on whitespace and map to ids; unknown tokens become UNK."""
    ids = [vocab.id(tok) for tok in text.lower().split()]
    if eos:
        ids.append(EOS)
    return ids


def _sample_turn_texts(rng, n_turns):
    """Yield ``(kind, domain, user_text, slots)`` for one episode."""
    turns = []
    entity = None  # (name, domain) of the establishment under discussion
    domain = None
    for t in range(n_turns):
        last = t == n_turns - 1
        if last and n_turns >= 4:
            kind = "close"
        elif t == 0 or entity is None or domain == "taxi" or rng.uniform01() < 0.4:
            choices = [d for d in DOMAINS if d != domain]
            if entity is None:
                choices = [d for d in choices if d != "taxi"] if t == 0 else choices
            kind = rng.choice(choices)
        else:
            kind = rng.choice(("book", "info"))

        slots = {}
        if kind == "hotel":
            slots = {"price": rng.choice(PRICES), "area": rng.choice(AREAS)}
            slots["name"] = HOTEL_NAMES[slots["price"], slots["area"]]
        elif kind == "restaurant":
            slots = {"food": rng.choice(FOODS), "area": rng.choice(AREAS)}
            slots["name"] = RESTAURANT_NAMES[slots["food"], slots["area"]]
        elif kind == "taxi":
            dest = entity[0] if entity is not None else rng.choice(LANDMARKS)
            slots = {"time": rng.choice(TIMES), "dest": dest}
            slots["car"] = CARS[slots["time"]]
        elif kind in ("book", "info"):
            slots = {"name": entity[0], "n": rng.choice(PARTY), "phone": phone_for(entity[0])}

        user = rng.choice(USER_TEMPLATES[kind]).format(**slots)
        if kind in DOMAINS:
            domain = kind
            if kind != "taxi":
                entity = (slots["name"], kind)
        turns.append((kind, domain, user, slots))
    return turns


def generate_texts(n_episodes, seed):
    """Raw-text episodes: ``{"episode_id", "style", "turns": [{user, domain, response}]}``."""
    if n_episodes < 1:
        raise DomainError("n_episodes must be >= 1")
    rng = Rng(seed)
    episodes = []
    for eid in range(n_episodes):
        style = STYLES[rng.randbelow(2)]
        n_turns = 3 + rng.randbelow(4)
        turns = []
        for kind, domain, user, slots in _sample_turn_texts(rng, n_turns):
            response = RESPONSE_TEMPLATES[kind, style].format(**slots)
            turns.append({"user": user, "domain": domain, "response": response})
        episodes.append({"episode_id": eid, "style": style, "turns": turns})
    return episodes


def build_corpus(records, vocab=None, min_count=1, by_frequency=False):
    """Turn raw-text episode records into a tokenized :class:`Corpus`.

    Without a vocab, one is built from the records: in first-appearance
    order, or by descending frequency (ties by first appearance) when
    ``by_frequency`` is set.  Tokens seen fewer than ``min_count`` times map
    to UNK.
    """
    if vocab is None:
        counts = Counter()
        order = {}
        for rec in records:
            for turn in rec["turns"]:
                for tok in (turn["user"] + " " + turn["response"]).lower().split():
                    counts[tok] += 1
                    order.setdefault(tok, len(order))
        keep = [t for t in order if counts[t] >= min_count]
        if by_frequency:
            keep.sort(key=lambda t: (-counts[t], order[t]))
        vocab = Vocab(keep)
    episodes = []
    for rec in records:
        turns = [
            Turn(tokenize(t["user"], vocab), t["domain"],
                 tokenize(t["response"], vocab, eos=True), rec["style"])
            for t in rec["turns"]
        ]
        episodes.append(Episode(rec["episode_id"], turns))
    return Corpus(episodes, vocab, texts=records)


def generate_corpus(n_episodes, seed):
    """Deterministic synthetic corpus; a pure function of ``(n_episodes, seed)``."""
    return build_corpus(generate_texts(n_episodes, seed))


def style_of(tokens):
    """Classify a token-string list by marker counting: 'formal', 'casual' or None."""
    toks = set(tokens)
    f = bool(toks & FORMAL_MARKERS)
    c = bool(toks & CASUAL_MARKERS)
    if f and not c:
        return "formal"
    if c and not f:
        return "casual"
    return None


def noise_like(shape, sigma, rng):
    if sigma < 0:
        raise DomainError(f"noise sigma must be >= 0, got {sigma}")
    return sigma * rng.gaussian_array(shape)


def inject_noise(embedding, sigma, rng):
    """``embedding + sigma * g`` with ``g`` standard Gaussian drawn from ``rng``."""
    if sigma < 0:
        raise DomainError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return embedding
    data = embedding.data if isinstance(embedding, Tensor) else np.asarray(embedding, float)
    return Tensor(data + noise_like(data.shape, sigma, rng))


def split(corpus, ratios=(0.8, 0.1, 0.1), seed=0):
    """Shuffle episodes with ``seed`` and cut into train/dev/test lists."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DomainError(f"split ratios must be 3 nonnegative values summing to 1, got {ratios}")
    episodes = list(corpus.episodes if isinstance(corpus, Corpus) else corpus)
    Rng(seed).shuffle(episodes)
    n = len(episodes)
    a = int(round(ratios[0] * n))
    b = int(round((ratios[0] + ratios[1]) * n))
    return episodes[:a], episodes[a:b], episodes[b:]


# -- JSON-lines corpus files ---------------------------------------------------

_DOMAIN_ALIASES = {
    "hotel": "hotel", "hospital": "hotel", "police": "hotel",
    "restaurant": "restaurant", "attraction": "restaurant",
    "taxi": "taxi", "train": "taxi", "bus": "taxi",
}


def nearest_domain(label):
    """Map an arbitrary domain label onto one of :data:`DOMAINS`."""
    label = label.lower().strip()
    if label in _DOMAIN_ALIASES:
        return _DOMAIN_ALIASES[label]
    scores = [difflib.SequenceMatcher(None, label, d).ratio() for d in DOMAINS]
    return DOMAINS[int(np.argmax(scores))]


def save_jsonl(corpus_or_records, path):
    records = corpus_or_records.texts if isinstance(corpus_or_records, Corpus) else corpus_or_records
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_multiwoz_json(path, vocab=None, min_count=2):
    """Read a JSON-lines corpus file (one episode per line).

    Lines look like ``{"episode_id": 0, "style": "formal", "turns": [{"user":
    ..., "domain": ..., "response": ...}]}``.  ``style`` defaults to formal.
    Unknown domains are mapped to the nearest supported one and counted in
    ``Corpus.warnings``.
    """
    records = []
    warnings = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                turns = []
                for t in raw["turns"]:
                    if not str(t["user"]).split() or not str(t["response"]).split():
                        raise ValueError("empty utterance")
                    domain = str(t["domain"]).lower()
                    if domain not in DOMAINS:
                        mapped = nearest_domain(domain)
                        log.warning("line %d: domain %r mapped to %r", lineno, domain, mapped)
                        warnings += 1
                        domain = mapped
                    turns.append({"user": str(t["user"]), "domain": domain,
                                  "response": str(t["response"])})
                style = raw.get("style", "formal")
                if style not in STYLES:
                    raise ValueError(f"unknown style {style!r}")
                if not turns:
                    raise ValueError("episode has no turns")
                records.append({"episode_id": int(raw.get("episode_id", len(records))),
                                "style": style, "turns": turns})
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"malformed episode: {exc}", line=lineno) from exc
    if not records:
        raise ParseError("no episodes")
    corpus = build_corpus(records, vocab=vocab, min_count=min_count, by_frequency=vocab is None)
    corpus.warnings = warnings
    return corpus
