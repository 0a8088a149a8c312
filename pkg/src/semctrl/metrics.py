"""Corpus BLEU, ROUGE-L, exact-match METEOR and marker-based style accuracy.

All scores live on the unit interval.  Token sequences may hold ints or
strings; any terminating EOS should be stripped by the caller.
"""

import math
from collections import Counter
from dataclasses import asdict, dataclass

from .corpus import style_of
from .errors import DomainError


@dataclass
class MetricsReport:
    bleu: float
    rouge_l: float
    meteor_s: float
    control_accuracy: float
    mean_drift: float
    n_turns: int
    # fraction of turns whose output style follows a flipped style target
    flip_rate: float = float("nan")

    def as_dict(self):
        return asdict(self)


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(hypotheses, references, n):
    """Corpus-level clipped n-gram counts ``(matches, total)``."""
    num = den = 0
    for hyp, ref in zip(hypotheses, references):
        h = ngrams(hyp, n)
        r = ngrams(ref, n)
        num += sum(min(c, r[g]) for g, c in h.items())
        den += max(len(hyp) - n + 1, 0)
    return num, den


def bleu(hypotheses, references, max_n=4):
    """Corpus BLEU with brevity penalty.

    A zero n-gram count for ``n >= 2`` is replaced by ``(0 + 1) / (total + 1)``;
    nonzero counts are left alone so an exact match still scores 1.0.
    """
    if len(hypotheses) != len(references):
        raise DomainError(f"bleu: {len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise DomainError("bleu: empty corpus")
    c = sum(len(h) for h in hypotheses)
    r = sum(len(x) for x in references)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        num, den = modified_precision(hypotheses, references, n)
        if num == 0:
            if n == 1:
                return 0.0
            num, den = 1, den + 1
        log_sum += math.log(num / den)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / max_n)


def lcs_length(a, b):
    """Longest common subsequence length by dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(hypothesis, reference):
    """LCS-based F1 between one hypothesis and one reference."""
    if len(reference) == 0:
        raise DomainError("rouge_l: empty reference")
    if len(hypothesis) == 0:
        return 0.0
    lcs = lcs_length(hypothesis, reference)
    p = lcs / len(hypothesis)
    r = lcs / len(reference)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rouge_l_corpus(hypotheses, references):
    if not references:
        raise DomainError("rouge_l: empty corpus")
    return sum(rouge_l(h, r) for h, r in zip(hypotheses, references)) / len(references)


def align_exact(hypothesis, reference):
    """Greedy left-to-right exact alignment as a list of ``(hyp_pos, ref_pos)``."""
    used = [False] * len(reference)
    pairs = []
    for i, tok in enumerate(hypothesis):
        for j, ref_tok in enumerate(reference):
            if not used[j] and ref_tok == tok:
                used[j] = True
                pairs.append((i, j))
                break
    return pairs


def meteor_simplified(hypothesis, reference, alpha=0.9, beta=3.0, gamma=0.5):
    """Exact-match METEOR: harmonic F-mean times ``1 - gamma * (chunks / m) ** beta``.

    With the default constants ``F_mean = 10PR / (R + 9P)``.  Identical
    sequences of length m score ``1 - 0.5 / m**3``, not 1.
    """
    if len(reference) == 0:
        raise DomainError("meteor: empty reference")
    pairs = align_exact(hypothesis, reference)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hypothesis)
    r = m / len(reference)
    f_mean = p * r / (alpha * p + (1 - alpha) * r)
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    penalty = gamma * (chunks / m) ** beta
    return f_mean * (1.0 - penalty)


def meteor_corpus(hypotheses, references):
    if not references:
        raise DomainError("meteor: empty corpus")
    return sum(meteor_simplified(h, r) for h, r in zip(hypotheses, references)) / len(references)


def control_accuracy(generated, styles):
    """Share of outputs with a marker of the intended style and none of the other.

    ``generated`` holds token-string lists.
    """
    if len(generated) != len(styles):
        raise DomainError("control_accuracy: length mismatch")
    if not generated:
        return 0.0
    hits = sum(style_of(toks) == s for toks, s in zip(generated, styles))
    return hits / len(generated)
