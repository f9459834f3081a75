"""Interpolated Kneser-Ney trigram language model.

Counting conventions, fixed for every reordering of a corpus so that model
scores are comparable across orderings:

  * each sentence is padded with two BOS symbols; no end-of-sentence event
    is predicted (per-word averages divide by the real token count only);
  * the vocabulary is closed over the full database (train plus test), and
    the smoothing recursion bottoms out at the uniform distribution over it,
    so every in-vocabulary word has positive probability in any context;
  * lower orders use continuation counts (distinct left contexts), the
    hallmark of Kneser-Ney;
  * one absolute discount per order from the count-of-counts formula
    D = n1 / (n1 + 2 * n2), falling back to 0.75 if n1 or n2 is zero.
"""

from __future__ import annotations

import math
import pickle
from collections import Counter
from dataclasses import dataclass

from .treebank import Treebank, TreebankError

BOS = "<s>"


class OovWordError(KeyError):
    """Scored word is outside the model's closed vocabulary."""

    def __init__(self, word):
        super().__init__(f"word {word!r} not in model vocabulary")
        self.word = word


def _discount(counts) -> float:
    ones = sum(1 for c in counts if c == 1)
    twos = sum(1 for c in counts if c == 2)
    if ones == 0 or twos == 0:
        return 0.75
    return ones / (ones + 2.0 * twos)


@dataclass
class TrigramModel:
    """Frozen count tables plus per-order discounts; query-only after build."""

    vocabulary: frozenset[str]
    tri: dict          # (u, v, w) -> raw count
    tri_ctx: dict      # (u, v) -> (total count, distinct continuations)
    bi: dict           # (v, w) -> continuation count N1+(. v w)
    bi_ctx: dict       # v -> (total continuation count, distinct continuations)
    uni: dict          # w -> continuation count N1+(. w)
    uni_total: int
    uni_types: int
    d1: float
    d2: float
    d3: float

    def prob(self, u: str, v: str, w: str) -> float:
        """P(w | u, v); unseen contexts fall through to lower orders."""
        if w not in self.vocabulary:
            raise OovWordError(w)
        p = self._p_uni(w)
        bi_ctx = self.bi_ctx.get(v)
        if bi_ctx is not None:
            total, types = bi_ctx
            c = self.bi.get((v, w), 0)
            p = max(c - self.d2, 0.0) / total + (self.d2 * types / total) * p
        tri_ctx = self.tri_ctx.get((u, v))
        if tri_ctx is not None:
            total, types = tri_ctx
            c = self.tri.get((u, v, w), 0)
            p = max(c - self.d3, 0.0) / total + (self.d3 * types / total) * p
        return p

    def _p_uni(self, w: str) -> float:
        floor = 1.0 / len(self.vocabulary)
        if self.uni_total == 0:
            return floor
        c = self.uni.get(w, 0)
        gamma = self.d1 * self.uni_types / self.uni_total
        return max(c - self.d1, 0.0) / self.uni_total + gamma * floor

    def surprisal(self, u: str, v: str, w: str) -> float:
        """Shannon information of w in context, in bits (always >= 0)."""
        return -math.log2(self.prob(u, v, w))

    def sentence_surprisals(self, forms) -> list[float]:
        padded = (BOS, BOS, *forms)
        return [
            self.surprisal(padded[i], padded[i + 1], padded[i + 2])
            for i in range(len(forms))
        ]

    def save_counts(self, path) -> None:
        with open(path, "wb") as fh:
            pickle.dump(self, fh)

    @classmethod
    def load_counts(cls, path) -> "TrigramModel":
        with open(path, "rb") as fh:
            model = pickle.load(fh)
        if not isinstance(model, cls):
            raise TypeError(f"{path} does not hold a TrigramModel")
        return model


def train_kn(train: Treebank, full_vocab) -> TrigramModel:
    """Estimate the interpolated Kneser-Ney model from a (reordered) corpus.

    ``full_vocab`` must cover the training forms; pass the vocabulary of the
    full database so that test tokens are always in-vocabulary.
    """
    if not train.sentences:
        raise TreebankError("cannot train a language model on an empty corpus")
    full_vocab = frozenset(full_vocab)
    if not train.vocabulary <= full_vocab:
        missing = sorted(train.vocabulary - full_vocab)[:3]
        raise TreebankError(f"training forms missing from full_vocab: {missing}")
    if BOS in full_vocab:
        raise TreebankError(f"vocabulary collides with boundary symbol {BOS!r}")

    tri = Counter()
    for sent in train.sentences:
        padded = (BOS, BOS, *sent.forms())
        for i in range(len(sent)):
            tri[padded[i], padded[i + 1], padded[i + 2]] += 1

    # Continuation counts: distinct left contexts of each suffix. Trigram
    # keys are unique, so each type adds one left context to its suffix.
    bi = Counter()
    for u, v, w in tri:
        bi[v, w] += 1
    uni = Counter()
    for v, w in bi:
        uni[w] += 1

    tri_ctx = {}
    for (u, v, w), c in tri.items():
        total, types = tri_ctx.get((u, v), (0, 0))
        tri_ctx[u, v] = (total + c, types + 1)
    bi_ctx = {}
    for (v, w), c in bi.items():
        total, types = bi_ctx.get(v, (0, 0))
        bi_ctx[v] = (total + c, types + 1)

    return TrigramModel(
        vocabulary=full_vocab,
        tri=dict(tri),
        tri_ctx=tri_ctx,
        bi=dict(bi),
        bi_ctx=bi_ctx,
        uni=dict(uni),
        uni_total=sum(uni.values()),
        uni_types=len(uni),
        d1=_discount(uni.values()),
        d2=_discount(bi.values()),
        d3=_discount(tri.values()),
    )


def prob(model: TrigramModel, u: str, v: str, w: str) -> float:
    return model.prob(u, v, w)


def surprisal(model: TrigramModel, u: str, v: str, w: str) -> float:
    return model.surprisal(u, v, w)


@dataclass(frozen=True)
class CoverageReport:
    order: int
    fraction: float
    n_covered: int
    n_considered: int
    degenerate: bool = False  # all test n-grams contained OOV words


def ngram_coverage(train: Treebank, test: Treebank, order: int) -> CoverageReport:
    """Fraction of test n-gram tokens attested in training, restricted to
    n-grams whose every real word is in the training vocabulary. BOS padding
    matches LM training."""
    if order not in (2, 3):
        raise ValueError(f"order must be 2 or 3, got {order}")
    if not train.sentences or not test.sentences:
        raise TreebankError("coverage needs nonempty train and test corpora")

    def ngrams(tb):
        for sent in tb.sentences:
            padded = (BOS,) * (order - 1) + sent.forms()
            for i in range(len(sent)):
                yield padded[i : i + order]

    train_grams = set(ngrams(train))
    train_vocab = train.vocabulary
    considered = 0
    covered = 0
    for gram in ngrams(test):
        if any(w != BOS and w not in train_vocab for w in gram):
            continue
        considered += 1
        if gram in train_grams:
            covered += 1
    if considered == 0:
        return CoverageReport(order=order, fraction=0.0, n_covered=0,
                              n_considered=0, degenerate=True)
    return CoverageReport(
        order=order,
        fraction=covered / considered,
        n_covered=covered,
        n_considered=considered,
    )


def load_probes(path) -> list[tuple[str, str, str, float]]:
    """Read a model probe file: TSV rows of (u, v, w, expected_p)."""
    probes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            u, v, w, expected = line.split("\t")
            probes.append((u, v, w, float(expected)))
    return probes


def check_probes(model: TrigramModel, probes, tol: float = 1e-9) -> list[str]:
    """Compare model probabilities against probe expectations; returns a list
    of human-readable mismatch descriptions (empty when all pass)."""
    failures = []
    for u, v, w, expected in probes:
        got = model.prob(u, v, w)
        if abs(got - expected) > tol:
            failures.append(f"p({w}|{u},{v}) = {got!r}, expected {expected!r}")
    return failures
