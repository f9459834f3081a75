"""Efficiency measures over (possibly reordered) corpora.

Information density comes from a trigram model evaluated on held-out text;
dependency length is read directly off the trees in their current order. The
``efficiency_point`` pipeline ties the two together: reorder the training
portion, fit the language model, reorder the test portion the same way, and
measure there.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass

from .linearize import OrderingMode, reorder_corpus
from .treebank import SplitSpec, Treebank, TreebankError, split
from .trigram import TrigramModel, train_kn


@dataclass(frozen=True)
class EfficiencyPoint:
    """One corpus ordering summarized: bits/word, per-character information,
    and mean dependency length."""

    h_word: float
    h_char: float
    dl: float
    n_tokens: int
    n_arcs: int

    def metric(self, name: str) -> float:
        if name not in ("h_word", "h_char", "dl"):
            raise ValueError(f"unknown metric {name!r}")
        return getattr(self, name)

    def to_json(self) -> str:
        return json.dumps(
            {
                "h_word": self.h_word,
                "h_char": self.h_char,
                "dl": self.dl,
                "n_tokens": self.n_tokens,
                "n_arcs": self.n_arcs,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "EfficiencyPoint":
        return cls(**json.loads(text))


def info_density_word(model: TrigramModel, test: Treebank) -> float:
    """Mean per-word surprisal (bits/word) of the test portion."""
    if not test.sentences:
        raise TreebankError("cannot measure an empty test corpus")
    total = 0.0
    n = 0
    for sent in test.sentences:
        # token-by-token accumulation, matching info_density_char exactly
        for h in model.sentence_surprisals(sent.forms()):
            total += h
        n += len(sent)
    return total / n


def info_density_char(model: TrigramModel, test: Treebank, charset_size: int) -> float:
    """Mean surprisal normalized by word length times log2 of the character
    inventory; ``charset_size`` is the full-database K, a per-corpus constant."""
    if charset_size < 2:
        raise ValueError(f"charset_size must be >= 2, got {charset_size}")
    if not test.sentences:
        raise TreebankError("cannot measure an empty test corpus")
    bits_per_char = math.log2(charset_size)
    total = 0.0
    n = 0
    for sent in test.sentences:
        surprisals = model.sentence_surprisals(sent.forms())
        for tok, h in zip(sent.tokens, surprisals):
            total += h / (tok.char_len * bits_per_char)
        n += len(sent)
    return total / n


def sentence_dependency_lengths(sentence) -> list[int]:
    """Head-dependent distances in the current order; root arc excluded."""
    return [
        abs(arc.head - arc.dependent) for arc in sentence.arcs if not arc.is_root
    ]


def avg_dependency_length(tb: Treebank) -> float:
    total = 0
    n_arcs = 0
    for sent in tb.sentences:
        lengths = sentence_dependency_lengths(sent)
        total += sum(lengths)
        n_arcs += len(lengths)
    if n_arcs == 0:
        raise TreebankError("corpus has no non-root dependencies")
    return total / n_arcs


def measure_point(
    model: TrigramModel, test_ordered: Treebank, charset_size: int
) -> EfficiencyPoint:
    """All three metrics of an already-reordered test corpus in one pass
    (surprisals are computed once and reused for both density estimates)."""
    if not test_ordered.sentences:
        raise TreebankError("cannot measure an empty test corpus")
    if charset_size < 2:
        raise ValueError(f"charset_size must be >= 2, got {charset_size}")
    bits_per_char = math.log2(charset_size)
    word_sum = 0.0
    char_sum = 0.0
    n_tokens = 0
    dl_sum = 0
    n_arcs = 0
    for sent in test_ordered.sentences:
        surprisals = model.sentence_surprisals(sent.forms())
        for tok, h in zip(sent.tokens, surprisals):
            word_sum += h
            char_sum += h / (tok.char_len * bits_per_char)
        n_tokens += len(sent)
        lengths = sentence_dependency_lengths(sent)
        dl_sum += sum(lengths)
        n_arcs += len(lengths)
    if n_arcs == 0:
        raise TreebankError("corpus has no non-root dependencies")
    return EfficiencyPoint(
        h_word=word_sum / n_tokens,
        h_char=char_sum / n_tokens,
        dl=dl_sum / n_arcs,
        n_tokens=n_tokens,
        n_arcs=n_arcs,
    )


def efficiency_point(
    full: Treebank,
    spec: SplitSpec,
    mode: OrderingMode,
    model: TrigramModel | None = None,
) -> EfficiencyPoint:
    """Run the four-step evaluation for one ordering of one corpus.

    Reorders the training portion under ``mode``, trains the Kneser-Ney model
    (vocabulary closed over the full database), reorders the test portion
    with the same mode parameters, and measures h_word, h_char and mean
    dependency length on the reordered test data. A pre-trained ``model``
    may be supplied to skip retraining (cache path).
    """
    train_tb, test_tb = split(full, spec)
    if model is None:
        model = train_kn(reorder_corpus(train_tb, mode), full.vocabulary)
    test_ordered = reorder_corpus(test_tb, mode)
    return measure_point(model, test_ordered, full.charset_size)


def headedness_consistency(tb: Treebank) -> float:
    """Percentage of instances on the modal side of the head, averaged first
    within and then across dependency sets.

    A dependency set groups the dependency types attaching to heads of the
    same category, keyed by the head's own incoming dependency type (``ROOT``
    when the head is the sentence root).
    """
    if not tb.sentences:
        raise TreebankError("empty treebank")
    # (set key, dep_type) -> [left count, right count]
    side_counts: dict[tuple[str, str], list[int]] = defaultdict(lambda: [0, 0])
    for sent in tb.sentences:
        for arc in sent.arcs:
            if arc.is_root:
                continue
            if arc.dep_type is None:
                raise TreebankError(
                    "arcs are untyped; run derive_dependency_types first"
                )
            head_arc = sent.arc_of(arc.head)
            set_key = "ROOT" if head_arc.is_root else head_arc.dep_type
            side = 0 if arc.dependent < arc.head else 1
            side_counts[set_key, arc.dep_type][side] += 1
    if not side_counts:
        raise TreebankError("corpus has no non-root dependencies")
    per_set: dict[str, list[float]] = defaultdict(list)
    for (set_key, _), (left, right) in side_counts.items():
        per_set[set_key].append(max(left, right) / (left + right))
    set_means = [sum(fracs) / len(fracs) for fracs in per_set.values()]
    return 100.0 * sum(set_means) / len(set_means)
