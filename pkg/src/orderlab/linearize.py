"""Word-order production for dependency trees.

Three regimes: deterministic orders from weighted grammars, fully free
per-instance random orders, and free orders with the side of each dependency
type pinned. All of them are projective: a dependent always moves together
with its whole subtree as one contiguous block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .treebank import ROOT_HEAD, Sentence, Token, Treebank


class MissingDependencyType(LookupError):
    """A sentence contains a dependency type the grammar does not cover."""

    def __init__(self, dep_type):
        super().__init__(f"no weight for dependency type {dep_type!r}")
        self.dep_type = dep_type


@dataclass(frozen=True)
class WeightedGrammar:
    """Weight per dependency type in [-1, 1] \\ {0}; the head sits at 0.

    Sorting a head and its dependent blocks by weight yields the word order:
    negative weights put a dependent left of its head, positive right.
    """

    weights: dict[str, float]

    def __post_init__(self):
        for dep_type, w in self.weights.items():
            if not -1.0 <= w <= 1.0 or w == 0.0:
                raise ValueError(
                    f"weight for {dep_type!r} must be in [-1,1] and nonzero, got {w}"
                )

    def __getitem__(self, dep_type: str) -> float:
        try:
            return self.weights[dep_type]
        except KeyError:
            raise MissingDependencyType(dep_type) from None

    def __contains__(self, dep_type: str) -> bool:
        return dep_type in self.weights

    def types(self) -> set[str]:
        return set(self.weights)

    def with_weight(self, dep_type: str, weight: float) -> "WeightedGrammar":
        new = dict(self.weights)
        new[dep_type] = weight
        return WeightedGrammar(new)

    def to_json(self) -> str:
        return json.dumps(dict(sorted(self.weights.items())), indent=0)

    @classmethod
    def from_json(cls, text: str) -> "WeightedGrammar":
        return cls(weights=dict(json.loads(text)))


@dataclass(frozen=True)
class Linearization:
    """Bijection from original token index to new 1-based position."""

    order: tuple[int, ...]  # order[i-1] = new position of original token i

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(1, n + 1)):
            raise ValueError("linearization is not a bijection over 1..n")

    def position_of(self, original_index: int) -> int:
        return self.order[original_index - 1]


# dep_type -> "left" | "right", total over the types of the corpus in play.
HeadednessMap = dict[str, str]


def is_projective(sentence: Sentence, lin: Linearization) -> bool:
    """True if every subtree occupies a contiguous span of new positions."""
    children = sentence.children()

    def subtree(idx) -> list[int]:
        out = [idx]
        for arc in children[idx]:
            out.extend(subtree(arc.dependent))
        return out

    for tok in sentence.tokens:
        positions = sorted(lin.position_of(i) for i in subtree(tok.index))
        if positions[-1] - positions[0] != len(positions) - 1:
            return False
    return True


def sample_weights(types, rng: np.random.Generator) -> WeightedGrammar:
    """Draw a uniform random weight in [-1,1] per type; zero and duplicate
    values are rejected and resampled so co-occurring types never tie."""
    types = sorted(types)
    if not types:
        raise ValueError("cannot sample weights for an empty type set")
    weights: dict[str, float] = {}
    used: set[float] = set()
    for t in types:
        while True:
            w = float(rng.uniform(-1.0, 1.0))
            if w != 0.0 and w not in used:
                break
        used.add(w)
        weights[t] = w
    return WeightedGrammar(weights)


def sample_headedness(types, rng: np.random.Generator) -> HeadednessMap:
    """Random side per dependency type."""
    return {t: ("left" if rng.random() < 0.5 else "right") for t in sorted(types)}


def _subtree_blocks(sentence: Sentence):
    children = sentence.children()

    def block(head_idx: int, arrange) -> list[int]:
        """Token indices of the subtree at head_idx, arranged recursively."""
        deps = children[head_idx]
        blocks = [block(arc.dependent, arrange) for arc in deps]
        return arrange(head_idx, deps, blocks)

    return block


def _to_linearization(sentence: Sentence, flat: list[int]) -> Linearization:
    order = [0] * len(sentence)
    for pos, original in enumerate(flat, start=1):
        order[original - 1] = pos
    return Linearization(order=tuple(order))


def linearize_fixed(sentence: Sentence, grammar: WeightedGrammar) -> Linearization:
    """Deterministic projective order: at each head, sort the head (weight 0)
    and its dependent blocks by weight; same-type siblings keep their
    original relative order."""

    def arrange(head_idx, deps, blocks):
        items = [(0.0, 0, [head_idx])]
        for rank, (arc, blk) in enumerate(zip(deps, blocks), start=1):
            items.append((grammar[arc.dep_type], rank, blk))
        items.sort(key=lambda item: (item[0], item[1]))
        return [i for _, _, blk in items for i in blk]

    block = _subtree_blocks(sentence)
    return _to_linearization(sentence, block(sentence.root, arrange))


def linearize_free(sentence: Sentence, rng: np.random.Generator) -> Linearization:
    """Uniformly random projective order: at each head, a random permutation
    of the head and its dependent blocks."""

    def arrange(head_idx, deps, blocks):
        items = [[head_idx]] + blocks
        perm = rng.permutation(len(items))
        return [i for j in perm for i in items[j]]

    block = _subtree_blocks(sentence)
    return _to_linearization(sentence, block(sentence.root, arrange))


def linearize_fixed_headedness(
    sentence: Sentence, sides: HeadednessMap, rng: np.random.Generator
) -> Linearization:
    """Each dependent block goes on its type's mandated side of the head;
    the order within each side is uniformly random per instance."""
    for arc in sentence.arcs:
        if not arc.is_root and arc.dep_type not in sides:
            raise MissingDependencyType(arc.dep_type)

    def arrange(head_idx, deps, blocks):
        left = [blk for arc, blk in zip(deps, blocks) if sides[arc.dep_type] == "left"]
        right = [blk for arc, blk in zip(deps, blocks) if sides[arc.dep_type] == "right"]
        left = [left[j] for j in rng.permutation(len(left))]
        right = [right[j] for j in rng.permutation(len(right))]
        flat = [i for blk in left for i in blk]
        flat.append(head_idx)
        flat.extend(i for blk in right for i in blk)
        return flat

    block = _subtree_blocks(sentence)
    return _to_linearization(sentence, block(sentence.root, arrange))


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class Fixed:
    grammar: WeightedGrammar


@dataclass(frozen=True)
class Free:
    seed: int


@dataclass(frozen=True)
class FixedHeadedness:
    sides: tuple[tuple[str, str], ...]  # items of a HeadednessMap, frozen
    seed: int

    @classmethod
    def from_map(cls, sides: HeadednessMap, seed: int) -> "FixedHeadedness":
        return cls(sides=tuple(sorted(sides.items())), seed=seed)

    def sides_map(self) -> HeadednessMap:
        return dict(self.sides)


OrderingMode = Identity | Fixed | Free | FixedHeadedness


def apply_linearization(sentence: Sentence, lin: Linearization) -> Sentence:
    """Rebuild a sentence with tokens and arcs re-indexed to the new order."""
    pos = lin.position_of
    tokens = [None] * len(sentence)
    for tok in sentence.tokens:
        tokens[pos(tok.index) - 1] = Token(index=pos(tok.index), form=tok.form)
    arcs = []
    for arc in sentence.arcs:
        head = ROOT_HEAD if arc.is_root else pos(arc.head)
        arcs.append(replace(arc, dependent=pos(arc.dependent), head=head))
    arcs.sort(key=lambda a: a.dependent)
    return Sentence(tokens=tuple(tokens), arcs=tuple(arcs), root=pos(sentence.root))


def _sentence_rng(seed: int, sentence_index: int) -> np.random.Generator:
    # Independent substream per sentence so results do not depend on
    # execution order across sentences or workers.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sentence_index,)))


def reorder_sentence(sentence: Sentence, mode: OrderingMode, sentence_index: int = 0) -> Sentence:
    if isinstance(mode, Identity):
        return sentence
    if isinstance(mode, Fixed):
        lin = linearize_fixed(sentence, mode.grammar)
    elif isinstance(mode, Free):
        lin = linearize_free(sentence, _sentence_rng(mode.seed, sentence_index))
    elif isinstance(mode, FixedHeadedness):
        lin = linearize_fixed_headedness(
            sentence, mode.sides_map(), _sentence_rng(mode.seed, sentence_index)
        )
    else:
        raise TypeError(f"unknown ordering mode: {mode!r}")
    return apply_linearization(sentence, lin)


def reorder_corpus(tb: Treebank, mode: OrderingMode) -> Treebank:
    """Linearize every sentence under the mode; token multisets, arc sets and
    type frequencies are untouched, only positions change."""
    if isinstance(mode, Identity):
        return tb
    sentences = tuple(
        reorder_sentence(sent, mode, i) for i, sent in enumerate(tb.sentences)
    )
    return Treebank(sentences=sentences, language_tag=tb.language_tag)
