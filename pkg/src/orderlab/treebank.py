"""Dependency treebank data model: loading, validation, typing, splitting.

A treebank is an immutable corpus of dependency-annotated sentences. Every
other module works on the structures defined here and never mutates them;
reorderings always build fresh sentences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

ROOT_HEAD = 0

# Reserved dependency type for orphan tokens re-attached to the root by the
# parser's salvage mode. Both typing schemes pass it through untouched.
STRAY_TYPE = "STRAY>ROOT"


class TreebankError(ValueError):
    """Base class for corpus-level failures."""


class ParseError(TreebankError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class StructuralError(TreebankError):
    def __init__(self, message, sentence_no):
        super().__init__(f"sentence {sentence_no}: {message}")
        self.sentence_no = sentence_no


@dataclass(frozen=True)
class Token:
    """A surface token at a 1-based position in its original sentence."""

    index: int
    form: str

    def __post_init__(self):
        if self.index < 1:
            raise TreebankError(f"token index must be >= 1, got {self.index}")
        if not self.form:
            raise TreebankError("empty token form")
        if any(ch.isspace() for ch in self.form):
            raise TreebankError(f"token form contains whitespace: {self.form!r}")

    @property
    def char_len(self) -> int:
        """Length of the form in Unicode scalar values (always >= 1)."""
        return len(self.form)


@dataclass(frozen=True)
class DependencyArc:
    """One head-dependent relation; head == ROOT_HEAD marks the root arc.

    ``dep_type`` stays None until :func:`derive_dependency_types` assigns it;
    downstream modules key on ``dep_type`` only, never on ``raw_label``.
    """

    dependent: int
    head: int
    raw_label: str
    dep_type: str | None = None

    def __post_init__(self):
        if self.dependent == self.head:
            raise TreebankError(f"token {self.dependent} is its own head")

    @property
    def is_root(self) -> bool:
        return self.head == ROOT_HEAD


@dataclass(frozen=True)
class Sentence:
    """A rooted dependency tree over an ordered token sequence.

    Validated on construction: exactly one arc per token, exactly one root
    arc, no cycles, full reachability from the root. Input trees may be
    non-projective; only produced linearizations are required to be
    projective.
    """

    tokens: tuple[Token, ...]
    arcs: tuple[DependencyArc, ...]
    root: int

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise TreebankError("sentence with no tokens")
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.index != pos:
                raise TreebankError(
                    f"token at position {pos} carries index {tok.index}"
                )
        if len(self.arcs) != n:
            raise TreebankError(f"{n} tokens but {len(self.arcs)} arcs")
        seen = {arc.dependent for arc in self.arcs}
        if seen != set(range(1, n + 1)):
            raise TreebankError("arcs do not cover each token exactly once")
        roots = [arc for arc in self.arcs if arc.is_root]
        if len(roots) != 1:
            raise TreebankError(f"expected exactly one root arc, got {len(roots)}")
        if roots[0].dependent != self.root:
            raise TreebankError(
                f"root field {self.root} does not match root arc {roots[0].dependent}"
            )
        head_of = {arc.dependent: arc.head for arc in self.arcs}
        for arc in self.arcs:
            if not arc.is_root and not 1 <= arc.head <= n:
                raise TreebankError(f"arc head {arc.head} out of range")
        # Walk each token up to the root; a repeat visit means a cycle.
        for start in range(1, n + 1):
            node, hops = start, 0
            while node != ROOT_HEAD:
                node = head_of[node]
                hops += 1
                if hops > n:
                    raise TreebankError(f"cycle involving token {start}")

    def __len__(self) -> int:
        return len(self.tokens)

    def arc_of(self, dependent: int) -> DependencyArc:
        return self.arcs[dependent - 1]

    def children(self) -> dict[int, list[DependencyArc]]:
        """Dependents of each head, in original token order."""
        out: dict[int, list[DependencyArc]] = {t.index: [] for t in self.tokens}
        for arc in self.arcs:
            if not arc.is_root:
                out[arc.head].append(arc)
        return out

    def forms(self) -> tuple[str, ...]:
        return tuple(tok.form for tok in self.tokens)

    def dep_types(self, include_root: bool = False) -> set[str]:
        """Dependency types on (by default non-root) arcs; errors if untyped."""
        types = set()
        for arc in self.arcs:
            if arc.is_root and not include_root:
                continue
            if arc.dep_type is None:
                raise TreebankError(
                    "arcs are untyped; run derive_dependency_types first"
                )
            types.add(arc.dep_type)
        return types


def _sorted_arcs(arcs) -> tuple[DependencyArc, ...]:
    return tuple(sorted(arcs, key=lambda a: a.dependent))


def make_sentence(tokens, arcs) -> Sentence:
    """Build a validated Sentence, inferring the root from the arcs."""
    arcs = _sorted_arcs(arcs)
    roots = [a.dependent for a in arcs if a.is_root]
    if len(roots) != 1:
        raise TreebankError(f"expected exactly one root arc, got {len(roots)}")
    return Sentence(tokens=tuple(tokens), arcs=arcs, root=roots[0])


@dataclass(frozen=True)
class Treebank:
    """Immutable corpus plus vocabulary and character inventory.

    ``vocabulary`` and ``charset_size`` are always recomputed from the
    sentences at construction, so they can never go stale.
    """

    sentences: tuple[Sentence, ...]
    language_tag: str = ""
    vocabulary: frozenset[str] = field(init=False)
    charset_size: int = field(init=False)

    def __post_init__(self):
        vocab = set()
        chars = set()
        for sent in self.sentences:
            for tok in sent.tokens:
                vocab.add(tok.form)
                chars.update(tok.form)
        object.__setattr__(self, "vocabulary", frozenset(vocab))
        object.__setattr__(self, "charset_size", len(chars))

    def __len__(self) -> int:
        return len(self.sentences)

    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def dep_type_inventory(self) -> set[str]:
        """All dependency types on non-root arcs across the corpus."""
        types: set[str] = set()
        for sent in self.sentences:
            types |= sent.dep_types()
        return types

    def dep_type_frequencies(self) -> dict[str, int]:
        freqs: dict[str, int] = {}
        for sent in self.sentences:
            for arc in sent.arcs:
                if arc.is_root:
                    continue
                if arc.dep_type is None:
                    raise TreebankError(
                        "arcs are untyped; run derive_dependency_types first"
                    )
                freqs[arc.dep_type] = freqs.get(arc.dep_type, 0) + 1
        return freqs


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/test partition recipe.

    The same spec applied to the same treebank always yields identical
    partitions, regardless of process or platform.
    """

    train_fraction: Fraction = Fraction(9, 10)
    strategy: str = "interleaved"
    seed: int = 0

    def __post_init__(self):
        raw = self.train_fraction
        # Floats go through their decimal repr so 0.9 means 9/10, not the
        # nearest binary fraction.
        frac = Fraction(str(raw)) if isinstance(raw, float) else Fraction(raw)
        object.__setattr__(self, "train_fraction", frac)
        if not 0 < frac < 1:
            raise TreebankError(f"train_fraction must be in (0,1), got {frac}")
        if self.strategy not in ("interleaved", "seeded-random"):
            raise TreebankError(f"unknown split strategy: {self.strategy}")


def parse_conllx(text: str, language_tag: str = "", attach_strays: bool = False) -> Treebank:
    """Parse a CoNLL-style tab-separated dependency file into a Treebank.

    Accepts the 4-column subset (ID, FORM, HEAD, DEPREL) or full 8+-column
    CoNLL-X/U rows (HEAD and DEPREL in columns 7 and 8; the rest ignored).
    Blank lines separate sentences; ``#`` lines and multiword/empty-node IDs
    are skipped. HEAD = 0 marks the root.

    Tokens whose HEAD field is ``_`` (unannotated) are an error unless
    ``attach_strays`` is set, in which case they attach to the root token
    under the reserved type ``STRAY>ROOT``.
    """
    sentences = []
    rows: list[tuple[int, str, str, str, int]] = []  # id, form, head, label, line

    def flush():
        if not rows:
            return
        sent_no = len(sentences) + 1
        ids = [r[0] for r in rows]
        if ids != list(range(1, len(rows) + 1)):
            raise StructuralError(f"token IDs are not 1..{len(rows)}: {ids}", sent_no)
        tokens = []
        for tid, form, _, _, line_no in rows:
            try:
                tokens.append(Token(index=tid, form=form))
            except TreebankError as exc:
                raise ParseError(str(exc), line_no) from exc
        strays = [r for r in rows if r[2] == "_"]
        if strays and not attach_strays:
            raise StructuralError(
                f"token {strays[0][0]} has no head (use attach_strays to keep it)",
                sent_no,
            )
        arcs = []
        root = None
        for tid, _, head_str, label, line_no in rows:
            if head_str == "_":
                continue
            try:
                head = int(head_str)
            except ValueError:
                raise ParseError(f"non-integer HEAD field {head_str!r}", line_no)
            if head == ROOT_HEAD:
                if root is not None:
                    raise StructuralError(
                        f"multiple roots (tokens {root} and {tid})", sent_no
                    )
                root = tid
            elif not 1 <= head <= len(rows):
                raise StructuralError(f"token {tid} has head {head} out of range", sent_no)
            if head == tid:
                raise StructuralError(f"token {tid} is its own head", sent_no)
            arcs.append(DependencyArc(dependent=tid, head=head, raw_label=label))
        if root is None:
            raise StructuralError("no root token (HEAD = 0)", sent_no)
        for tid, _, head_str, _, _ in strays:
            arcs.append(
                DependencyArc(
                    dependent=tid, head=root, raw_label=STRAY_TYPE, dep_type=STRAY_TYPE
                )
            )
        try:
            sentences.append(make_sentence(tokens, arcs))
        except TreebankError as exc:
            raise StructuralError(str(exc), sent_no) from exc
        rows.clear()

    for line_no, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped:
            flush()
            continue
        if stripped.startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) == 4:
            tid_str, form, head_str, label = cols
        elif len(cols) >= 8:
            tid_str, form, head_str, label = cols[0], cols[1], cols[6], cols[7]
        else:
            raise ParseError(
                f"expected 4 or >= 8 tab-separated fields, got {len(cols)}", line_no
            )
        if "-" in tid_str or "." in tid_str:
            continue  # multiword-token / empty-node rows carry no tree arc
        try:
            tid = int(tid_str)
        except ValueError:
            raise ParseError(f"non-integer ID field {tid_str!r}", line_no)
        if not form:
            raise ParseError("empty FORM field", line_no)
        rows.append((tid, form, head_str, label, line_no))
    flush()

    return Treebank(sentences=tuple(sentences), language_tag=language_tag)


def serialize_conllx(tb: Treebank) -> str:
    """Canonical 4-column TSV serialization; round-trips through parse_conllx."""
    blocks = []
    for sent in tb.sentences:
        lines = []
        for tok in sent.tokens:
            arc = sent.arc_of(tok.index)
            lines.append(f"{tok.index}\t{tok.form}\t{arc.head}\t{arc.raw_label}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def derive_dependency_types(tb: Treebank, scheme: str = "child_parent_pair") -> Treebank:
    """Assign ``dep_type`` to every arc under the given labeling scheme.

    ``self_label`` copies the raw label. ``child_parent_pair`` combines the
    arc's label with the label of the head's own arc (``ROOT`` when the head
    is the virtual root), e.g. an attribute inside a subject phrase becomes
    ``Atr>Sb``. The reserved stray type passes through unchanged.
    """
    if scheme not in ("self_label", "child_parent_pair"):
        raise TreebankError(f"unknown typing scheme: {scheme}")
    new_sentences = []
    for sent in tb.sentences:
        new_arcs = []
        for arc in sent.arcs:
            if arc.raw_label == STRAY_TYPE:
                new_arcs.append(replace(arc, dep_type=STRAY_TYPE))
                continue
            if scheme == "self_label":
                dep_type = arc.raw_label
            else:
                if arc.is_root:
                    parent_label = "ROOT"
                else:
                    parent_label = sent.arc_of(arc.head).raw_label
                dep_type = f"{arc.raw_label}>{parent_label}"
            new_arcs.append(replace(arc, dep_type=dep_type))
        new_sentences.append(replace(sent, arcs=tuple(new_arcs)))
    return Treebank(sentences=tuple(new_sentences), language_tag=tb.language_tag)


def split(tb: Treebank, spec: SplitSpec) -> tuple[Treebank, Treebank]:
    """Partition a treebank into disjoint train/test portions.

    Test size is round((1 - train_fraction) * |tb|). The interleaved strategy
    picks evenly spaced sentences (every 10th for the default 9/10 fraction);
    seeded-random samples uniformly from the given seed. Both are fully
    deterministic for a fixed spec.
    """
    n = len(tb.sentences)
    hold_out = Fraction(1) - spec.train_fraction
    n_test = round(hold_out * n)
    if n_test < 1 or n - n_test < 1:
        raise TreebankError(
            f"cannot split {n} sentences with train_fraction {spec.train_fraction}"
        )
    if spec.strategy == "interleaved":
        test_pos = {(j + 1) * n // n_test for j in range(n_test)}
        test_idx = sorted(p - 1 for p in test_pos)
    else:
        rng = np.random.default_rng(spec.seed)
        test_idx = sorted(int(i) for i in rng.choice(n, size=n_test, replace=False))
    test_set = set(test_idx)
    train = tuple(s for i, s in enumerate(tb.sentences) if i not in test_set)
    test = tuple(tb.sentences[i] for i in test_idx)
    return (
        Treebank(sentences=train, language_tag=tb.language_tag),
        Treebank(sentences=test, language_tag=tb.language_tag),
    )


def subsample(tb: Treebank, n: int, seed: int) -> Treebank:
    """Uniform random subset of n sentences without replacement."""
    if n > len(tb.sentences):
        raise TreebankError(f"cannot draw {n} sentences from {len(tb.sentences)}")
    rng = np.random.default_rng(seed)
    idx = sorted(int(i) for i in rng.choice(len(tb.sentences), size=n, replace=False))
    return Treebank(
        sentences=tuple(tb.sentences[i] for i in idx), language_tag=tb.language_tag
    )


def char_inventory(tb: Treebank) -> tuple[int, float]:
    """Unique character count over all forms and its size in bits (log2 K)."""
    if not tb.sentences:
        raise TreebankError("empty treebank has no character inventory")
    k = tb.charset_size
    return k, math.log2(k)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for desk-scale random corpora.

    Each sentence is a random tree grown from a root: every node shallower
    than ``max_depth`` draws up to ``max_arity`` dependents per type, each
    with the type's attachment probability. Emitted token order is a fixed
    projective linearization, by default alternating dependents around the
    head (adjacency-favoring), overridable via ``emission_weights``.
    """

    vocabulary: tuple[str, ...]
    dep_types: tuple[str, ...]
    attach_probs: dict[str, float] | float = 0.5
    max_depth: int = 2
    max_arity: int = 1
    emission_weights: dict[str, float] | None = None

    def prob_of(self, dep_type: str) -> float:
        if isinstance(self.attach_probs, dict):
            return self.attach_probs[dep_type]
        return self.attach_probs

    def default_emission_weights(self) -> dict[str, float]:
        # Alternate sides with growing magnitude so earlier types sit closer
        # to the head on both sides.
        weights = {}
        for i, t in enumerate(self.dep_types):
            magnitude = 0.1 + 0.1 * (i // 2)
            weights[t] = -magnitude if i % 2 == 0 else magnitude + 0.05
        return weights


def generate_synthetic(spec: SyntheticSpec, n_sentences: int, seed: int) -> Treebank:
    """Generate a deterministic random corpus satisfying all tree invariants."""
    if not spec.vocabulary:
        raise TreebankError("synthetic spec needs a nonempty vocabulary")
    if not spec.dep_types:
        raise TreebankError("synthetic spec needs at least one dependency type")
    rng = np.random.default_rng(seed)
    weights = spec.emission_weights or spec.default_emission_weights()
    sentences = []
    for _ in range(n_sentences):
        # nodes[i] = (dep_type or None for the root, parent node id)
        nodes: list[tuple[str | None, int]] = [(None, ROOT_HEAD)]
        depths = [0]
        frontier = [0]
        while frontier:
            node_id = frontier.pop(0)
            if depths[node_id] >= spec.max_depth:
                continue
            for t in spec.dep_types:
                for _ in range(spec.max_arity):
                    if rng.random() < spec.prob_of(t):
                        nodes.append((t, node_id))
                        depths.append(depths[node_id] + 1)
                        frontier.append(len(nodes) - 1)
        order = _emit_order(nodes, weights)
        position = {node_id: pos for pos, node_id in enumerate(order, start=1)}
        tokens = [
            Token(index=pos, form=str(rng.choice(spec.vocabulary)))
            for pos in range(1, len(nodes) + 1)
        ]
        arcs = []
        for node_id, (dep_type, head_id) in enumerate(nodes):
            if dep_type is None:
                arcs.append(
                    DependencyArc(
                        dependent=position[node_id],
                        head=ROOT_HEAD,
                        raw_label="ROOT",
                        dep_type="ROOT",
                    )
                )
            else:
                arcs.append(
                    DependencyArc(
                        dependent=position[node_id],
                        head=position[head_id],
                        raw_label=dep_type,
                        dep_type=dep_type,
                    )
                )
        sentences.append(make_sentence(tokens, arcs))
    return Treebank(sentences=tuple(sentences), language_tag="synthetic")


def _emit_order(nodes, weights) -> list[int]:
    """Projective order of synthetic tree nodes under fixed type weights."""
    children: dict[int, list[int]] = {i: [] for i in range(len(nodes))}
    for node_id, (dep_type, head_id) in enumerate(nodes):
        if dep_type is not None:
            children[head_id].append(node_id)

    def place(node_id) -> list[int]:
        items = [(0.0, 0, [node_id])]
        for rank, child in enumerate(children[node_id], start=1):
            dep_type = nodes[child][0]
            items.append((weights[dep_type], rank, place(child)))
        items.sort(key=lambda item: (item[0], item[1]))
        return [i for _, _, block in items for i in block]

    return place(0)
