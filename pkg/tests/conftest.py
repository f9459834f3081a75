import pytest

from orderlab.treebank import (
    DependencyArc,
    SyntheticSpec,
    Token,
    Treebank,
    derive_dependency_types,
    generate_synthetic,
    make_sentence,
    parse_conllx,
)

# Six-token example sentence: "When the man arrived I left" with the
# classic pair-typed arcs (root at "left", HEADs 6,3,4,1,6,0).
FIG2_TSV = """1\tWhen\t6\tSBAR>S
2\tthe\t3\tDT>NN
3\tman\t4\tSBJ>S
4\tarrived\t1\tS>SBAR
5\tI\t6\tSBJ>S
6\tleft\t0\tROOT
"""

# Weights that rearrange it to "When arrived the man left I".
FIG4_WEIGHTS = {"SBAR>S": -0.7, "DT>NN": -0.5, "S>SBAR": 0.3, "SBJ>S": 0.5}


@pytest.fixture
def fig2_tb() -> Treebank:
    return derive_dependency_types(parse_conllx(FIG2_TSV), scheme="self_label")


def sentence_from_heads(heads, labels, forms=None):
    """Compact tree builder: heads[i] is the head of 1-based token i+1."""
    n = len(heads)
    forms = forms or [f"w{i}" for i in range(1, n + 1)]
    tokens = [Token(index=i + 1, form=forms[i]) for i in range(n)]
    arcs = [
        DependencyArc(dependent=i + 1, head=heads[i], raw_label=labels[i],
                      dep_type=labels[i])
        for i in range(n)
    ]
    return make_sentence(tokens, arcs)


def tb_of(*sentences, language_tag="test"):
    return Treebank(sentences=tuple(sentences), language_tag=language_tag)


def small_synthetic(n_sentences=60, seed=1, types=("A", "B", "C"), p=0.6,
                    vocab_size=10, max_depth=2, max_arity=1):
    spec = SyntheticSpec(
        vocabulary=tuple(f"w{i}" for i in range(vocab_size)),
        dep_types=tuple(types),
        attach_probs=p,
        max_depth=max_depth,
        max_arity=max_arity,
    )
    return generate_synthetic(spec, n_sentences, seed=seed)


@pytest.fixture
def synthetic_tb() -> Treebank:
    return small_synthetic()
