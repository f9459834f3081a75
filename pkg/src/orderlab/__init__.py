"""Word-order processing-efficiency laboratory for dependency treebanks."""

from .baseline import (
    BaselineDistribution,
    BaselineSample,
    empirical_p,
    pearson,
    run_baseline,
    standardize,
)
from .linearize import (
    Fixed,
    FixedHeadedness,
    Free,
    Identity,
    Linearization,
    WeightedGrammar,
    linearize_fixed,
    linearize_fixed_headedness,
    linearize_free,
    reorder_corpus,
    sample_weights,
)
from .measures import (
    EfficiencyPoint,
    avg_dependency_length,
    efficiency_point,
    headedness_consistency,
    info_density_char,
    info_density_word,
)
from .optimize import (
    InteractionTable,
    Objective,
    OptimizationTrace,
    OptimizeConfig,
    build_interaction_table,
    candidate_values,
    evaluate_objective,
    frontier_sweep,
    optimize,
    restart_variance,
)
from .treebank import (
    DependencyArc,
    Sentence,
    SplitSpec,
    SyntheticSpec,
    Token,
    Treebank,
    char_inventory,
    derive_dependency_types,
    generate_synthetic,
    parse_conllx,
    serialize_conllx,
    split,
    subsample,
)
from .trigram import CoverageReport, TrigramModel, ngram_coverage, train_kn

__version__ = "0.1.0"
