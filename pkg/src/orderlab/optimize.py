"""Coordinate descent over weighted grammars.

The objectives (information density, dependency length, or a weighted sum)
are piecewise constant in any single weight: the linearization only changes
when the weight crosses the value of another dependency type it can meet
under a shared head, or crosses the head's own weight at zero. Those
crossing points cut [-1, 1] into segments with constant objective, so one
coordinate is optimized exactly by scoring the midpoint of every segment.
Descent over coordinates then terminates (finitely many objective values,
strict decrease) but is not guaranteed globally optimal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linearize import Fixed, WeightedGrammar, linearize_fixed, reorder_corpus, sample_weights
from .measures import EfficiencyPoint, measure_point
from .treebank import SplitSpec, Treebank, TreebankError, split
from .trigram import train_kn

OBJECTIVE_KINDS = ("ID_word", "ID_char", "DL", "Joint")


@dataclass(frozen=True)
class Objective:
    """What to minimize; ``alpha`` weights the joint trade-off
    (1 - alpha) * dl + alpha * h and must be given exactly when kind is
    Joint. The joint h term uses by-character density unless overridden."""

    kind: str
    alpha: float | None = None
    id_metric: str = "h_char"

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if (self.alpha is not None) != (self.kind == "Joint"):
            raise ValueError("alpha must be present exactly when kind is Joint")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if self.id_metric not in ("h_char", "h_word"):
            raise ValueError(f"id_metric must be h_char or h_word, got {self.id_metric!r}")

    def of_point(self, point: EfficiencyPoint) -> float:
        if self.kind == "ID_word":
            return point.h_word
        if self.kind == "ID_char":
            return point.h_char
        if self.kind == "DL":
            return point.dl
        h = point.metric(self.id_metric)
        return (1.0 - self.alpha) * point.dl + self.alpha * h

    @property
    def needs_model(self) -> bool:
        return self.kind != "DL"


@dataclass(frozen=True)
class InteractionTable:
    """For each dependency type, the types it can meet under a shared head
    instance somewhere in the corpus (itself included when two same-type
    siblings occur). Symmetric by construction."""

    table: dict[str, frozenset[str]]

    def interacting(self, dep_type: str) -> frozenset[str]:
        return self.table.get(dep_type, frozenset())

    def types(self) -> set[str]:
        return set(self.table)


def build_interaction_table(tb: Treebank) -> InteractionTable:
    pairs: dict[str, set[str]] = {}
    for sent in tb.sentences:
        for arcs in sent.children().values():
            types = [a.dep_type for a in arcs]
            if any(t is None for t in types):
                raise TreebankError(
                    "arcs are untyped; run derive_dependency_types first"
                )
            distinct = set(types)
            for t in distinct:
                bucket = pairs.setdefault(t, set())
                bucket.update(distinct - {t})
                if types.count(t) > 1:
                    bucket.add(t)
    inventory = tb.dep_type_inventory()
    return InteractionTable(
        table={t: frozenset(pairs.get(t, ())) for t in inventory}
    )


def candidate_values(
    dep_type: str, grammar: WeightedGrammar, table: InteractionTable
) -> list[float]:
    """Midpoints of the objective-constant segments for one coordinate.

    Segment boundaries are the current weights of interacting types plus the
    head's implicit weight at zero (crossing zero flips the dependent's side,
    which changes the objective even for types with no interactions). -1 and
    1 close off the outermost segments.
    """
    if dep_type not in grammar:
        raise KeyError(f"{dep_type!r} not in grammar")
    boundaries = {grammar[t] for t in table.interacting(dep_type)}
    boundaries.add(0.0)
    augmented = sorted({-1.0, 1.0, *boundaries})
    return [
        (lo + hi) / 2.0 for lo, hi in zip(augmented, augmented[1:])
    ]


@dataclass(frozen=True)
class TraceStep:
    pass_index: int
    dep_type: str
    old_weight: float
    new_weight: float
    objective: float


@dataclass(frozen=True)
class OptimizationTrace:
    steps: tuple[TraceStep, ...]
    initial_objective: float
    final_objective: float
    final_grammar: WeightedGrammar
    converged: bool
    passes: int

    def to_tsv(self) -> str:
        lines = ["pass\tdep_type\told_weight\tnew_weight\tobjective"]
        for s in self.steps:
            lines.append(
                f"{s.pass_index}\t{s.dep_type}\t{s.old_weight!r}"
                f"\t{s.new_weight!r}\t{s.objective!r}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class OptimizeConfig:
    max_passes: int = 50
    tolerance: float | None = None  # per-kind default when None
    freeze_headedness: bool = False

    def resolve_tolerance(self, obj: Objective) -> float:
        if self.tolerance is not None:
            return self.tolerance
        return 1e-12 if obj.kind == "DL" else 1e-9


def _dl_sentence_sum(sentence, grammar: WeightedGrammar) -> int:
    lin = linearize_fixed(sentence, grammar)
    return sum(
        abs(lin.position_of(arc.head) - lin.position_of(arc.dependent))
        for arc in sentence.arcs
        if not arc.is_root
    )


class _Evaluator:
    """Objective evaluation with the dependency-length shortcut.

    For the DL objective only the sentences containing the adjusted type are
    re-linearized; sums are integers, so the incremental total must match a
    full recomputation exactly (verified after every accepted step). ID and
    joint objectives always rerun the whole pipeline: reorder the training
    portion, retrain the model, reorder and score the test portion.
    """

    def __init__(self, full: Treebank, spec: SplitSpec, obj: Objective):
        self.obj = obj
        self.train_tb, self.test_tb = split(full, spec)
        self.vocab = full.vocabulary
        self.charset_size = full.charset_size
        self.n_evaluations = 0
        if obj.kind == "DL":
            self._sent_types = [s.dep_types() for s in self.test_tb.sentences]
            self._n_arcs = sum(len(s) - 1 for s in self.test_tb.sentences)
            if self._n_arcs == 0:
                raise TreebankError("test portion has no non-root dependencies")
            self._sums: list[int] | None = None
            self._total = 0

    def _pipeline_value(self, grammar: WeightedGrammar) -> float:
        mode = Fixed(grammar)
        model = train_kn(reorder_corpus(self.train_tb, mode), self.vocab)
        point = measure_point(
            model, reorder_corpus(self.test_tb, mode), self.charset_size
        )
        return self.obj.of_point(point)

    def _ensure_dl_state(self, grammar: WeightedGrammar) -> None:
        if self._sums is None:
            self._sums = [
                _dl_sentence_sum(s, grammar) for s in self.test_tb.sentences
            ]
            self._total = sum(self._sums)

    def committed_value(self, grammar: WeightedGrammar) -> float:
        self.n_evaluations += 1
        if self.obj.kind != "DL":
            return self._pipeline_value(grammar)
        self._ensure_dl_state(grammar)
        return self._total / self._n_arcs

    def candidate_value(self, grammar: WeightedGrammar, changed_type: str) -> float:
        self.n_evaluations += 1
        if self.obj.kind != "DL":
            return self._pipeline_value(grammar)
        total = self._total
        for i, sent in enumerate(self.test_tb.sentences):
            if changed_type in self._sent_types[i]:
                total += _dl_sentence_sum(sent, grammar) - self._sums[i]
        return total / self._n_arcs

    def commit(self, grammar: WeightedGrammar, changed_type: str) -> None:
        if self.obj.kind != "DL":
            return
        for i, sent in enumerate(self.test_tb.sentences):
            if changed_type in self._sent_types[i]:
                self._sums[i] = _dl_sentence_sum(sent, grammar)
        self._total = sum(self._sums)
        full = sum(_dl_sentence_sum(s, grammar) for s in self.test_tb.sentences)
        if abs(full - self._total) > 1e-12 * max(1, self._n_arcs):
            raise RuntimeError(
                f"incremental DL diverged from full recomputation: "
                f"{self._total} vs {full}"
            )


def evaluate_objective(
    full: Treebank, spec: SplitSpec, grammar: WeightedGrammar, obj: Objective
) -> float:
    """Objective value of one grammar, always by full recomputation."""
    train_tb, test_tb = split(full, spec)
    mode = Fixed(grammar)
    test_ordered = reorder_corpus(test_tb, mode)
    if not obj.needs_model:
        total = 0
        n_arcs = 0
        for sent in test_ordered.sentences:
            for arc in sent.arcs:
                if not arc.is_root:
                    total += abs(arc.head - arc.dependent)
                    n_arcs += 1
        if n_arcs == 0:
            raise TreebankError("test portion has no non-root dependencies")
        return total / n_arcs
    model = train_kn(reorder_corpus(train_tb, mode), full.vocabulary)
    return obj.of_point(measure_point(model, test_ordered, full.charset_size))


def optimize(
    full: Treebank,
    spec: SplitSpec,
    obj: Objective,
    init: WeightedGrammar,
    config: OptimizeConfig = OptimizeConfig(),
) -> tuple[WeightedGrammar, OptimizationTrace]:
    """Minimize the objective one weight at a time until a full sweep adopts
    nothing (or max_passes runs out, returning best-so-far, converged=False).

    Sweeps visit types in descending corpus frequency. A candidate is adopted
    only if it improves on the incumbent by more than the tolerance, so the
    recorded objective column is strictly decreasing.
    """
    inventory = full.dep_type_inventory()
    missing = inventory - init.types()
    if missing:
        raise KeyError(f"initial grammar misses types: {sorted(missing)[:5]}")
    table = build_interaction_table(full)
    freqs = full.dep_type_frequencies()
    sweep_order = sorted(inventory, key=lambda t: (-freqs.get(t, 0), t))

    evaluator = _Evaluator(full, spec, obj)
    tol = config.resolve_tolerance(obj)
    grammar = init
    current = evaluator.committed_value(grammar)
    initial = current
    steps: list[TraceStep] = []
    converged = False
    passes = 0

    for pass_index in range(1, config.max_passes + 1):
        passes = pass_index
        adopted_any = False
        for dep_type in sweep_order:
            old_weight = grammar[dep_type]
            candidates = candidate_values(dep_type, grammar, table)
            if config.freeze_headedness:
                candidates = [c for c in candidates if (c < 0) == (old_weight < 0)]
            best_weight = None
            best_value = current
            for cand in candidates:
                if cand == old_weight:
                    continue
                value = evaluator.candidate_value(
                    grammar.with_weight(dep_type, cand), dep_type
                )
                if value < best_value - tol:
                    best_weight = cand
                    best_value = value
            if best_weight is not None:
                grammar = grammar.with_weight(dep_type, best_weight)
                evaluator.commit(grammar, dep_type)
                current = best_value
                adopted_any = True
                steps.append(
                    TraceStep(
                        pass_index=pass_index,
                        dep_type=dep_type,
                        old_weight=old_weight,
                        new_weight=best_weight,
                        objective=current,
                    )
                )
        if not adopted_any:
            converged = True
            break

    trace = OptimizationTrace(
        steps=tuple(steps),
        initial_objective=initial,
        final_objective=current,
        final_grammar=grammar,
        converged=converged,
        passes=passes,
    )
    return grammar, trace


def _restart_final(full, spec, obj, seed, config) -> float:
    types = full.dep_type_inventory()
    init = sample_weights(types, np.random.default_rng(seed))
    _, trace = optimize(full, spec, obj, init, config)
    return trace.final_objective


def restart_variance(
    full: Treebank,
    spec: SplitSpec,
    obj: Objective,
    k: int,
    seeds,
    config: OptimizeConfig = OptimizeConfig(),
    workers: int = 1,
) -> float:
    """Sample variance of the final objective over k random restarts."""
    if k < 2:
        raise ValueError("need at least 2 restarts for a variance")
    seeds = list(seeds)
    if len(seeds) < k:
        raise ValueError(f"need {k} seeds, got {len(seeds)}")
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_restart_final, full, spec, obj, seed, config)
                for seed in seeds[:k]
            ]
            finals = [f.result() for f in futures]
    else:
        finals = [_restart_final(full, spec, obj, seed, config) for seed in seeds[:k]]
    return float(np.var(finals, ddof=1))


@dataclass(frozen=True)
class FrontierPoint:
    alpha: float
    point: EfficiencyPoint
    grammar: WeightedGrammar
    z_h: float | None = None
    z_dl: float | None = None


def _objective_for_alpha(alpha: float, id_kind: str, id_metric: str) -> Objective:
    if alpha == 0.0:
        return Objective("DL")
    if alpha == 1.0:
        return Objective(id_kind)
    return Objective("Joint", alpha=alpha, id_metric=id_metric)


def _frontier_point(full, spec, alpha, init, config, id_kind, id_metric):
    obj = _objective_for_alpha(alpha, id_kind, id_metric)
    grammar, _ = optimize(full, spec, obj, init, config)
    return FrontierPoint(alpha=alpha, point=_point_of(full, spec, grammar),
                         grammar=grammar)


def frontier_sweep(
    full: Treebank,
    spec: SplitSpec,
    alphas,
    init: WeightedGrammar,
    config: OptimizeConfig = OptimizeConfig(),
    dist=None,
    id_kind: str = "ID_char",
    workers: int = 1,
) -> list[FrontierPoint]:
    """One optimization per trade-off weight, all from the same start.

    alpha = 0 runs the plain dependency-length objective and alpha = 1 the
    plain information-density objective, so the endpoints coincide exactly
    with the separate optimizations. When a baseline distribution is given,
    each point also carries z-scores against it.
    """
    if id_kind not in ("ID_char", "ID_word"):
        raise ValueError(f"id_kind must be ID_char or ID_word, got {id_kind!r}")
    id_metric = "h_char" if id_kind == "ID_char" else "h_word"
    alphas = list(alphas)
    for alpha in alphas:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha {alpha} outside [0,1]")
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_frontier_point, full, spec, alpha, init, config,
                            id_kind, id_metric)
                for alpha in alphas
            ]
            points = [f.result() for f in futures]
    else:
        points = [
            _frontier_point(full, spec, alpha, init, config, id_kind, id_metric)
            for alpha in alphas
        ]
    if dist is not None:
        from .baseline import standardize

        points = [
            FrontierPoint(
                alpha=fp.alpha,
                point=fp.point,
                grammar=fp.grammar,
                z_h=standardize(fp.point.metric(id_metric), dist, id_metric),
                z_dl=standardize(fp.point.dl, dist, "dl"),
            )
            for fp in points
        ]
    return points


def _point_of(full, spec, grammar) -> EfficiencyPoint:
    from .measures import efficiency_point

    return efficiency_point(full, spec, Fixed(grammar))


def frontier_tsv(points) -> str:
    lines = ["alpha\th_word\th_char\tdl\tz_h\tz_dl"]
    for fp in points:
        z_h = "" if fp.z_h is None else repr(fp.z_h)
        z_dl = "" if fp.z_dl is None else repr(fp.z_dl)
        p = fp.point
        lines.append(
            f"{fp.alpha!r}\t{p.h_word!r}\t{p.h_char!r}\t{p.dl!r}\t{z_h}\t{z_dl}"
        )
    return "\n".join(lines) + "\n"
