"""Monte Carlo chance estimation against random pseudo-grammars.

Each sample reorders the corpus under a random regime, retrains the language
model from scratch, and records one EfficiencyPoint. Per-sample seeds come
from a splittable scheme (numpy SeedSequence keyed by sample index), so
samples are independent, reproducible, and safe to compute in parallel.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linearize import Fixed, FixedHeadedness, Free, sample_headedness, sample_weights
from .measures import EfficiencyPoint, efficiency_point
from .treebank import SplitSpec, Treebank

METRICS = ("h_word", "h_char", "dl")
BASELINE_MODES = ("fixed_per_type", "free", "fixed_headedness")


@dataclass(frozen=True)
class BaselineSample:
    sample_id: int
    seed: int
    mode: str
    point: EfficiencyPoint


@dataclass(frozen=True)
class BaselineDistribution:
    samples: tuple[BaselineSample, ...]
    mode: str
    master_seed: int
    means: dict[str, float]
    sds: dict[str, float]

    def __len__(self) -> int:
        return len(self.samples)

    def values(self, metric: str) -> np.ndarray:
        return np.array([s.point.metric(metric) for s in self.samples])

    def to_tsv(self) -> str:
        lines = [f"# mode={self.mode}\tmaster_seed={self.master_seed}"]
        lines.append("id\tseed\th_word\th_char\tdl")
        for s in self.samples:
            p = s.point
            lines.append(
                f"{s.sample_id}\t{s.seed}\t{p.h_word!r}\t{p.h_char!r}\t{p.dl!r}"
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "master_seed": self.master_seed,
            "n": len(self.samples),
            "means": self.means,
            "sds": self.sds,
        }

    def to_summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def sample_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for sample ``index``; pairwise distinct by
    construction of the SeedSequence spawn tree."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _compute_sample(full, spec, mode, master_seed, index, types) -> BaselineSample:
    seed = sample_seed(master_seed, index)
    rng = np.random.default_rng(seed)
    if mode == "fixed_per_type":
        ordering = Fixed(sample_weights(types, rng))
    elif mode == "free":
        ordering = Free(seed=seed)
    elif mode == "fixed_headedness":
        ordering = FixedHeadedness.from_map(sample_headedness(types, rng), seed=seed)
    else:
        raise ValueError(f"unknown baseline mode {mode!r}")
    point = efficiency_point(full, spec, ordering)
    return BaselineSample(sample_id=index, seed=seed, mode=mode, point=point)


def run_baseline(
    full: Treebank,
    spec: SplitSpec,
    n: int,
    mode: str = "fixed_per_type",
    master_seed: int = 0,
    workers: int = 1,
) -> BaselineDistribution:
    """Collect EfficiencyPoints for n random pseudo-grammar variants.

    ``fixed_per_type`` draws one weighted grammar per sample and applies it
    to train and test alike; ``free`` randomizes every dependency instance;
    ``fixed_headedness`` draws a random side per type and randomizes within
    sides. Every sample retrains its own language model.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if mode not in BASELINE_MODES:
        raise ValueError(f"unknown baseline mode {mode!r}")
    types = frozenset(full.dep_type_inventory())
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_compute_sample, full, spec, mode, master_seed, i, types)
                for i in range(n)
            ]
            samples = [f.result() for f in futures]
    else:
        samples = [
            _compute_sample(full, spec, mode, master_seed, i, types) for i in range(n)
        ]
    samples.sort(key=lambda s: s.sample_id)
    means = {}
    sds = {}
    for metric in METRICS:
        values = np.array([s.point.metric(metric) for s in samples])
        means[metric] = float(np.mean(values))
        sds[metric] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return BaselineDistribution(
        samples=tuple(samples),
        mode=mode,
        master_seed=master_seed,
        means=means,
        sds=sds,
    )


def empirical_p(
    actual: EfficiencyPoint, dist: BaselineDistribution, metric: str
) -> float:
    """Fraction of random samples that beat (are strictly below) the actual
    value; ties do not count as beating."""
    if not dist.samples:
        raise ValueError("empty baseline distribution")
    value = actual.metric(metric)
    beats = int(np.sum(dist.values(metric) < value))
    return beats / len(dist.samples)


def pearson(dist: BaselineDistribution, pair: tuple[str, str]) -> float:
    """Sample Pearson correlation between two metrics over the samples."""
    if len(dist.samples) < 3:
        raise ValueError("Pearson correlation needs at least 3 samples")
    x = dist.values(pair[0])
    y = dist.values(pair[1])
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError(f"correlation undefined: constant metric in {pair}")
    return float(np.corrcoef(x, y)[0, 1])


def standardize(value: float, dist: BaselineDistribution, metric: str) -> float:
    """z-score of a value against the distribution's mean and (sample) sd."""
    sd = dist.sds[metric]
    if sd == 0:
        raise ValueError(f"cannot standardize against zero-sd metric {metric!r}")
    return (value - dist.means[metric]) / sd
