from collections import Counter

import numpy as np
import pytest

from orderlab.baseline import (
    BaselineDistribution,
    BaselineSample,
    empirical_p,
    pearson,
    run_baseline,
    sample_seed,
    standardize,
)
from orderlab.linearize import Fixed, reorder_corpus
from orderlab.measures import EfficiencyPoint
from orderlab.treebank import SplitSpec

from conftest import small_synthetic


def dist_from_values(values, metric="dl"):
    """Hand-built distribution whose chosen metric takes the given values."""
    samples = []
    for i, v in enumerate(values):
        point = EfficiencyPoint(
            h_word=v if metric == "h_word" else 1.0,
            h_char=v if metric == "h_char" else 1.0,
            dl=v if metric == "dl" else 1.0,
            n_tokens=10,
            n_arcs=9,
        )
        samples.append(BaselineSample(sample_id=i, seed=i, mode="fixed_per_type", point=point))
    arr = np.array(values, dtype=float)
    means = {m: 1.0 for m in ("h_word", "h_char", "dl")}
    sds = {m: 0.0 for m in ("h_word", "h_char", "dl")}
    means[metric] = float(np.mean(arr))
    sds[metric] = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
    return BaselineDistribution(
        samples=tuple(samples), mode="fixed_per_type", master_seed=0,
        means=means, sds=sds,
    )


def point_with(value, metric):
    return EfficiencyPoint(
        h_word=value if metric == "h_word" else 0.0,
        h_char=value if metric == "h_char" else 0.0,
        dl=value if metric == "dl" else 0.0,
        n_tokens=1,
        n_arcs=1,
    )


@pytest.fixture(scope="module")
def tb():
    return small_synthetic(40, seed=10)


class TestRunBaseline:
    def test_deterministic(self, tb):
        spec = SplitSpec()
        a = run_baseline(tb, spec, n=3, master_seed=5)
        b = run_baseline(tb, spec, n=3, master_seed=5)
        assert a == b

    def test_sample_seeds_distinct(self):
        seeds = [sample_seed(123, i) for i in range(200)]
        assert len(set(seeds)) == 200

    def test_all_three_modes_reproducible(self, tb):
        spec = SplitSpec()
        for mode in ("fixed_per_type", "free", "fixed_headedness"):
            a = run_baseline(tb, spec, n=2, mode=mode, master_seed=9)
            b = run_baseline(tb, spec, n=2, mode=mode, master_seed=9)
            assert a == b
            assert len(a) == 2

    def test_summary_stats_match_recomputation(self, tb):
        dist = run_baseline(tb, SplitSpec(), n=5, master_seed=1)
        for metric in ("h_word", "h_char", "dl"):
            values = dist.values(metric)
            assert dist.means[metric] == pytest.approx(float(np.mean(values)), abs=1e-12)
            assert dist.sds[metric] == pytest.approx(
                float(np.std(values, ddof=1)), abs=1e-12
            )

    def test_type_frequencies_preserved_per_sample(self, tb):
        # the reordering inside each sample cannot change what the corpus is
        # made of; re-derive one sample's grammar and check the multisets
        spec = SplitSpec()
        dist = run_baseline(tb, spec, n=2, master_seed=3)
        from orderlab.linearize import sample_weights

        for sample in dist.samples:
            rng = np.random.default_rng(sample.seed)
            g = sample_weights(tb.dep_type_inventory(), rng)
            out = reorder_corpus(tb, Fixed(g))
            assert out.dep_type_frequencies() == tb.dep_type_frequencies()
            assert Counter(len(s) for s in out.sentences) == Counter(
                len(s) for s in tb.sentences
            )

    def test_workers_match_serial(self, tb):
        spec = SplitSpec()
        serial = run_baseline(tb, spec, n=4, master_seed=2, workers=1)
        parallel = run_baseline(tb, spec, n=4, master_seed=2, workers=2)
        assert serial == parallel

    def test_n_validation(self, tb):
        with pytest.raises(ValueError):
            run_baseline(tb, SplitSpec(), n=0)
        with pytest.raises(ValueError):
            run_baseline(tb, SplitSpec(), n=1, mode="nope")

    def test_tsv_shape(self, tb):
        dist = run_baseline(tb, SplitSpec(), n=3, master_seed=7)
        lines = dist.to_tsv().strip().split("\n")
        assert lines[1] == "id\tseed\th_word\th_char\tdl"
        assert len(lines) == 2 + 3


class TestEmpiricalP:
    def test_hand_counts_on_ten_samples(self):
        dist = dist_from_values([1, 2, 3, 4, 5, 6, 7, 8, 9, 10], metric="dl")
        assert empirical_p(point_with(5.5, "dl"), dist, "dl") == 0.5
        assert empirical_p(point_with(0.5, "dl"), dist, "dl") == 0.0
        assert empirical_p(point_with(100, "dl"), dist, "dl") == 1.0
        assert empirical_p(point_with(3.0, "dl"), dist, "dl") == 0.2  # tie excluded

    def test_monotone_in_actual(self):
        dist = dist_from_values([1.0, 2.0, 3.0, 4.0], metric="h_word")
        ps = [
            empirical_p(point_with(v, "h_word"), dist, "h_word")
            for v in (0.5, 1.5, 2.5, 3.5, 4.5)
        ]
        assert ps == sorted(ps)
        assert all(0 <= p <= 1 for p in ps)


class TestPearson:
    def test_perfect_line(self):
        samples = []
        for i, dl in enumerate([1.0, 2.0, 3.0, 4.0]):
            samples.append(
                BaselineSample(
                    sample_id=i, seed=i, mode="fixed_per_type",
                    point=EfficiencyPoint(
                        h_word=2 * dl + 1, h_char=-dl, dl=dl, n_tokens=5, n_arcs=4
                    ),
                )
            )
        dist = BaselineDistribution(
            samples=tuple(samples), mode="fixed_per_type", master_seed=0,
            means={}, sds={},
        )
        assert pearson(dist, ("h_word", "dl")) == pytest.approx(1.0)
        assert pearson(dist, ("h_char", "dl")) == pytest.approx(-1.0)

    def test_constant_metric_rejected(self):
        dist = dist_from_values([1.0, 2.0, 3.0], metric="dl")
        with pytest.raises(ValueError, match="constant"):
            pearson(dist, ("h_word", "dl"))

    def test_needs_three_samples(self):
        dist = dist_from_values([1.0, 2.0], metric="dl")
        with pytest.raises(ValueError):
            pearson(dist, ("h_word", "dl"))


class TestStandardize:
    def test_trivial_values(self):
        dist = dist_from_values([2.0, 3.0, 4.0], metric="dl")
        mean, sd = dist.means["dl"], dist.sds["dl"]
        assert standardize(mean, dist, "dl") == 0.0
        assert standardize(mean + sd, dist, "dl") == pytest.approx(1.0)

    def test_arithmetic(self):
        dist = dist_from_values([2.0, 3.0, 4.0], metric="dl")
        # force the documented example: mean 3.0, sd 0.5 -> value 2.0 is -2.0
        forced = BaselineDistribution(
            samples=dist.samples, mode=dist.mode, master_seed=0,
            means={"dl": 3.0}, sds={"dl": 0.5},
        )
        assert standardize(2.0, forced, "dl") == pytest.approx(-2.0)

    def test_zero_sd_rejected(self):
        dist = dist_from_values([1.0], metric="dl")
        with pytest.raises(ValueError):
            standardize(1.0, dist, "dl")

    def test_standardized_samples_have_unit_moments(self):
        tb = small_synthetic(40, seed=20)
        dist = run_baseline(tb, SplitSpec(), n=8, master_seed=6)
        for metric in ("h_word", "h_char", "dl"):
            z = np.array(
                [standardize(v, dist, metric) for v in dist.values(metric)]
            )
            assert abs(float(np.mean(z))) < 1e-9
            assert abs(float(np.std(z, ddof=1)) - 1.0) < 1e-9
