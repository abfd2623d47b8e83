import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlrank import oracle as orc
from mlrank.losses import WeightSpec, rank_loss, weight

ONE = WeightSpec.constant(1.0)

# found by find_inconsistency_witness("exp", m=3, seed=0) at sample 24 and frozen here
WITNESS_PROBS = [
    0.166517611201069,
    0.05797554912083048,
    0.05062508672896269,
    0.19879505414632692,
    0.22307158667273938,
    0.028532240321014115,
    0.14966683353322757,
    0.12481603827582985,
]


@pytest.fixture
def table2():
    dist = orc.ConditionalLabelDistribution.from_mapping(2, {(1, 0): 0.5, (0, 1): 0.3, (1, 1): 0.2})
    return orc.compute_deltas(dist, ONE)


def brute_risk(dist, spec, h):
    return sum(p * rank_loss(y, h, spec) for y, p in zip(dist.labelings, dist.probs) if p > 0)


@st.composite
def instances(draw, max_m=4):
    m = draw(st.integers(2, max_m))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return orc.random_distribution(rng, m), orc.random_weight_spec(rng, m), orc.random_scores(rng, m)


class TestDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            orc.ConditionalLabelDistribution(2, [0.5, 0.5, 0.5, 0.0])

    def test_rejects_too_many_labels(self):
        with pytest.raises(ValueError):
            orc.ConditionalLabelDistribution(21, np.zeros(4))

    def test_product_marginals(self):
        q = [0.2, 0.9, 0.5]
        assert np.allclose(orc.ConditionalLabelDistribution.product(q).marginals(), q, atol=1e-15)


class TestDeltas:
    def test_two_label_table(self, table2):
        assert table2.pair[0, 1, 1, 0] == pytest.approx(0.5)
        assert table2.pair[0, 1, 0, 1] == pytest.approx(0.3)
        assert table2.pair[0, 1, 1, 1] == pytest.approx(0.2)
        assert np.allclose(table2.d1, [0.7, 0.5])
        assert table2.W == pytest.approx(1.0)

    def test_constant_weight_gives_marginals(self):
        dist = orc.random_distribution(np.random.default_rng(5), 4)
        assert np.allclose(orc.compute_deltas(dist, ONE).d1, dist.marginals(), atol=1e-15)

    def test_point_mass_on_all_ones(self):
        t = orc.compute_deltas(orc.ConditionalLabelDistribution.point_mass((1, 1, 1)), ONE)
        assert np.array_equal(t.d1, np.ones(3))
        off = ~np.eye(3, dtype=bool)
        assert np.all(t.pair[off][:, 1, 1] == 1)
        assert np.all(t.pair[off][:, 0, 0] == 0)
        assert np.all(t.pair[off][:, 1, 0] == 0)

    @given(instances(max_m=5))
    def test_invariants(self, inst):
        dist, spec, _ = inst
        t = orc.compute_deltas(dist, spec)
        m = dist.m
        for i, j in itertools.permutations(range(m), 2):
            assert np.allclose(t.pair[i, j], t.pair[j, i].T, atol=1e-12)
            assert t.pair[i, j].sum() == pytest.approx(t.W, abs=1e-12)
            assert t.d1[i] - t.d1[j] == pytest.approx(t.pair[i, j, 1, 0] - t.pair[i, j, 0, 1], abs=1e-12)
        assert np.allclose(t.single.sum(axis=1), t.W, atol=1e-12)

    @given(instances(), st.floats(0.1, 10))
    def test_weight_rescaling(self, inst, c):
        dist, spec, h = inst
        t = orc.compute_deltas(dist, spec)
        tc = orc.compute_deltas(dist, spec.scaled(c, dist.m))
        assert np.allclose(tc.pair, c * t.pair, rtol=1e-12, atol=1e-14)
        assert tc.W == pytest.approx(c * t.W, rel=1e-12)
        assert orc.regret_conditional(tc, h) == pytest.approx(c * orc.regret_conditional(t, h), rel=1e-9, abs=1e-12)
        order = np.argsort(-orc.bayes_ranker(t), kind="stable")
        assert np.array_equal(np.argsort(-orc.bayes_ranker(tc), kind="stable"), order) or np.unique(t.d1).size < dist.m


class TestRisk:
    def test_values(self, table2):
        assert orc.conditional_rank_risk(table2, [0, 1]) == pytest.approx(0.5)
        assert orc.conditional_rank_risk(table2, [1, 0]) == pytest.approx(0.3)
        assert orc.bayes_rank_risk(table2) == pytest.approx(0.3)
        assert np.allclose(orc.bayes_ranker(table2), [0.7, 0.5])

    def test_all_tied(self):
        t = orc.compute_deltas(orc.random_distribution(np.random.default_rng(1), 4), ONE)
        i, j = np.triu_indices(4, 1)
        expected = 0.5 * np.sum(t.pair[i, j, 1, 0] + t.pair[i, j, 0, 1])
        assert orc.conditional_rank_risk(t, np.zeros(4)) == pytest.approx(expected, abs=1e-15)

    def test_bayes_risk_special_cases(self):
        det = orc.compute_deltas(orc.ConditionalLabelDistribution.point_mass((1, 0, 1)), ONE)
        assert orc.bayes_rank_risk(det) == 0
        half = orc.ConditionalLabelDistribution.from_mapping(2, {(1, 0): 0.5, (0, 1): 0.5})
        assert orc.bayes_rank_risk(orc.compute_deltas(half, ONE)) == 0.5

    def test_uniform_and_point_mass_rankers(self):
        u = orc.bayes_ranker(orc.compute_deltas(orc.ConditionalLabelDistribution.uniform(4), ONE))
        assert np.unique(u).size == 1
        p = orc.bayes_ranker(orc.compute_deltas(orc.ConditionalLabelDistribution.point_mass((1, 0, 0)), ONE))
        assert p[0] > 0 and np.all(p[1:] == 0)

    @given(instances())
    def test_risk_matches_enumeration(self, inst):
        dist, spec, h = inst
        t = orc.compute_deltas(dist, spec)
        assert orc.conditional_rank_risk(t, h) == pytest.approx(brute_risk(dist, spec, h), abs=1e-12)

    def test_bayes_risk_is_min_over_orderings(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            dist, spec = orc.random_distribution(rng, 3), orc.random_weight_spec(rng, 3)
            t = orc.compute_deltas(dist, spec)
            best = min(orc.conditional_rank_risk(t, p) for p in itertools.permutations(range(3)))
            assert orc.bayes_rank_risk(t) == pytest.approx(best, abs=1e-13)


class TestRegret:
    def test_values(self, table2):
        assert orc.regret_conditional(table2, [0, 1]) == pytest.approx(0.2, abs=1e-15)
        assert orc.regret_conditional(table2, [4.0, 4.0]) == pytest.approx(0.1, abs=1e-15)

    @given(instances())
    def test_bayes_ranker_has_zero_regret(self, inst):
        t = orc.compute_deltas(inst[0], inst[1])
        assert orc.regret_conditional(t, orc.bayes_ranker(t)) == pytest.approx(0.0, abs=1e-12)

    @given(instances(max_m=5))
    def test_equals_risk_minus_bayes_risk(self, inst):
        dist, spec, h = inst
        t = orc.compute_deltas(dist, spec)
        reg = orc.regret_conditional(t, h)
        assert reg == pytest.approx(orc.conditional_rank_risk(t, h) - orc.bayes_rank_risk(t), abs=1e-12)
        assert reg >= -1e-12


class TestUnivariateSurrogateRegret:
    def test_minimizer_has_zero_regret(self, table2):
        h = [0.5 * math.log(0.7 / 0.3), 0.5 * math.log(0.5 / 0.5)]
        assert orc.univariate_surrogate_regret("exp", table2, h) == pytest.approx(0.0, abs=1e-15)

    def test_single_balanced_label(self):
        t = orc.compute_deltas(orc.ConditionalLabelDistribution(1, [0.5, 0.5]), ONE)
        assert orc.univariate_surrogate_regret("exp", t, [0.0]) == pytest.approx(0.0, abs=1e-15)
        assert orc.univariate_surrogate_regret("exp", t, [1.0]) == pytest.approx(0.5 * math.exp(-1) + 0.5 * math.e - 1, abs=1e-12)
        assert orc.univariate_surrogate_regret("exp", t, [1.0]) == pytest.approx(0.543081, abs=1e-6)

    @pytest.mark.parametrize("kind", ["exp", "log"])
    def test_deterministic_labels(self, kind):
        t = orc.compute_deltas(orc.ConditionalLabelDistribution.point_mass((1, 0)), ONE)
        assert orc.univariate_surrogate_regret(kind, t, [40.0, -40.0]) == pytest.approx(0.0, abs=1e-15)
        assert np.array_equal(orc.univariate_minimizer(kind, t), [np.inf, -np.inf])

    @pytest.mark.parametrize("kind", ["exp", "log"])
    def test_infimum_matches_grid_search(self, kind):
        grid = np.linspace(-8, 8, 400_001)
        phi = np.exp(-grid) if kind == "exp" else np.log1p(np.exp(-grid))
        phin = np.exp(grid) if kind == "exp" else np.log1p(np.exp(grid))
        for a, b in [(0.7, 0.3), (0.2, 0.05), (1.0, 1.0)]:
            assert orc.surrogate_infimum(kind, a, b) == pytest.approx(np.min(a * phi + b * phin), abs=1e-9)

    def test_degenerate_weight(self):
        t = orc.compute_deltas(orc.ConditionalLabelDistribution.point_mass((0, 0)), WeightSpec.normalized())
        with pytest.raises(orc.DegenerateWeightError):
            orc.univariate_surrogate_regret("exp", t, [0.0, 0.0])


class TestBipartite:
    def test_eta(self, table2):
        assert np.allclose(orc.reduce_to_bipartite(table2).eta, [0.7, 0.5])
        assert np.allclose(orc.reduce_to_bipartite(table2.scaled(2.0)).eta, [0.7, 0.5])

    def test_uniform_eta(self):
        t = orc.compute_deltas(orc.ConditionalLabelDistribution.uniform(5), ONE)
        assert np.allclose(orc.reduce_to_bipartite(t).eta, 0.5)

    def test_degenerate(self):
        t = orc.compute_deltas(orc.ConditionalLabelDistribution.point_mass((1, 1)), WeightSpec.normalized())
        with pytest.raises(orc.DegenerateWeightError):
            orc.reduce_to_bipartite(t)

    def test_regret_values(self, table2):
        red = orc.reduce_to_bipartite(table2)
        assert orc.bipartite_regret(red, [0, 1]) == pytest.approx(0.1, abs=1e-15)
        assert orc.bipartite_regret(red, red.eta) == 0.0

    def test_equal_eta(self):
        red = orc.BipartiteReduction(3, np.full(3, 0.4), np.full(3, 1 / 3))
        assert orc.bipartite_regret(red, [3.0, -1.0, 0.5]) == pytest.approx(0.0, abs=1e-15)

    @given(instances(max_m=5))
    def test_scaled_regret_matches_rank_regret(self, inst):
        dist, spec, h = inst
        t = orc.compute_deltas(dist, spec)
        if t.W <= 0:
            return
        scaled = orc.bipartite_regret(orc.reduce_to_bipartite(t), h) * t.W * dist.m**2 / 2
        assert scaled >= orc.regret_conditional(t, h) - 1e-12


class TestRegretBound:
    @pytest.mark.parametrize("kind", ["exp", "log"])
    def test_bayes_ranker_and_minimizer(self, kind, table2):
        r = orc.check_regret_bound(kind, table2, orc.bayes_ranker(table2))
        assert r.lhs == 0 and r.holds
        r = orc.check_regret_bound(kind, table2, orc.univariate_minimizer(kind, table2))
        assert r.lhs == 0 and r.rhs == pytest.approx(0.0, abs=1e-7) and r.holds

    @settings(max_examples=300)
    @given(instances(max_m=5), st.sampled_from(["exp", "log"]), st.floats(0.1, 5))
    def test_holds(self, inst, kind, scale):
        dist, spec, h = inst
        t = orc.compute_deltas(dist, spec)
        if t.W <= 0:
            return
        r = orc.check_regret_bound(kind, t, h * scale, w_max=spec.w_max)
        assert r.holds
        assert r.C <= r.C_wmax + 1e-12


class TestPairwise:
    def test_zero_scores_logistic(self):
        t = orc.compute_deltas(orc.random_distribution(np.random.default_rng(4), 3), ONE)
        i, j = np.triu_indices(3, 1)
        expected = math.log(2) * np.sum(t.pair[i, j, 1, 0] + t.pair[i, j, 0, 1])
        assert orc.pairwise_conditional_risk("log", t, np.zeros(3)) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("t", [-1.0, 0.0, 0.4, 2.0])
    def test_two_label_exp(self, table2, t):
        val = orc.pairwise_conditional_risk("exp", table2, [t, 0.0])
        assert val == pytest.approx(0.5 * math.exp(-t) + 0.3 * math.exp(t), abs=1e-14)

    def test_two_label_minimizer(self, table2):
        res = orc.minimize_pairwise_risk("exp", table2)
        assert res.converged
        assert res.h[0] == pytest.approx(0.5 * math.log(5 / 3), abs=1e-9)
        assert orc.pairwise_conditional_risk("exp", table2, res.h) == pytest.approx(2 * math.sqrt(0.15), abs=1e-12)
        assert orc.pairwise_conditional_risk("exp", table2, res.h) == pytest.approx(0.774597, abs=1e-6)

    @pytest.mark.parametrize("kind", ["exp", "log"])
    def test_no_violation_under_independence(self, kind):
        rng = np.random.default_rng(8)
        for _ in range(200):
            m = int(rng.integers(2, 5))
            t = orc.compute_deltas(orc.ConditionalLabelDistribution.product(rng.uniform(0.02, 0.98, m)), ONE)
            res = orc.minimize_pairwise_risk(kind, t)
            assert res.converged
            assert orc.ordering_violations(t, res.h) == []

    @pytest.mark.parametrize("kind", ["exp", "log"])
    def test_univariate_minimizers_never_violate(self, kind):
        rng = np.random.default_rng(9)
        for _ in range(500):
            t = orc.compute_deltas(orc.random_distribution(rng, 3), orc.random_weight_spec(rng, 3))
            assert orc.ordering_violations(t, orc.univariate_minimizer(kind, t)) == []


class TestFrozenWitness:
    @pytest.fixture
    def table(self):
        return orc.compute_deltas(orc.ConditionalLabelDistribution(3, WITNESS_PROBS), ONE)

    @pytest.mark.parametrize(
        "kind,h_expected",
        [("exp", [0.2383, 0.2980, 0.0]), ("log", [0.4764, 0.5925, 0.0])],
    )
    def test_pairwise_minimizer_misorders_labels(self, table, kind, h_expected):
        res = orc.minimize_pairwise_risk(kind, table)
        assert res.converged
        assert np.allclose(res.h, h_expected, atol=1e-4)
        gap = table.pair[0, 1, 1, 0] - table.pair[0, 1, 0, 1]
        assert gap == pytest.approx(0.0021837, abs=1e-7)
        assert orc.ordering_violations(table, res.h) == [(0, 1)]
        # label 0 carries more relevance mass, yet the pairwise minimizer puts label 1 above it
        assert table.d1[0] > table.d1[1] and res.h[0] < res.h[1]

    @pytest.mark.parametrize("kind", ["exp", "log"])
    def test_univariate_minimizer_orders_correctly(self, table, kind):
        assert orc.ordering_violations(table, orc.univariate_minimizer(kind, table)) == []

    def test_search_reproduces_witness(self):
        res = orc.find_inconsistency_witness("exp", m=3, budget=100, seed=0, spec=ONE)
        assert res.witness is not None
        assert res.witness.sample_index == 24
        assert np.allclose(res.witness.dist.probs, WITNESS_PROBS, rtol=0, atol=1e-15)
        assert res.witness.violated_pair == (0, 1)


def test_weight_spec_draws_are_valid():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m = int(rng.integers(2, 6))
        spec = orc.random_weight_spec(rng, m)
        for y in itertools.product([0, 1], repeat=m):
            assert 0 <= weight(spec, y) <= spec.w_max
