import math

import numpy as np
import pytest

from orientlab import (
    MandatoryProfile,
    Realization,
    elementary_grid,
    estimate_prob,
    estimate_profile,
    exact_prob_graph,
    gen_benchmark,
    gen_random,
    hoeffding_sample_count,
    is_feasible,
    make_instance,
    mandatory_set,
    mandatory_set_cells,
    orientation_state,
    sample_realization,
)
from test_model import uniform_vertex, vertex


@pytest.fixture(scope="module")
def fork():
    return gen_benchmark("fork", eps=0.1)


def weights(**kw):
    return Realization(dict(kw))


class TestMandatorySet:
    def test_fork_cheap_minimum(self, fork):
        assert mandatory_set(fork, weights(x=0.5, y=2.5, z=2.5)) == frozenset()

    def test_fork_middle_minimum(self, fork):
        assert mandatory_set(fork, weights(x=1.5, y=2.5, z=2.5)) == {"y", "z"}

    def test_fork_all_mandatory(self, fork):
        assert mandatory_set(fork, weights(x=1.5, y=1.8, z=2.5)) == {"x", "y", "z"}

    def test_hyperedge_path_matches_graph_path(self):
        # same edges expressed as size-2 hyperedges vs the generic branch
        rng = np.random.default_rng(0)
        for _ in range(50):
            inst = gen_random("gnp", rng, n=6, p=0.5)
            r = sample_realization(inst, rng)
            generic = frozenset()
            for members in inst.hyperedges:
                m = min(members, key=lambda u: (r[u], u))
                for u in members:
                    if u != m and inst.interval(u).contains(r[m]):
                        generic |= {u}
                    if u != m and inst.interval(m).contains(r[u]):
                        generic |= {m}
            assert mandatory_set(inst, r) == generic


class TestFeasibility:
    def test_fork_single_query_enough(self, fork):
        assert is_feasible(fork, weights(x=0.5, y=2.5, z=2.5), {"x"})

    def test_full_query_set_always_feasible(self, fork):
        rng = np.random.default_rng(1)
        for _ in range(20):
            r = sample_realization(fork, rng)
            assert is_feasible(fork, r, set(fork.vertex_ids))

    def test_excluding_mandatory_vertex_infeasible(self, fork):
        assert not is_feasible(fork, weights(x=1.5, y=1.8, z=2.5), {"y", "z"})

    def test_mandatory_equals_nonexcludable_brute_force(self):
        rng = np.random.default_rng(2)
        for i in range(40):
            fam = ("gnp", "hypergraph")[i % 2]
            inst = gen_random(fam, rng, n=5, m=3, p=0.5, unit_cost=False)
            r = sample_realization(inst, rng)
            ids = list(inst.vertex_ids)
            feasible = [
                frozenset(ids[j] for j in range(len(ids)) if mask >> j & 1)
                for mask in range(1 << len(ids))
                if is_feasible(
                    inst,
                    r,
                    frozenset(ids[j] for j in range(len(ids)) if mask >> j & 1),
                )
            ]
            assert feasible, "the full set must always be feasible"
            assert mandatory_set(inst, r) == frozenset.intersection(*feasible)


class TestOrientationState:
    def test_fork_solved_by_x(self, fork):
        state = orientation_state(fork, {"x": 0.5})
        assert state == {0: ("solved", "x"), 1: ("solved", "x")}

    def test_fork_open_after_x(self, fork):
        state = orientation_state(fork, {"x": 1.5})
        assert state == {0: ("open", "y"), 1: ("open", "z")}

    def test_fully_revealed_returns_argmin(self):
        inst = make_instance(
            [uniform_vertex("a", 0, 3), uniform_vertex("b", 1, 4), uniform_vertex("c", 2, 5)],
            [["a", "b", "c"]],
        )
        state = orientation_state(inst, {"a": 2.5, "b": 1.5, "c": 2.6})
        assert state == {0: ("solved", "b")}

    def test_unqueried_winner(self):
        inst = make_instance(
            [uniform_vertex("a", 0, 2), uniform_vertex("b", 1, 4)], [["a", "b"]]
        )
        # b right of a's interval: a wins without being queried
        assert orientation_state(inst, {"b": 3.5}) == {0: ("solved", "a")}

    def test_inconsistent_weight_rejected(self, fork):
        with pytest.raises(ValueError, match="outside"):
            orientation_state(fork, {"x": 2.5})

    def test_no_reveals_opens_leftmost(self, fork):
        assert orientation_state(fork, {}) == {0: ("open", "x"), 1: ("open", "x")}


class TestExactProb:
    def test_fork_values(self, fork):
        profile = exact_prob_graph(fork)
        assert profile.method == "exact-graph"
        assert profile.probs["x"] == pytest.approx(0.19, abs=1e-15)
        assert profile.probs["y"] == 0.5
        assert profile.probs["z"] == 0.5

    def test_isolated_vertex(self):
        inst = make_instance([uniform_vertex("a", 0, 1)], [])
        assert exact_prob_graph(inst).probs["a"] == 0.0

    def test_path_product_formula(self):
        u = vertex("u", 0, 2, [(0, 1, 0.7), (1, 2, 0.3)])
        v = uniform_vertex("v", 1, 3)
        w = vertex("w", 2, 4, [(2, 3, 0.5), (3, 4, 0.5)])
        inst = make_instance([u, v, w], [["u", "v"], ["v", "w"]])
        p_v = exact_prob_graph(inst).probs["v"]
        assert p_v == pytest.approx(1 - 0.7 * 0.5, abs=1e-15)
        # cross-check against the sampled mandatory frequency
        rng = np.random.default_rng(3)
        n = 100_000
        hits = sum("v" in mandatory_set(inst, sample_realization(inst, rng)) for _ in range(n))
        sigma = math.sqrt(p_v * (1 - p_v) / n)
        assert abs(hits / n - p_v) <= 4 * sigma

    def test_rejects_hypergraph(self):
        inst = make_instance(
            [uniform_vertex("a", 0, 2), uniform_vertex("b", 1, 3), uniform_vertex("c", 1.5, 4)],
            [["a", "b", "c"]],
        )
        with pytest.raises(ValueError, match="graph"):
            exact_prob_graph(inst)

    def test_exact_frequency_agreement_random(self):
        rng = np.random.default_rng(4)
        inst = gen_random("gnp", rng, n=5, p=0.6)
        profile = exact_prob_graph(inst)
        n = 20_000
        counts = {v: 0 for v in inst.vertex_ids}
        for _ in range(n):
            for v in mandatory_set(inst, sample_realization(inst, rng)):
                counts[v] += 1
        for v, p in profile.probs.items():
            sigma = math.sqrt(max(p * (1 - p), 1e-9) / n)
            assert abs(counts[v] / n - p) <= 4 * sigma + 1e-9


class TestCellLogic:
    def test_cells_match_continuous(self):
        rng = np.random.default_rng(5)
        for i in range(60):
            fam = ("gnp", "hypergraph")[i % 2]
            inst = gen_random(fam, rng, n=5, m=3, p=0.5)
            grid = elementary_grid(inst)
            r = sample_realization(inst, rng)
            cells = {}
            for vid in inst.vertex_ids:
                w = r[vid]
                cells[vid] = max(j for j in range(len(grid) - 1) if grid[j] < w)
            assert mandatory_set_cells(inst, cells, grid) == mandatory_set(inst, r)

    def test_shared_minimum_cell_makes_all_covering_mandatory(self):
        inst = make_instance(
            [uniform_vertex("a", 0, 2), uniform_vertex("b", 0, 2), uniform_vertex("c", 1, 3)],
            [["a", "b", "c"]],
        )
        grid = elementary_grid(inst)  # (0, 1, 2, 3)
        # a and b both in (0, 1): both mandatory, c not (cell outside I_c)
        assert mandatory_set_cells(inst, {"a": 0, "b": 0, "c": 2}, grid) == {"a", "b"}
        # a and b in (1, 2) which sits inside all three intervals
        assert mandatory_set_cells(inst, {"a": 1, "b": 1, "c": 2}, grid) == {"a", "b", "c"}


class TestEstimation:
    def test_sample_count(self):
        assert hoeffding_sample_count(0.05, 0.01) == 1060

    def test_isolated_vertex_estimates_zero(self):
        inst = make_instance([uniform_vertex("a", 0, 1), uniform_vertex("b", 0, 1)], [])
        rng = np.random.default_rng(0)
        assert estimate_prob(inst, "a", 0.2, 0.2, rng) == 0.0

    def test_fork_estimate_within_band(self, fork):
        rng = np.random.default_rng(6)
        inside = 0
        for _ in range(30):
            y = estimate_prob(fork, "y", 0.05, 0.01, rng)
            inside += 0.45 <= y <= 0.55
        assert inside >= 29

    def test_profile_matches_exact_graph(self, fork):
        rng = np.random.default_rng(7)
        profile = estimate_profile(fork, 0.05, 0.01, rng)
        profile.validate(fork)
        exact = exact_prob_graph(fork)
        for vid in fork.vertex_ids:
            assert abs(profile.probs[vid] - exact.probs[vid]) < 0.06

    def test_profile_invariant_enforced(self, fork):
        bad = MandatoryProfile(
            {v: 0.0 for v in fork.vertex_ids},
            method="sampled",
            epsilon=0.05,
            delta=0.01,
            sample_count=10,
        )
        with pytest.raises(ValueError, match="sample_count"):
            bad.validate(fork)
