import random

import numpy as np
import pytest

from fedirec.graph import build_snapshot
from fedirec.pagerank import (
    PPRConfig,
    PPRError,
    personalized_pagerank,
    recommend_ppr,
)
from tests.conftest import random_directed_graph, u, users


def dense_reference(g, seed, damping):
    """Oracle: solve the stationary system directly with dense algebra.

    (I - lam * A) x = (1 - lam) * e_seed, where A is M^T with dangling
    columns replaced by e_seed (all dangling mass returns to the seed).
    """
    nodes = sorted(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    a = np.zeros((n, n))
    for v in nodes:
        outs = sorted(g.following(v))
        if outs:
            for w in outs:
                a[index[w], index[v]] = 1.0 / len(outs)
        else:
            a[index[seed], index[v]] = 1.0
    rhs = np.zeros(n)
    rhs[index[seed]] = 1.0 - damping
    x = np.linalg.solve(np.eye(n) - damping * a, rhs)
    return {v: x[index[v]] for v in nodes}


class TestConfig:
    def test_damping_bounds(self):
        for bad in (0.0, 1.0, -0.3, 1.2):
            with pytest.raises(ValueError):
                PPRConfig(damping=bad)

    def test_tolerance_and_iterations(self):
        with pytest.raises(ValueError):
            PPRConfig(tolerance=0.0)
        with pytest.raises(ValueError):
            PPRConfig(max_iterations=0)


class TestScores:
    def test_single_node_absorbs_everything(self):
        lone = u("lone")
        g = build_snapshot([], visited=[lone], nodes=[lone])
        vec = personalized_pagerank(g, lone)
        assert vec.scores[lone] == pytest.approx(1.0, abs=1e-12)
        assert vec.converged

    def test_two_node_cycle_closed_form(self):
        # a -> b -> a. Balance equations give x_a = 1/(1+lam),
        # x_b = lam/(1+lam).
        a, b = u("a"), u("b")
        g = build_snapshot([(a, b), (b, a)], visited=[a, b])
        lam = 0.85
        vec = personalized_pagerank(g, a, PPRConfig(damping=lam, tolerance=1e-14,
                                                    max_iterations=2000))
        assert vec.scores[a] == pytest.approx(1 / (1 + lam), abs=1e-12)
        assert vec.scores[b] == pytest.approx(lam / (1 + lam), abs=1e-12)

    def test_dangling_node_returns_mass_to_seed(self):
        # a -> b, b dangles: all of b's mass teleports back to a.
        # x_a = 1/(1+lam), x_b = lam/(1+lam) — same system as the cycle.
        a, b = u("a"), u("b")
        g = build_snapshot([(a, b)], visited=[a, b])
        lam = 0.85
        vec = personalized_pagerank(g, a, PPRConfig(tolerance=1e-14, max_iterations=2000))
        assert vec.scores[a] == pytest.approx(1 / (1 + lam), abs=1e-12)
        assert vec.scores[b] == pytest.approx(lam / (1 + lam), abs=1e-12)

    def test_matches_dense_linear_solve(self):
        rng = random.Random(29)
        cfg = PPRConfig(tolerance=1e-12, max_iterations=400)
        for trial in range(5):
            g = random_directed_graph(15, 0.2, rng)
            seed = u("u03")
            vec = personalized_pagerank(g, seed, cfg)
            expected = dense_reference(g, seed, cfg.damping)
            for node, score in vec.scores.items():
                assert score == pytest.approx(expected[node], abs=1e-8)

    def test_mass_conservation(self):
        rng = random.Random(31)
        g = random_directed_graph(40, 0.08, rng)
        vec = personalized_pagerank(g, u("u00"))
        assert sum(vec.scores.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(s >= 0 for s in vec.scores.values())

    def test_seed_keeps_at_least_teleport_share(self):
        rng = random.Random(37)
        for trial in range(3):
            g = random_directed_graph(25, 0.15, rng)
            vec = personalized_pagerank(g, u("u05"))
            assert vec.scores[u("u05")] >= (1 - 0.85) - 1e-12

    def test_unreachable_nodes_score_zero(self):
        # Two disjoint 2-cycles; walk from a never reaches c or d.
        a, b, c, d = users(4, prefix="z")
        g = build_snapshot([(a, b), (b, a), (c, d), (d, c)], visited=[a, b, c, d])
        vec = personalized_pagerank(g, a)
        assert vec.scores[c] == 0.0
        assert vec.scores[d] == 0.0

    def test_bit_identical_across_runs(self):
        rng = random.Random(41)
        g = random_directed_graph(30, 0.1, rng)
        v1 = personalized_pagerank(g, u("u02"))
        v2 = personalized_pagerank(g, u("u02"))
        assert v1.scores == v2.scores  # exact float equality
        assert v1.iterations_used == v2.iterations_used

    def test_unknown_seed_rejected(self, toy_graph):
        with pytest.raises(PPRError):
            personalized_pagerank(toy_graph, u("ghost"))

    def test_iteration_budget_respected(self):
        rng = random.Random(43)
        g = random_directed_graph(20, 0.2, rng)
        vec = personalized_pagerank(g, u("u00"), PPRConfig(tolerance=1e-300,
                                                           max_iterations=7))
        assert vec.iterations_used == 7
        assert not vec.converged


class TestRecommend:
    def test_excludes_target_and_followings(self, toy_graph):
        ranked = recommend_ppr(u("n0"), toy_graph, k=4)
        assert u("n0") not in ranked.users
        assert not (set(ranked.users) & toy_graph.following(u("n0")))
        assert ranked.system_id == "ppr"

    def test_star_spokes_tie_broken_canonically(self):
        hub = u("hub")
        spokes = users(4, prefix="s")
        edges = [(hub, s) for s in spokes] + [(s, hub) for s in spokes]
        g = build_snapshot(edges, visited=[hub] + spokes)
        lone = u("watcher")
        g.mark_visited(lone)
        g.add_edge(lone, hub)
        ranked = recommend_ppr(lone, g, k=4)
        # all four spokes tie exactly; canonical order decides
        assert list(ranked.users) == sorted(spokes)
        scores = [s for _, s in ranked.items]
        assert len(set(scores)) == 1

    def test_short_list_flagged(self):
        a, b = u("a"), u("b")
        g = build_snapshot([(a, b), (b, a)], visited=[a, b])
        ranked = recommend_ppr(a, g, k=10)
        assert ranked.short
        assert len(ranked.items) == 0  # b is already followed

    def test_ordering_matches_score_vector(self):
        rng = random.Random(47)
        g = random_directed_graph(25, 0.12, rng)
        target = u("u01")
        ranked = recommend_ppr(target, g, k=10)
        vec = personalized_pagerank(g, target)
        excluded = g.following(target) | {target}
        expected = sorted(((user, score) for user, score in vec.scores.items()
                           if user not in excluded),
                          key=lambda pair: (-pair[1], pair[0]))[:10]
        assert list(ranked.items) == expected

    def test_bad_k_rejected(self, toy_graph):
        with pytest.raises(PPRError):
            recommend_ppr(u("n0"), toy_graph, k=0)
