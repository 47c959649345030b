import random

import pytest
from hypothesis import given, strategies as st

from fedirec.federation import FederationClient, FetchFailed, SimulatedBackend
from fedirec.graph import build_snapshot
from fedirec.sampling import (
    WalkConfig,
    acceptance_probability,
    ego_walk,
    mhrw_run,
    write_visit_counts,
)
from tests.conftest import random_directed_graph, u, users


def sim_client(snapshot, **kwargs) -> FederationClient:
    return FederationClient(SimulatedBackend(snapshot, **kwargs))


class TestAcceptanceProbability:
    def test_moving_downhill_is_certain(self):
        assert acceptance_probability(4, 2) == 1.0

    def test_moving_uphill_is_ratio(self):
        assert acceptance_probability(2, 4) == 0.5

    def test_equal_degree_is_certain(self):
        assert acceptance_probability(3, 3) == 1.0

    def test_zero_degree_candidate_is_certain(self):
        assert acceptance_probability(5, 0) == 1.0

    @given(a=st.integers(1, 1000), b=st.integers(1, 1000))
    def test_detailed_balance_ratio(self, a, b):
        # p(a->b) * deg-share cancels: p(a->b)/p(b->a) == deg(a)/deg(b)
        fwd = acceptance_probability(a, b)
        bwd = acceptance_probability(b, a)
        assert fwd == pytest.approx(min(1.0, a / b))
        assert fwd * max(a, b) == pytest.approx(bwd * max(a, b) * (a / b) if a < b else max(a, b) * 1.0)


class TestWalkConfig:
    def test_negative_iterations_rejected(self):
        with pytest.raises(ValueError):
            WalkConfig(u("a"), iterations=-1)

    def test_gamma_bounds_rejected(self):
        for gamma in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                WalkConfig(u("a"), gamma=gamma)

    def test_defaults(self):
        cfg = WalkConfig(u("a"))
        assert cfg.iterations == 200
        assert cfg.gamma == 0.8


@pytest.fixture
def walk_graph():
    rng = random.Random(7)
    return random_directed_graph(30, 0.12, rng)


class TestMHRW:
    def test_zero_iterations_visits_only_seed(self, toy_graph):
        seed = u("n0")
        result, crawl = mhrw_run(WalkConfig(seed, iterations=0), sim_client(toy_graph))
        assert result.visited_order == (seed,)
        assert dict(result.visit_counts) == {seed: 1}
        assert result.fetch_count == 1
        assert seed in crawl.visited

    def test_trajectory_length_and_count_sum(self, walk_graph):
        cfg = WalkConfig(u("u00"), iterations=150, rng_seed=3)
        result, _ = mhrw_run(cfg, sim_client(walk_graph))
        assert len(result.visited_order) == 151
        assert sum(result.visit_counts.values()) == 151
        assert result.rng_algorithm == "mt19937"

    def test_deterministic_for_fixed_seed(self, walk_graph):
        cfg = WalkConfig(u("u00"), iterations=120, rng_seed=9)
        r1, g1 = mhrw_run(cfg, sim_client(walk_graph))
        r2, g2 = mhrw_run(cfg, sim_client(walk_graph))
        assert r1.visited_order == r2.visited_order
        assert sorted(g1.edges()) == sorted(g2.edges())

    def test_different_seed_diverges(self, walk_graph):
        base = WalkConfig(u("u00"), iterations=120, rng_seed=0)
        other = WalkConfig(u("u00"), iterations=120, rng_seed=1)
        r1, _ = mhrw_run(base, sim_client(walk_graph))
        r2, _ = mhrw_run(other, sim_client(walk_graph))
        assert r1.visited_order != r2.visited_order

    def test_consecutive_states_are_neighbors_or_stays(self, walk_graph):
        result, _ = mhrw_run(WalkConfig(u("u00"), iterations=200, rng_seed=5),
                             sim_client(walk_graph))
        for prev, cur in zip(result.visited_order, result.visited_order[1:]):
            if prev != cur:
                assert walk_graph.has_edge(prev, cur) or walk_graph.has_edge(cur, prev)

    def test_fetch_count_equals_distinct_proposals(self, walk_graph):
        result, crawl = mhrw_run(WalkConfig(u("u00"), iterations=100, rng_seed=2),
                                 sim_client(walk_graph))
        assert result.fetch_count == len(crawl.visited)
        assert set(result.visit_counts) <= crawl.visited

    def test_seed_fetch_failure_surfaces(self, toy_graph):
        client = sim_client(toy_graph, failures={u("n0"): FetchFailed})
        with pytest.raises(FetchFailed):
            mhrw_run(WalkConfig(u("n0"), iterations=5), client)

    def test_dead_candidate_is_skipped_and_excluded(self):
        # n0 <-> n1, n0 <-> dead: the dead neighbor is proposed, fails,
        # and is never proposed (or visited) again.
        a, b, dead = u("n0"), u("n1"), u("dead")
        g = build_snapshot([(a, b), (b, a), (a, dead), (dead, a)],
                           visited=[a, b, dead])
        client = sim_client(g, failures={dead: FetchFailed})
        result, crawl = mhrw_run(WalkConfig(a, iterations=80, rng_seed=0), client)
        assert dead in result.dead_candidates
        assert dead not in result.visit_counts
        assert dead not in crawl.visited
        assert len(result.visited_order) == 81
        assert set(result.visit_counts) == {a, b}

    def test_isolated_seed_self_transitions(self):
        seed = u("alone")
        g = build_snapshot([], visited=[seed], nodes=[seed])
        result, _ = mhrw_run(WalkConfig(seed, iterations=10), sim_client(g))
        assert dict(result.visit_counts) == {seed: 11}
        assert result.zero_neighbor_steps == 10

    def test_trace_matches_independent_replay(self, walk_graph):
        """Oracle: replay the documented protocol directly off the fixture.

        Proposal = sorted bidirectional neighbors indexed by randrange;
        acceptance draw always follows the proposal fetch; acceptance
        ratio uses bidirectionalized degrees.
        """
        cfg = WalkConfig(u("u07"), iterations=300, rng_seed=42)
        result, _ = mhrw_run(cfg, sim_client(walk_graph))

        rng = random.Random(cfg.rng_seed)
        current = cfg.seed_node
        expected = [current]
        deg = lambda x: len(walk_graph.following(x) | walk_graph.followers(x))
        for _ in range(cfg.iterations):
            nbrs = sorted(walk_graph.following(current) | walk_graph.followers(current))
            w = nbrs[rng.randrange(len(nbrs))]
            if rng.random() < min(1.0, deg(current) / deg(w)):
                current = w
            expected.append(current)
        assert list(result.visited_order) == expected


class TestEgoWalk:
    def test_tiny_gamma_degenerates_to_seed_plus_followings(self):
        seed, b, c, f = u("seed"), u("b"), u("c"), u("follower")
        g = build_snapshot([(seed, b), (seed, c), (f, seed), (b, c)],
                           visited=[seed, b, c, f])
        result, vicinity = ego_walk(
            WalkConfig(seed, iterations=200, rng_seed=1, gamma=1e-12), sim_client(g))
        assert dict(result.visit_counts) == {seed: 201}
        assert set(vicinity.nodes) == {seed, b, c}
        assert vicinity.visited == {seed}
        assert f not in vicinity.nodes

    def test_vicinity_contains_only_out_edges(self, toy_graph):
        result, vicinity = ego_walk(WalkConfig(u("n0"), iterations=100, rng_seed=4),
                                    sim_client(toy_graph))
        for src, dst in vicinity.edges():
            assert src in vicinity.visited
            assert toy_graph.has_edge(src, dst)

    def test_hermit_seed_forces_jumps(self):
        seed = u("hermit")
        follower = u("fan")
        g = build_snapshot([(follower, seed)], visited=[seed, follower])
        result, vicinity = ego_walk(WalkConfig(seed, iterations=200, rng_seed=0),
                                    sim_client(g))
        assert dict(result.visit_counts) == {seed: 201}
        assert set(vicinity.nodes) == {seed}
        assert result.zero_neighbor_steps > 0

    def test_followers_never_fetched(self):
        # Walk follows out-edges only, so a pure follower is never requested.
        seed, out, fan = u("seed"), u("out"), u("fan")
        g = build_snapshot([(seed, out), (fan, seed), (out, seed)],
                           visited=[seed, out, fan])
        backend = SimulatedBackend(g)
        ego_walk(WalkConfig(seed, iterations=150, rng_seed=2), FederationClient(backend))
        assert fan not in backend.fetch_log

    def test_dead_choice_is_self_transition(self):
        seed, dead = u("seed"), u("dead")
        g = build_snapshot([(seed, dead), (dead, seed)], visited=[seed, dead])
        client = sim_client(g, failures={dead: FetchFailed})
        result, vicinity = ego_walk(WalkConfig(seed, iterations=60, rng_seed=0), client)
        assert dict(result.visit_counts) == {seed: 61}
        assert dead in result.dead_candidates
        assert set(vicinity.visited) == {seed}

    def test_trace_matches_independent_replay(self, walk_graph):
        """Oracle replay: gamma draw first, then the neighbor choice."""
        cfg = WalkConfig(u("u03"), iterations=250, rng_seed=11, gamma=0.8)
        result, _ = ego_walk(cfg, sim_client(walk_graph))

        rng = random.Random(cfg.rng_seed)
        seed = cfg.seed_node
        current = seed
        expected = [current]
        for _ in range(cfg.iterations):
            if rng.random() >= cfg.gamma:
                current = seed
            else:
                nbrs = sorted(walk_graph.following(current))
                if not nbrs:
                    current = seed
                else:
                    current = nbrs[rng.randrange(len(nbrs))]
            expected.append(current)
        assert list(result.visited_order) == expected

    def test_visit_mass_concentrates_near_seed(self, walk_graph):
        # Restarts keep the seed the modal node for any gamma < 1.
        cfg = WalkConfig(u("u00"), iterations=400, rng_seed=6, gamma=0.5)
        result, _ = ego_walk(cfg, sim_client(walk_graph))
        assert result.visit_counts[u("u00")] == max(result.visit_counts.values())


class TestVisitCountExport:
    def test_sorted_plain_text(self, tmp_path, toy_graph):
        result, _ = mhrw_run(WalkConfig(u("n0"), iterations=40, rng_seed=0),
                             sim_client(toy_graph))
        out = tmp_path / "counts.txt"
        write_visit_counts(result, out)
        lines = out.read_text().splitlines()
        assert len(lines) == len(result.visit_counts)
        refs = [line.split()[0] for line in lines]
        assert refs == sorted(refs)
        total = sum(int(line.split()[1]) for line in lines)
        assert total == 41
