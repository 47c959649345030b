"""Graph sampling walks over the federation client.

Two walks share the fetch/caching machinery:

* ``mhrw_run`` — Metropolis–Hastings random walk on the
  bidirectionalized graph. A proposed neighbor w is accepted with
  probability min(1, deg(current)/deg(w)); rejections are
  self-transitions and are counted, which is what makes the stationary
  visit distribution uniform over nodes instead of degree-biased.
* ``ego_walk`` — short restart walk around one user ("circle of
  trust"): with probability gamma step to a random out-neighbor,
  otherwise jump back to the seed. Its fetched records form the
  vicinity snapshot used for online recommendation.

Both walks are deterministic given (rng_seed, backend fixture). The
RNG is Python's Mersenne Twister; the algorithm tag is recorded in the
result for provenance.

Unreachable or undecodable candidates (dead instances, deleted
profiles, robots-disallowed hosts) are treated as rejected proposals:
the walk stays put, and the candidate is excluded from all future
proposals. The exclusion is global to the walk rather than per-node —
a dead profile is dead regardless of which neighbor proposed it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping

from fedirec.federation import FederationClient, FederationError, NeighborRecord
from fedirec.graph import GraphSnapshot, utcnow
from fedirec.users import UserRef

RNG_ALGORITHM = "mt19937"
DEFAULT_ITERATIONS = 200
DEFAULT_GAMMA = 0.8


@dataclass(frozen=True)
class WalkConfig:
    """Parameters shared by both walk kinds (gamma is ego-walk only)."""

    seed_node: UserRef
    iterations: int = DEFAULT_ITERATIONS
    rng_seed: int = 0
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")


@dataclass(frozen=True)
class WalkResult:
    """Trajectory and bookkeeping of one walk.

    visited_order is the full node trajectory (seed first, one entry
    per step thereafter), so sum(visit_counts) == iterations + 1 and
    transition frequencies can be audited. fetch_count counts distinct
    users whose neighbor lists were actually fetched.
    """

    visited_order: tuple[UserRef, ...]
    visit_counts: Mapping[UserRef, int]
    fetch_count: int
    rng_algorithm: str = RNG_ALGORITHM
    zero_neighbor_steps: int = 0
    dead_candidates: frozenset[UserRef] = field(default_factory=frozenset)


def acceptance_probability(deg_current: int, deg_candidate: int) -> float:
    """MHRW acceptance ratio min(1, deg_current/deg_candidate).

    Depends on degrees only, never on node identity. A zero-degree
    candidate is vacuously accepted (the limit of the ratio); it can
    only arise from asymmetric neighbor records.
    """
    if deg_candidate <= 0:
        return 1.0
    return min(1.0, deg_current / deg_candidate)


class _Walker:
    """Shared fetch bookkeeping: records seen, dead candidates, counts."""

    def __init__(self, client: FederationClient):
        self.client = client
        self.records: dict[UserRef, NeighborRecord] = {}
        self.dead: set[UserRef] = set()

    def fetch(self, user: UserRef) -> NeighborRecord | None:
        """Fetch (or recall) a user's record; None if the user is dead."""
        if user in self.dead:
            return None
        rec = self.records.get(user)
        if rec is not None:
            return rec
        try:
            rec = self.client.fetch_neighbors(user)
        except FederationError:
            self.dead.add(user)
            return None
        self.records[user] = rec
        return rec

    def undirected_neighbors(self, rec: NeighborRecord) -> list[UserRef]:
        """Live bidirectionalized neighbors in canonical order."""
        return sorted((rec.following | rec.followers) - self.dead)

    def out_neighbors(self, rec: NeighborRecord) -> list[UserRef]:
        return sorted(rec.following - self.dead)

    def degree(self, rec: NeighborRecord) -> int:
        return len(rec.following | rec.followers)

    def snapshot(self, include_followers: bool = True) -> GraphSnapshot:
        """All fetched nodes and their known edges, fetched set as visited.

        The ego walk passes include_followers=False: its vicinity is
        the interest graph around the seed (out-edges of fetched
        nodes), so in the gamma->0 limit it degenerates to exactly the
        seed plus the seed's followings.
        """
        g = GraphSnapshot(utcnow())
        for user, rec in self.records.items():
            g.mark_visited(user)
            for v in rec.following:
                g.add_edge(user, v)
            if include_followers:
                for w in rec.followers:
                    g.add_edge(w, user)
        return g


def mhrw_run(cfg: WalkConfig, client: FederationClient) -> tuple[WalkResult, GraphSnapshot]:
    """Run the Metropolis–Hastings walk; returns (result, crawl snapshot).

    Per step: propose w uniformly from the current node's live
    bidirectionalized neighbors, fetch w (the acceptance ratio needs
    deg(w); the fetch stays cached even on rejection), accept with
    min(1, deg(current)/deg(w)), else self-transition. The post-step
    node is counted once per step. A seed fetch failure propagates as
    the federation error.
    """
    walker = _Walker(client)
    rng = random.Random(cfg.rng_seed)
    current = cfg.seed_node
    current_rec = walker.client.fetch_neighbors(current)  # seed failure surfaces
    walker.records[current] = current_rec
    trajectory = [current]
    zero_neighbor_steps = 0

    for _ in range(cfg.iterations):
        candidates = walker.undirected_neighbors(current_rec)
        if not candidates:
            zero_neighbor_steps += 1
            trajectory.append(current)
            continue
        proposal = candidates[rng.randrange(len(candidates))]
        proposal_rec = walker.fetch(proposal)
        if proposal_rec is None:
            trajectory.append(current)  # dead candidate: rejected proposal
            continue
        p_accept = acceptance_probability(walker.degree(current_rec), walker.degree(proposal_rec))
        if rng.random() < p_accept:
            current, current_rec = proposal, proposal_rec
        trajectory.append(current)

    counts: dict[UserRef, int] = {}
    for u in trajectory:
        counts[u] = counts.get(u, 0) + 1
    result = WalkResult(
        visited_order=tuple(trajectory),
        visit_counts=counts,
        fetch_count=len(walker.records),
        zero_neighbor_steps=zero_neighbor_steps,
        dead_candidates=frozenset(walker.dead),
    )
    return result, walker.snapshot()


def ego_walk(cfg: WalkConfig, client: FederationClient) -> tuple[WalkResult, GraphSnapshot]:
    """Restart walk around cfg.seed_node; returns (result, vicinity).

    Per step: draw u ~ U[0,1); if u < gamma move to a uniformly random
    live out-neighbor of the current node, else jump to the seed. A
    node with no live out-neighbors forces a jump. A dead choice
    (fetch failure) is a self-transition, like the MHRW rule. The
    vicinity snapshot holds every fetched node and its known edges, so
    it never contains a node unreachable from the seed via out-edges.
    """
    walker = _Walker(client)
    rng = random.Random(cfg.rng_seed)
    seed = cfg.seed_node
    seed_rec = walker.client.fetch_neighbors(seed)
    walker.records[seed] = seed_rec
    current, current_rec = seed, seed_rec
    trajectory = [current]
    zero_neighbor_steps = 0

    for _ in range(cfg.iterations):
        jump = rng.random() >= cfg.gamma
        if not jump:
            candidates = walker.out_neighbors(current_rec)
            if not candidates:
                zero_neighbor_steps += 1
                jump = True
            else:
                choice = candidates[rng.randrange(len(candidates))]
                chosen_rec = walker.fetch(choice)
                if chosen_rec is None:
                    trajectory.append(current)
                    continue
                current, current_rec = choice, chosen_rec
        if jump:
            current, current_rec = seed, seed_rec
        trajectory.append(current)

    counts: dict[UserRef, int] = {}
    for u in trajectory:
        counts[u] = counts.get(u, 0) + 1
    result = WalkResult(
        visited_order=tuple(trajectory),
        visit_counts=counts,
        fetch_count=len(walker.records),
        zero_neighbor_steps=zero_neighbor_steps,
        dead_candidates=frozenset(walker.dead),
    )
    return result, walker.snapshot(include_followers=False)


def write_visit_counts(result: WalkResult, path) -> None:
    """Sidecar export: one "<userref> <count>" line per visited node."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for user in sorted(result.visit_counts):
            fh.write(f"{user.canonical} {result.visit_counts[user]}\n")
