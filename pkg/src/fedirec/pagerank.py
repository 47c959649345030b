"""Personalized PageRank recommender over the directed follow graph.

Power iteration on p <- lambda * M^T p + (1 - lambda) * e_seed, where M
is the out-degree-normalized adjacency and all mass of dangling nodes
(no out-edges) is redirected to the seed rather than spread uniformly:
in personalized PageRank every teleport targets the seed, and dangling
redirection keeps that semantics while conserving probability mass.

Nodes are ordered canonically and the matrix structure is fixed before
iterating, so identical inputs give bit-identical score vectors and
iteration counts. Runs on the full known graph, including edges
incident to unvisited nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import sparse

from fedirec.graph import GraphSnapshot
from fedirec.ranking import RankedList
from fedirec.users import UserRef

DAMPING = 0.85


class PPRError(ValueError):
    """Personalized-PageRank request violating a precondition."""


@dataclass(frozen=True)
class PPRConfig:
    damping: float = DAMPING
    tolerance: float = 1e-10  # L1 change between iterations
    max_iterations: int = 100

    def __post_init__(self):
        if not (0.0 < self.damping < 1.0):
            raise ValueError("damping must lie in (0, 1)")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class ScoreVector:
    """Stationary-score estimate for every node in the snapshot."""

    scores: Mapping[UserRef, float]
    iterations_used: int
    converged: bool

    def __post_init__(self):
        total = sum(self.scores.values())
        if self.scores and abs(total - 1.0) > 1e-9:
            raise ValueError(f"scores must sum to 1 (got {total!r})")
        if any(s < 0.0 for s in self.scores.values()):
            raise ValueError("scores must be non-negative")


def personalized_pagerank(g: GraphSnapshot, seed: UserRef, cfg: PPRConfig | None = None) -> ScoreVector:
    if cfg is None:
        cfg = PPRConfig()
    if seed not in g:
        raise PPRError(f"seed not in graph: {seed}")
    nodes = sorted(g.nodes)
    index = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    s = index[seed]

    out_degree = np.zeros(n, dtype=np.int64)
    rows: list[int] = []
    cols: list[int] = []
    for u in nodes:
        out_degree[index[u]] = len(g.following(u))
    data: list[float] = []
    for u, v in g.edges():
        i, j = index[u], index[v]
        rows.append(j)  # transposed: contribution of i lands at j
        cols.append(i)
        data.append(1.0 / out_degree[i])
    mt = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
    dangling = out_degree == 0

    lam = cfg.damping
    p = np.zeros(n, dtype=np.float64)
    p[s] = 1.0
    converged = False
    iterations = 0
    for _ in range(cfg.max_iterations):
        nxt = lam * (mt @ p)
        nxt[s] += lam * float(p[dangling].sum()) + (1.0 - lam)
        delta = float(np.abs(nxt - p).sum())
        p = nxt
        iterations += 1
        if delta < cfg.tolerance:
            converged = True
            break
    return ScoreVector(
        scores={u: float(p[index[u]]) for u in nodes},
        iterations_used=iterations,
        converged=converged,
    )


def recommend_ppr(target: UserRef, g: GraphSnapshot, cfg: PPRConfig | None = None,
                  k: int = 10) -> RankedList:
    """Top-k nodes by personalized PageRank score from the target.

    The target and its known followings are excluded; ties break by
    canonical user reference. A pool smaller than k yields a short
    list (flagged on the RankedList).
    """
    if k < 1:
        raise PPRError("k must be >= 1")
    vector = personalized_pagerank(g, target, cfg)
    excluded = g.following(target) | {target}
    scored = [
        (score, user) for user, score in vector.scores.items() if user not in excluded
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return RankedList(
        target=target,
        system_id="ppr",
        items=tuple((user, score) for score, user in scored[:k]),
        requested_k=k,
    )
