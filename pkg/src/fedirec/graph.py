"""Directed follow-graph snapshots and their network statistics.

A snapshot holds the follow graph known at one point in time. Only a
subset of nodes (the *visited* set) has complete in/out neighbor lists;
every other node is known solely through edges incident to visited
nodes. Snapshots are treated as immutable once built or loaded; all
analysis functions are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Iterator

from fedirec.users import UserRef

SNAPSHOT_HEADER = "fedirec-graph"
SNAPSHOT_VERSION = "v1"


class GraphError(ValueError):
    """Violation of a graph invariant (self-loop, unknown node, ...)."""


class SnapshotFormatError(ValueError):
    """A snapshot file that cannot be parsed or fails validation."""


def utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


class GraphSnapshot:
    """Timestamped directed follow graph with a visited-node subset.

    Edges run follower -> followee. Mutating methods are intended for
    construction (crawl ingestion, file load); afterwards the snapshot
    should be treated as read-only.
    """

    def __init__(self, timestamp: datetime | None = None):
        self.timestamp = timestamp if timestamp is not None else utcnow()
        self._out: dict[UserRef, set[UserRef]] = {}
        self._in: dict[UserRef, set[UserRef]] = {}
        self._visited: set[UserRef] = set()
        self._n_edges = 0

    # -- construction ------------------------------------------------------

    def add_node(self, u: UserRef) -> None:
        if u not in self._out:
            self._out[u] = set()
            self._in[u] = set()

    def add_edge(self, u: UserRef, v: UserRef) -> None:
        """Add follow edge u -> v. Idempotent; self-loops are rejected."""
        if u == v:
            raise GraphError(f"self-loop rejected: {u}")
        self.add_node(u)
        self.add_node(v)
        if v not in self._out[u]:
            self._out[u].add(v)
            self._in[v].add(u)
            self._n_edges += 1

    def mark_visited(self, u: UserRef) -> None:
        self.add_node(u)
        self._visited.add(u)

    def copy(self, timestamp: datetime | None = None) -> "GraphSnapshot":
        g = GraphSnapshot(timestamp if timestamp is not None else self.timestamp)
        g._out = {u: set(s) for u, s in self._out.items()}
        g._in = {u: set(s) for u, s in self._in.items()}
        g._visited = set(self._visited)
        g._n_edges = self._n_edges
        return g

    # -- queries -----------------------------------------------------------

    @property
    def nodes(self) -> set[UserRef]:
        return set(self._out)

    @property
    def visited(self) -> set[UserRef]:
        return set(self._visited)

    @property
    def n_nodes(self) -> int:
        return len(self._out)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def __contains__(self, u: UserRef) -> bool:
        return u in self._out

    def is_visited(self, u: UserRef) -> bool:
        return u in self._visited

    def following(self, u: UserRef) -> set[UserRef]:
        """Users u follows. Complete only if u is visited."""
        self._require(u)
        return set(self._out[u])

    def followers(self, u: UserRef) -> set[UserRef]:
        self._require(u)
        return set(self._in[u])

    def has_edge(self, u: UserRef, v: UserRef) -> bool:
        return u in self._out and v in self._out[u]

    def undirected_degree(self, u: UserRef) -> int:
        """Distinct neighbors when every edge is read as bidirectional."""
        self._require(u)
        return len(self._out[u] | self._in[u])

    def edges(self) -> Iterator[tuple[UserRef, UserRef]]:
        for u in self._out:
            for v in self._out[u]:
                yield (u, v)

    def _require(self, u: UserRef) -> None:
        if u not in self._out:
            raise GraphError(f"unknown node: {u}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphSnapshot):
            return NotImplemented
        return (
            self.timestamp == other.timestamp
            and self._visited == other._visited
            and self._out == other._out
        )

    def __repr__(self) -> str:
        return (
            f"GraphSnapshot(|V|={self.n_nodes}, |V*|={len(self._visited)}, "
            f"|E|={self._n_edges}, t={self.timestamp.isoformat()})"
        )


def delta_follows(g1: GraphSnapshot, g2: GraphSnapshot, u: UserRef) -> set[UserRef]:
    """Follows u gained between the two snapshots (unfollows ignored).

    Requires u visited in both snapshots; otherwise its edge lists are
    incomplete and the delta is undefined.
    """
    if not (g1.is_visited(u) and g2.is_visited(u)):
        raise GraphError(f"delta undefined for non-visited node: {u}")
    return g2.following(u) - g1.following(u)


# -- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class GraphStats:
    """Summary statistics of one snapshot.

    avg_degree is directed |E| / |V|; avg_undirected_degree_visited is
    the mean bidirectionalized degree over visited nodes. Both are
    reported because the two conventions differ on partially crawled
    graphs.
    """

    n_nodes: int
    n_visited: int
    n_edges: int
    assortativity: float
    avg_degree: float
    avg_undirected_degree_visited: float
    ncc: float
    scc_fraction: float


def _undirected_neighbors(g: GraphSnapshot) -> dict[UserRef, set[UserRef]]:
    return {u: g._out[u] | g._in[u] for u in g._out}


def degree_assortativity(g: GraphSnapshot) -> float:
    """Pearson degree-degree correlation on the bidirectionalized graph.

    Each undirected edge whose endpoints both have known (visited)
    degrees contributes the pair (deg u, deg v) in both orientations.
    Degenerate inputs (fewer than two pairs, zero variance) fall back
    to 0.0.
    """
    und = _undirected_neighbors(g)
    visited = g.visited
    n = 0
    sx = sxx = sxy = 0.0
    for u in und:
        if u not in visited:
            continue
        du = len(und[u])
        for v in und[u]:
            if v not in visited:
                continue
            dv = len(und[v])
            # both (du, dv) and (dv, du) are accumulated because each
            # undirected edge is seen once from each endpoint
            n += 1
            sx += du
            sxx += du * du
            sxy += du * dv
    if n < 2:
        return 0.0
    mean = sx / n
    var = sxx / n - mean * mean
    if var <= 0.0:
        return 0.0
    cov = sxy / n - mean * mean
    return cov / var


def mean_clustering_coefficient(g: GraphSnapshot) -> float:
    """Mean local clustering coefficient of the bidirectionalized graph.

    Nodes with fewer than two neighbors contribute 0.
    """
    und = _undirected_neighbors(g)
    if not und:
        return 0.0
    total = 0.0
    for u, nbrs in und.items():
        d = len(nbrs)
        if d < 2:
            continue
        links = sum(len(und[v] & nbrs) for v in nbrs) // 2
        total += links / (d * (d - 1) / 2)
    return total / len(und)


def largest_scc_size(g: GraphSnapshot) -> int:
    """Size of the largest strongly connected component (Kosaraju)."""
    if g.n_nodes == 0:
        return 0
    order: list[UserRef] = []
    seen: set[UserRef] = set()
    for start in g._out:
        if start in seen:
            continue
        seen.add(start)
        stack: list[tuple[UserRef, Iterator[UserRef]]] = [(start, iter(g._out[start]))]
        while stack:
            node, it = stack[-1]
            for w in it:
                if w not in seen:
                    seen.add(w)
                    stack.append((w, iter(g._out[w])))
                    break
            else:
                order.append(node)
                stack.pop()
    assigned: set[UserRef] = set()
    best = 0
    for start in reversed(order):
        if start in assigned:
            continue
        size = 0
        frontier = [start]
        assigned.add(start)
        while frontier:
            node = frontier.pop()
            size += 1
            for w in g._in[node]:
                if w not in assigned:
                    assigned.add(w)
                    frontier.append(w)
        best = max(best, size)
    return best


def compute_stats(g: GraphSnapshot) -> GraphStats:
    if g.n_nodes == 0:
        raise GraphError("stats undefined for empty graph")
    visited = g.visited
    if visited:
        avg_und = sum(g.undirected_degree(u) for u in visited) / len(visited)
    else:
        avg_und = 0.0
    return GraphStats(
        n_nodes=g.n_nodes,
        n_visited=len(visited),
        n_edges=g.n_edges,
        assortativity=degree_assortativity(g),
        avg_degree=g.n_edges / g.n_nodes,
        avg_undirected_degree_visited=avg_und,
        ncc=mean_clustering_coefficient(g),
        scc_fraction=largest_scc_size(g) / g.n_nodes,
    )


# -- snapshot files ----------------------------------------------------------
#
# Line-oriented text, UTF-8, newline-terminated:
#   fedirec-graph v1 <timestamp-iso8601>
#   N <canonical-userref> <visited:0|1>
#   E <src-userref> <dst-userref>


def write_snapshot(g: GraphSnapshot, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{SNAPSHOT_HEADER} {SNAPSHOT_VERSION} {g.timestamp.isoformat()}\n")
        for u in sorted(g.nodes):
            fh.write(f"N {u.canonical} {1 if g.is_visited(u) else 0}\n")
        for u, v in sorted(g.edges()):
            fh.write(f"E {u.canonical} {v.canonical}\n")


def read_snapshot(path) -> GraphSnapshot:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        parts = header.split(" ")
        if len(parts) != 3 or parts[0] != SNAPSHOT_HEADER:
            raise SnapshotFormatError(f"bad header line: {header!r}")
        if parts[1] != SNAPSHOT_VERSION:
            raise SnapshotFormatError(f"unsupported snapshot version: {parts[1]!r}")
        try:
            ts = datetime.fromisoformat(parts[2])
        except ValueError as exc:
            raise SnapshotFormatError(f"bad timestamp: {parts[2]!r}") from exc
        g = GraphSnapshot(ts)
        declared: set[UserRef] = set()
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split(" ")
            try:
                if fields[0] == "N" and len(fields) == 3:
                    u = UserRef.parse(fields[1])
                    if fields[2] not in ("0", "1"):
                        raise SnapshotFormatError(
                            f"line {lineno}: bad visited flag {fields[2]!r}"
                        )
                    g.add_node(u)
                    declared.add(u)
                    if fields[2] == "1":
                        g.mark_visited(u)
                elif fields[0] == "E" and len(fields) == 3:
                    u = UserRef.parse(fields[1])
                    v = UserRef.parse(fields[2])
                    if u not in declared or v not in declared:
                        raise SnapshotFormatError(
                            f"line {lineno}: edge references undeclared node"
                        )
                    g.add_edge(u, v)
                else:
                    raise SnapshotFormatError(f"line {lineno}: unrecognized line {line!r}")
            except (GraphError, ValueError) as exc:
                if isinstance(exc, SnapshotFormatError):
                    raise
                raise SnapshotFormatError(f"line {lineno}: {exc}") from exc
        return g


def build_snapshot(
    edges: Iterable[tuple[UserRef, UserRef]],
    visited: Iterable[UserRef] = (),
    nodes: Iterable[UserRef] = (),
    timestamp: datetime | None = None,
) -> GraphSnapshot:
    """Convenience constructor used heavily by tests and generators."""
    g = GraphSnapshot(timestamp)
    for u in nodes:
        g.add_node(u)
    for u, v in edges:
        g.add_edge(u, v)
    for u in visited:
        g.mark_visited(u)
    return g
