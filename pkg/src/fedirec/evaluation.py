"""Offline evaluation harness for follow recommenders.

Ground truth for a target user is the set of follows they added
between a training snapshot t1 and a test snapshot t2; systems see
only t1. For each system the harness reports MAP, a full p@k curve,
and s@{1,5,10}, with each row significance-marked against the previous
row by a two-tailed paired t-test at p < 0.01 (mark: up-triangle
better, down-triangle worse, degree sign not significant).

A planted-community synthetic graph pair stands in for a live crawl:
new follows land predominantly inside a node's community, so both
profile-overlap and graph-proximity systems have signal to find while
a random baseline does not.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from math import sqrt
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.special import stdtr

from fedirec.cf import ProfileStrategy, build_index, recommend_cf
from fedirec.graph import GraphSnapshot, delta_follows
from fedirec.pagerank import PPRConfig, recommend_ppr
from fedirec.ranking import RankedList
from fedirec.seeds import derive_seed
from fedirec.users import UserRef

DEFAULT_LIST_LENGTH = 100
SIGNIFICANCE_ALPHA = 0.01
MARK_BETTER = "▲"  # ▲
MARK_WORSE = "▼"  # ▼
MARK_NONE = "°"  # °
MARK_ABSENT = "-"  # first row: nothing to compare against

# A recommender sees the training snapshot only: the harness never
# hands t2 to this callable (train/test hygiene by interface shape).
RecommenderFn = Callable[[UserRef, GraphSnapshot, int], RankedList]


class EvalError(ValueError):
    """Evaluation request outside the task contract."""


@dataclass(frozen=True)
class EvalTask:
    """A t1/t2 snapshot pair and the users evaluable on it.

    Targets are the users visited in both snapshots that gained at
    least one follow: only they have defined, non-empty ground truth.
    """

    train: GraphSnapshot
    test: GraphSnapshot
    targets: frozenset[UserRef]
    list_length: int = DEFAULT_LIST_LENGTH

    @classmethod
    def build(cls, train: GraphSnapshot, test: GraphSnapshot,
              list_length: int = DEFAULT_LIST_LENGTH) -> "EvalTask":
        both = train.visited & test.visited
        targets = frozenset(u for u in both if delta_follows(train, test, u))
        return cls(train=train, test=test, targets=targets, list_length=list_length)


def ground_truth(task: EvalTask, u: UserRef) -> set[UserRef]:
    if u not in task.targets:
        raise EvalError(f"not an evaluation target: {u}")
    return delta_follows(task.train, task.test, u)


# -- rank metrics ------------------------------------------------------------


def precision_at_k(rl: RankedList, relevant: set[UserRef], k: int) -> float:
    """|top-k ∩ relevant| / k; short lists count as padded with misses."""
    if k < 1:
        raise EvalError("k must be >= 1")
    hits = sum(1 for u, _ in rl.items[:k] if u in relevant)
    return hits / k


def precision_curve(rl: RankedList, relevant: set[UserRef], k_max: int) -> list[float]:
    """[p@1, ..., p@k_max] via one pass of cumulative hit counts."""
    curve: list[float] = []
    hits = 0
    for k in range(1, k_max + 1):
        if k <= len(rl.items) and rl.items[k - 1][0] in relevant:
            hits += 1
        curve.append(hits / k)
    return curve


def average_precision(rl: RankedList, relevant: set[UserRef]) -> float:
    """AP with denominator |relevant|; unretrieved relevants add 0."""
    if not relevant:
        raise EvalError("average precision undefined for empty relevant set")
    total = 0.0
    hits = 0
    for i, (u, _) in enumerate(rl.items, start=1):
        if u in relevant:
            hits += 1
            total += hits / i
    return total / len(relevant)


def success_at_k(rl: RankedList, relevant: set[UserRef], k: int) -> int:
    if k < 1:
        raise EvalError("k must be >= 1")
    return 1 if any(u in relevant for u, _ in rl.items[:k]) else 0


@dataclass(frozen=True)
class PairedTestResult:
    t_statistic: float
    p_value: float
    degenerate: bool  # zero-variance differences: p undefined, treat as n.s.


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> PairedTestResult:
    """Two-tailed paired t-test on same-target metric vectors."""
    if len(a) != len(b):
        raise EvalError("paired vectors must have equal length")
    if len(a) < 2:
        raise EvalError("paired t-test needs at least two pairs")
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return PairedTestResult(t_statistic=float("nan"), p_value=1.0, degenerate=True)
    t = float(d.mean()) / (sd / sqrt(len(d)))
    p = 2.0 * float(stdtr(len(d) - 1, -abs(t)))
    return PairedTestResult(t_statistic=t, p_value=p, degenerate=False)


def significance_mark(current: Sequence[float], previous: Sequence[float],
                      alpha: float = SIGNIFICANCE_ALPHA) -> str:
    test = paired_t_test(current, previous)
    if test.degenerate or test.p_value >= alpha:
        return MARK_NONE
    return MARK_BETTER if float(np.mean(current)) > float(np.mean(previous)) else MARK_WORSE


# -- systems -----------------------------------------------------------------


def random_recommender(g: GraphSnapshot, target: UserRef, k: int, rng_seed: int) -> RankedList:
    """Uniform sample (without replacement) of non-followed strangers."""
    pool = sorted(g.nodes - {target} - g.following(target))
    if len(pool) < k:
        raise EvalError(f"candidate pool ({len(pool)}) smaller than k={k}")
    rng = random.Random(rng_seed)
    picks = rng.sample(pool, k)
    return RankedList(
        target=target,
        system_id="random",
        items=tuple((u, 0.0) for u in picks),
        requested_k=k,
    )


def make_default_systems(master_seed: int,
                         ppr_cfg: PPRConfig | None = None
                         ) -> list[tuple[str, RecommenderFn]]:
    """The five standard report rows, worst-expected first.

    Row order fixes the significance-mark chain: random, then the
    three profile strategies, then personalized PageRank. Indexes are
    built once per (snapshot, strategy) and memoized; the per-target
    subsampling seed is derived from the master seed and the target.
    """
    index_cache: dict[tuple[int, ProfileStrategy], object] = {}

    def cf_fn(strategy: ProfileStrategy) -> RecommenderFn:
        def run(target: UserRef, train: GraphSnapshot, k: int) -> RankedList:
            key = (id(train), strategy)
            idx = index_cache.get(key)
            if idx is None:
                idx = build_index(train, strategy)
                index_cache[key] = idx
            seed = derive_seed(master_seed, "cf-subsample", target.canonical)
            return recommend_cf(target, train, idx, k, rng_seed=seed)

        return run

    def random_fn(target: UserRef, train: GraphSnapshot, k: int) -> RankedList:
        return random_recommender(
            train, target, k, derive_seed(master_seed, "random", target.canonical)
        )

    def ppr_fn(target: UserRef, train: GraphSnapshot, k: int) -> RankedList:
        return recommend_ppr(target, train, ppr_cfg, k)

    return [
        ("random", random_fn),
        ("cf-following", cf_fn(ProfileStrategy.FOLLOWING)),
        ("cf-followers", cf_fn(ProfileStrategy.FOLLOWERS)),
        ("cf-combined", cf_fn(ProfileStrategy.COMBINED)),
        ("ppr", ppr_fn),
    ]


# -- report ------------------------------------------------------------------


@dataclass(frozen=True)
class SystemRow:
    system_id: str
    map_score: float
    p_at_k: tuple[float, ...]  # index i holds p@(i+1)
    s_at_1: float
    s_at_5: float
    s_at_10: float
    marks: Mapping[str, str]  # column -> mark vs previous row
    per_target: Mapping[str, tuple[float, ...]]  # raw vectors, target order


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[SystemRow, ...]
    targets: tuple[UserRef, ...]  # pairing order shared by all vectors
    list_length: int

    def row(self, system_id: str) -> SystemRow:
        for r in self.rows:
            if r.system_id == system_id:
                return r
        raise KeyError(system_id)


_MARK_COLUMNS = ("MAP", "s@1", "s@5", "s@10")


def run_offline(task: EvalTask, systems: Sequence[tuple[str, RecommenderFn]]) -> EvalReport:
    """Evaluate every system on every target of the task.

    Each row is marked against the row before it, so the sequence
    order of ``systems`` is the comparison chain of the report.
    """
    if not systems:
        raise EvalError("no systems given")
    if not task.targets:
        raise EvalError("task has no evaluation targets")
    targets = sorted(task.targets)
    relevant = {u: ground_truth(task, u) for u in targets}
    rows: list[SystemRow] = []
    prev: Mapping[str, tuple[float, ...]] | None = None
    for system_id, fn in systems:
        ap: list[float] = []
        s1: list[float] = []
        s5: list[float] = []
        s10: list[float] = []
        curve_sum = np.zeros(task.list_length, dtype=np.float64)
        for u in targets:
            rl = fn(u, task.train, task.list_length)
            rel = relevant[u]
            ap.append(average_precision(rl, rel))
            s1.append(float(success_at_k(rl, rel, 1)))
            s5.append(float(success_at_k(rl, rel, 5)))
            s10.append(float(success_at_k(rl, rel, 10)))
            curve_sum += np.asarray(precision_curve(rl, rel, task.list_length))
        per_target = {
            "MAP": tuple(ap),
            "s@1": tuple(s1),
            "s@5": tuple(s5),
            "s@10": tuple(s10),
        }
        if prev is None:
            marks = {c: MARK_ABSENT for c in _MARK_COLUMNS}
        else:
            marks = {c: significance_mark(per_target[c], prev[c]) for c in _MARK_COLUMNS}
        rows.append(
            SystemRow(
                system_id=system_id,
                map_score=float(np.mean(ap)),
                p_at_k=tuple(float(x) for x in curve_sum / len(targets)),
                s_at_1=float(np.mean(s1)),
                s_at_5=float(np.mean(s5)),
                s_at_10=float(np.mean(s10)),
                marks=marks,
                per_target=per_target,
            )
        )
        prev = per_target
    return EvalReport(rows=tuple(rows), targets=tuple(targets), list_length=task.list_length)


def format_report(report: EvalReport) -> str:
    """Human table plus machine-readable "system metric value mark" lines."""
    out = [
        f"offline evaluation: {len(report.targets)} targets, "
        f"list length {report.list_length}",
        "",
        f"{'ID':<4}{'system':<16}{'MAP':<12}{'s@1':<12}{'s@5':<12}{'s@10':<12}",
    ]
    for i, row in enumerate(report.rows, start=1):
        cells = []
        for col, value in (
            ("MAP", row.map_score),
            ("s@1", row.s_at_1),
            ("s@5", row.s_at_5),
            ("s@10", row.s_at_10),
        ):
            mark = row.marks[col]
            cells.append(f"{value:.4f}{mark if mark != MARK_ABSENT else '':<2}")
        out.append(f"{'R' + str(i):<4}{row.system_id:<16}" + "".join(f"{c:<12}" for c in cells))
    out.append("")
    for row in report.rows:
        for col, value in (
            ("MAP", row.map_score),
            ("s@1", row.s_at_1),
            ("s@5", row.s_at_5),
            ("s@10", row.s_at_10),
        ):
            out.append(f"{row.system_id} {col} {value:.6f} {row.marks[col]}")
    return "\n".join(out) + "\n"


def format_curves(report: EvalReport) -> str:
    """Precision-vs-k data: "k p_at_k" lines per system block."""
    out: list[str] = []
    for row in report.rows:
        out.append(f"# system {row.system_id}")
        for k, p in enumerate(row.p_at_k, start=1):
            out.append(f"{k} {p:.6f}")
    return "\n".join(out) + "\n"


# -- synthetic temporal graphs -----------------------------------------------


@dataclass(frozen=True)
class SyntheticParams:
    """Planted-community graph with community-biased follow growth.

    t1 wires each ordered pair with probability p_intra inside a
    community and p_inter across; t2 then gives each active user
    new_follows_per_user extra follows, drawn from their community
    with probability intra_new_fraction (else anywhere). Everything
    is visited, so every active user is an evaluation target.
    """

    n_nodes: int = 1000
    n_communities: int = 20
    p_intra: float = 0.1
    p_inter: float = 0.002
    new_follows_per_user: int = 6
    active_fraction: float = 0.5
    intra_new_fraction: float = 0.9
    instance: str = "sim.test"

    def __post_init__(self):
        if self.n_nodes < 2 or self.n_communities < 1:
            raise ValueError("need >= 2 nodes and >= 1 community")
        if self.n_communities > self.n_nodes:
            raise ValueError("more communities than nodes")
        for p in (self.p_intra, self.p_inter, self.active_fraction, self.intra_new_fraction):
            if not (0.0 <= p <= 1.0):
                raise ValueError("probabilities must lie in [0, 1]")
        if self.new_follows_per_user < 0:
            raise ValueError("new_follows_per_user must be >= 0")


_T1_EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)
_RECRAWL_GAP = timedelta(days=5)


def generate_synthetic_temporal_graph(
    params: SyntheticParams, rng_seed: int
) -> tuple[GraphSnapshot, GraphSnapshot]:
    """Deterministic (t1, t2) snapshot pair; all nodes visited in both."""
    rng = random.Random(rng_seed)
    width = len(str(params.n_nodes - 1))
    nodes = [
        UserRef(f"user{i:0{width}d}", params.instance) for i in range(params.n_nodes)
    ]
    community = [i * params.n_communities // params.n_nodes for i in range(params.n_nodes)]
    members: dict[int, list[int]] = {}
    for i, c in enumerate(community):
        members.setdefault(c, []).append(i)

    t1 = GraphSnapshot(_T1_EPOCH)
    for u in nodes:
        t1.add_node(u)
        t1.mark_visited(u)
    for i in range(params.n_nodes):
        for j in range(params.n_nodes):
            if i == j:
                continue
            p = params.p_intra if community[i] == community[j] else params.p_inter
            if rng.random() < p:
                t1.add_edge(nodes[i], nodes[j])

    t2 = t1.copy(timestamp=_T1_EPOCH + _RECRAWL_GAP)
    active = [i for i in range(params.n_nodes) if rng.random() < params.active_fraction]
    all_indices = list(range(params.n_nodes))
    for i in active:
        followed = t2.following(nodes[i])
        for _ in range(params.new_follows_per_user):
            intra = rng.random() < params.intra_new_fraction
            pool_indices = members[community[i]] if intra else all_indices
            candidates = [
                j for j in pool_indices if j != i and nodes[j] not in followed
            ]
            if not candidates:
                candidates = [
                    j for j in all_indices if j != i and nodes[j] not in followed
                ]
                if not candidates:
                    break
            j = candidates[rng.randrange(len(candidates))]
            t2.add_edge(nodes[i], nodes[j])
            followed.add(nodes[j])
    return t1, t2
