"""Collaborative-filtering recommender over follow-relation profiles.

Each visited user becomes a retrieval document whose tokens are the
user IDs they follow, are followed by, or both. Candidates are ranked
by Okapi BM25 similarity between the target's profile (the query) and
every indexed document. Because profiles are sets, term frequency is
binary and BM25 collapses to a closed form per overlapping token:

    score(q, d) = sum over t in q ∩ d of
        IDF(t) * (k1 + 1) / (1 + k1 * (1 - b + b * |d| / avgdl))

with the non-negative IDF variant IDF(t) = ln(1 + (N - df + 0.5) /
(df + 0.5)). There is no query-side term-frequency component (query
tokens are a set).
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass

from fedirec.graph import GraphSnapshot
from fedirec.ranking import RankedList
from fedirec.users import UserRef

BM25_K1 = 1.2
BM25_B = 0.75
MAX_QUERY_TOKENS = 10_000


class ProfileStrategy(enum.Enum):
    FOLLOWING = "following"
    FOLLOWERS = "followers"
    COMBINED = "combined"


class CFError(ValueError):
    """Recommendation request that violates the index contract."""


@dataclass(frozen=True)
class ProfileDocument:
    """One user's profile: a set of user-ID tokens under one strategy."""

    owner: UserRef
    strategy: ProfileStrategy
    tokens: frozenset[UserRef]

    def __post_init__(self):
        if self.owner in self.tokens:
            raise ValueError(f"profile of {self.owner} contains itself")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class ProfileIndex:
    """Inverted index over the profile documents of all visited users."""

    strategy: ProfileStrategy
    documents: dict[UserRef, ProfileDocument]
    postings: dict[UserRef, frozenset[UserRef]]  # token -> owners
    doc_count: int
    avg_doc_length: float
    bm25_k1: float = BM25_K1
    bm25_b: float = BM25_B

    def idf(self, token: UserRef) -> float:
        df = len(self.postings.get(token, ()))
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))


def build_profile(u: UserRef, g: GraphSnapshot, s: ProfileStrategy) -> ProfileDocument:
    """Profile tokens read from the snapshot; u must be visited.

    Unvisited users have incomplete neighbor lists, so their profiles
    would silently under-represent them — rejected instead.
    """
    if not g.is_visited(u):
        raise CFError(f"profile requires a visited user: {u}")
    if s is ProfileStrategy.FOLLOWING:
        tokens = g.following(u)
    elif s is ProfileStrategy.FOLLOWERS:
        tokens = g.followers(u)
    else:
        tokens = g.following(u) | g.followers(u)
    return ProfileDocument(owner=u, strategy=s, tokens=frozenset(tokens))


def build_index(g: GraphSnapshot, s: ProfileStrategy) -> ProfileIndex:
    """Index one profile document per visited user."""
    if not g.visited:
        raise CFError("cannot index a snapshot with no visited users")
    documents = {u: build_profile(u, g, s) for u in sorted(g.visited)}
    postings: dict[UserRef, set[UserRef]] = {}
    for owner, doc in documents.items():
        for token in doc.tokens:
            postings.setdefault(token, set()).add(owner)
    return ProfileIndex(
        strategy=s,
        documents=documents,
        postings={t: frozenset(owners) for t, owners in postings.items()},
        doc_count=len(documents),
        avg_doc_length=sum(len(d) for d in documents.values()) / len(documents),
    )


def bm25_score(query_tokens: frozenset[UserRef] | set[UserRef], doc: ProfileDocument,
               idx: ProfileIndex) -> float:
    """Binary-TF Okapi BM25 of a document against a query token set.

    Overlap tokens are accumulated in canonical order so repeated
    evaluations (and reference re-implementations that do the same)
    produce bit-identical floats.
    """
    overlap = query_tokens & doc.tokens
    if not overlap:
        return 0.0
    k1, b = idx.bm25_k1, idx.bm25_b
    length_norm = 1.0 + k1 * (1.0 - b + b * len(doc) / idx.avg_doc_length)
    score = 0.0
    for token in sorted(overlap):
        score += idx.idf(token) * (k1 + 1.0) / length_norm
    return score


def subsample_query(tokens: frozenset[UserRef], rng_seed: int,
                    limit: int = MAX_QUERY_TOKENS) -> frozenset[UserRef]:
    """Uniform random subset of exactly ``limit`` tokens when over limit.

    Queries at or under the limit pass through untouched, so results
    are seed-independent there. Sampling is over the canonically
    sorted token list for cross-run determinism.
    """
    if len(tokens) <= limit:
        return frozenset(tokens)
    rng = random.Random(rng_seed)
    return frozenset(rng.sample(sorted(tokens), limit))


def recommend_cf(target: UserRef, g: GraphSnapshot, idx: ProfileIndex, k: int,
                 rng_seed: int = 0) -> RankedList:
    """Top-k indexed users by BM25 against the target's profile.

    The target itself and everyone the target already follows in g are
    excluded; ties break by canonical user reference ascending.
    """
    if k < 1:
        raise CFError("k must be >= 1")
    if not g.is_visited(target):
        raise CFError(f"target must be visited: {target}")
    if idx.doc_count == 0:
        raise CFError("empty index")
    query = subsample_query(build_profile(target, g, idx.strategy).tokens, rng_seed)
    excluded = g.following(target) | {target}
    scored = [
        (bm25_score(query, doc, idx), owner)
        for owner, doc in idx.documents.items()
        if owner not in excluded
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return RankedList(
        target=target,
        system_id=f"cf-{idx.strategy.value}",
        items=tuple((owner, score) for score, owner in scored[:k]),
        requested_k=k,
    )
