"""Online experiment engine: balanced interleaving with click attribution.

Two systems' ranked lists are merged so that in every prefix of the
shown list the two sides have contributed equally up to one item (a
per-session coin breaks turn ties). Clicks are credited by the
balanced-interleaving rule: with k being the highest of the clicked
items' best ranks, the side with more clicked items in its own top-k
wins. Participants never see which side contributed an item.

Sessions persist as append-only event logs (create / click / close),
so a live experiment with human participants can be audited and
replayed event for event.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fedirec.cf import ProfileStrategy, build_index, recommend_cf
from fedirec.federation import FederationClient
from fedirec.graph import GraphSnapshot
from fedirec.pagerank import PPRConfig, recommend_ppr
from fedirec.ranking import RankedList
from fedirec.sampling import DEFAULT_GAMMA, WalkConfig, ego_walk
from fedirec.seeds import derive_seed
from fedirec.users import UserRef

DEFAULT_SESSION_LENGTH = 10
DEFAULT_WALK_ITERATIONS = 200


class InterleaveError(ValueError):
    """Interleaving or session-lifecycle contract violation."""


class UnknownSessionError(InterleaveError):
    """No session with the given id."""


class SessionClosedError(InterleaveError):
    """Click arrived after the session was closed."""


class ForeignItemError(InterleaveError):
    """Click on an item that is not part of the session's merged list."""


class Coin(enum.Enum):
    A_FIRST = "A_FIRST"
    B_FIRST = "B_FIRST"


class Outcome(enum.Enum):
    A_WINS = "A_WINS"
    B_WINS = "B_WINS"
    DRAW = "DRAW"
    NO_INTERACTION = "NO_INTERACTION"


def balanced_interleave(a: RankedList, b: RankedList, coin: Coin, n: int) -> tuple[UserRef, ...]:
    """Merge two ranked lists with balanced alternation.

    Contribution counters ka/kb start equal; each turn the side that
    has contributed less (coin decides ties) appends its highest-ranked
    item not yet in the merged list. Stops at n items or when the side
    whose turn it is has nothing left to contribute. Consequently the
    two sides' contribution counts differ by at most one in every
    prefix, and every merged item sits within one rank of its position
    in its source list.
    """
    if n < 1:
        raise InterleaveError("n must be >= 1")
    if not a.items and not b.items:
        raise InterleaveError("both input lists are empty")
    merged: list[UserRef] = []
    included: set[UserRef] = set()
    ka = kb = 0
    while len(merged) < n:
        take_a = ka < kb or (ka == kb and coin is Coin.A_FIRST)
        source = a if take_a else b
        item = next((u for u in source.users if u not in included), None)
        if item is None:
            break  # the side whose turn it is has been exhausted
        merged.append(item)
        included.add(item)
        if take_a:
            ka += 1
        else:
            kb += 1
    return tuple(merged)


@dataclass
class InterleavingSession:
    """One participant's interleaved list and everything they did to it."""

    session_id: str
    target: UserRef
    list_a: RankedList
    list_b: RankedList
    coin: Coin
    merged: tuple[UserRef, ...]
    requested_n: int
    created_at: datetime
    clicks: dict[UserRef, datetime] = field(default_factory=dict)
    closed: bool = False
    outcome: Outcome | None = None

    @property
    def short(self) -> bool:
        """True when the vicinity could not fill the requested list."""
        return len(self.merged) < self.requested_n

    def record_click(self, item: UserRef, at: datetime) -> None:
        if self.closed:
            raise SessionClosedError(f"session {self.session_id} is closed")
        if item not in self.merged:
            raise ForeignItemError(f"item not part of session {self.session_id}: {item}")
        # duplicates are ignored: the first click's timestamp stands
        self.clicks.setdefault(item, at)

    def close(self) -> Outcome:
        if not self.closed:
            self.closed = True
            self.outcome = attribute_clicks(self)
        assert self.outcome is not None
        return self.outcome


def attribute_clicks(s: InterleavingSession) -> Outcome:
    """Balanced-interleaving credit assignment for one session.

    k is the largest over clicked items of min(rank_A, rank_B), with
    items absent from a list ranked one past its end; each side is
    credited with its clicked items at rank <= k. More credited clicks
    wins; equal counts draw; no clicks is no interaction.
    """
    if not s.clicks:
        return Outcome.NO_INTERACTION
    k = max(min(s.list_a.rank_of(c), s.list_b.rank_of(c)) for c in s.clicks)
    h_a = sum(1 for c in s.clicks if s.list_a.rank_of(c) <= k)
    h_b = sum(1 for c in s.clicks if s.list_b.rank_of(c) <= k)
    if h_a > h_b:
        return Outcome.A_WINS
    if h_b > h_a:
        return Outcome.B_WINS
    return Outcome.DRAW


# -- persistence ---------------------------------------------------------------


def _ranked_list_to_doc(rl: RankedList) -> dict:
    return {
        "target": rl.target.canonical,
        "system_id": rl.system_id,
        "requested_k": rl.requested_k,
        "items": [[u.canonical, score] for u, score in rl.items],
    }


def _ranked_list_from_doc(doc: dict) -> RankedList:
    return RankedList(
        target=UserRef.parse(doc["target"]),
        system_id=doc["system_id"],
        requested_k=doc["requested_k"],
        items=tuple((UserRef.parse(u), float(s)) for u, s in doc["items"]),
    )


class SessionStore:
    """Append-only event log per session, JSON lines, replayable.

    Events: {"event": "create", ...}, {"event": "click", ...},
    {"event": "close", ...}. The in-memory session map is a pure fold
    over the log, so replaying a log file reconstructs the identical
    session (used both for restarts and for auditing outcomes).
    """

    def __init__(self, directory: str | None = None):
        self.directory = directory
        if directory is not None:
            os.makedirs(directory, exist_ok=True)
        self._sessions: dict[str, InterleavingSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _log_path(self, session_id: str) -> str | None:
        if self.directory is None:
            return None
        return os.path.join(self.directory, f"{session_id}.log")

    def _append(self, session_id: str, event: dict) -> None:
        path = self._log_path(session_id)
        if path is None:
            return
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def get(self, session_id: str) -> InterleavingSession:
        with self._guard:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session: {session_id}")
        return session

    def all_sessions(self) -> list[InterleavingSession]:
        with self._guard:
            return list(self._sessions.values())

    def add(self, session: InterleavingSession) -> None:
        with self._guard:
            if session.session_id in self._sessions:
                raise InterleaveError(f"duplicate session id: {session.session_id}")
            self._sessions[session.session_id] = session
        self._append(
            session.session_id,
            {
                "event": "create",
                "session_id": session.session_id,
                "target": session.target.canonical,
                "coin": session.coin.value,
                "requested_n": session.requested_n,
                "created_at": session.created_at.isoformat(),
                "list_a": _ranked_list_to_doc(session.list_a),
                "list_b": _ranked_list_to_doc(session.list_b),
                "merged": [u.canonical for u in session.merged],
            },
        )

    def record_click(self, session_id: str, item: UserRef, at: datetime) -> None:
        session = self.get(session_id)
        with self._lock_for(session_id):
            already = item in session.clicks
            session.record_click(item, at)
            if not already:
                self._append(
                    session_id,
                    {"event": "click", "item": item.canonical, "at": at.isoformat()},
                )

    def close(self, session_id: str) -> Outcome:
        session = self.get(session_id)
        with self._lock_for(session_id):
            was_closed = session.closed
            outcome = session.close()
            if not was_closed:
                self._append(session_id, {"event": "close", "outcome": outcome.value})
        return outcome

    @staticmethod
    def replay(log_path: str) -> InterleavingSession:
        """Rebuild a session purely from its event log."""
        session: InterleavingSession | None = None
        with open(log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                event = json.loads(line)
                kind = event["event"]
                if kind == "create":
                    session = InterleavingSession(
                        session_id=event["session_id"],
                        target=UserRef.parse(event["target"]),
                        list_a=_ranked_list_from_doc(event["list_a"]),
                        list_b=_ranked_list_from_doc(event["list_b"]),
                        coin=Coin(event["coin"]),
                        merged=tuple(UserRef.parse(u) for u in event["merged"]),
                        requested_n=event["requested_n"],
                        created_at=datetime.fromisoformat(event["created_at"]),
                    )
                elif session is None:
                    raise InterleaveError(f"log does not start with create: {log_path}")
                elif kind == "click":
                    session.record_click(
                        UserRef.parse(event["item"]), datetime.fromisoformat(event["at"])
                    )
                elif kind == "close":
                    session.close()
                else:
                    raise InterleaveError(f"unknown event kind: {kind}")
        if session is None:
            raise InterleaveError(f"empty session log: {log_path}")
        return session

    def load_directory(self) -> int:
        """Replay every log in the store directory; returns sessions loaded."""
        if self.directory is None:
            return 0
        count = 0
        for name in sorted(os.listdir(self.directory)):
            if not name.endswith(".log"):
                continue
            session = self.replay(os.path.join(self.directory, name))
            with self._guard:
                self._sessions[session.session_id] = session
            count += 1
        return count


# -- experiment orchestration ---------------------------------------------------


@dataclass(frozen=True)
class ExperimentSummary:
    participants: int
    a_superior: int
    b_superior: int
    draws: int
    no_interaction: int
    total_clicks: int
    mean_follows: float  # clicks per participant


def summarize_experiment(sessions: list[InterleavingSession]) -> ExperimentSummary:
    """Tally outcomes; open sessions count by their would-be outcome."""
    counts = {o: 0 for o in Outcome}
    total_clicks = 0
    for s in sessions:
        outcome = s.outcome if s.closed else attribute_clicks(s)
        counts[outcome] += 1
        total_clicks += len(s.clicks)
    participants = len(sessions)
    return ExperimentSummary(
        participants=participants,
        a_superior=counts[Outcome.A_WINS],
        b_superior=counts[Outcome.B_WINS],
        draws=counts[Outcome.DRAW],
        no_interaction=counts[Outcome.NO_INTERACTION],
        total_clicks=total_clicks,
        mean_follows=total_clicks / participants if participants else 0.0,
    )


class OnlineExperiment:
    """Builds and serves interleaved sessions for live participants.

    Side A is the combined-profile recommender, side B personalized
    PageRank, both run on the target's ego-walk vicinity. All
    randomness (walk, subsampling, coin) is derived from one master
    seed plus the target, so a session is reproducible; session ids
    are salted hashes of (seed, target, sequence) — deterministic for
    tests, unguessable without the seed.
    """

    def __init__(
        self,
        client: FederationClient,
        master_seed: int = 0,
        session_dir: str | None = None,
        walk_iterations: int = DEFAULT_WALK_ITERATIONS,
        gamma: float = DEFAULT_GAMMA,
        ppr_cfg: PPRConfig | None = None,
    ):
        self.client = client
        self.master_seed = master_seed
        self.walk_iterations = walk_iterations
        self.gamma = gamma
        self.ppr_cfg = ppr_cfg
        self.store = SessionStore(session_dir)
        self._sequence = 0
        self._seq_lock = threading.Lock()

    def _next_session_id(self, target: UserRef) -> tuple[str, int]:
        with self._seq_lock:
            self._sequence += 1
            seq = self._sequence
        digest = hashlib.sha256(
            f"{self.master_seed}:{target.canonical}:{seq}".encode("utf-8")
        ).hexdigest()
        return digest[:32], seq

    def create_session(self, target: UserRef, n: int = DEFAULT_SESSION_LENGTH) -> InterleavingSession:
        if n < 1:
            raise InterleaveError("n must be >= 1")
        walk_cfg = WalkConfig(
            seed_node=target,
            iterations=self.walk_iterations,
            rng_seed=derive_seed(self.master_seed, "ego-walk", target.canonical),
            gamma=self.gamma,
        )
        _, vicinity = ego_walk(walk_cfg, self.client)
        idx = build_index(vicinity, ProfileStrategy.COMBINED)
        list_a = recommend_cf(
            target,
            vicinity,
            idx,
            k=n,
            rng_seed=derive_seed(self.master_seed, "cf-subsample", target.canonical),
        )
        list_b = recommend_ppr(target, vicinity, self.ppr_cfg, k=n)
        coin_seed = derive_seed(self.master_seed, "coin", target.canonical)
        coin = Coin.A_FIRST if coin_seed % 2 == 0 else Coin.B_FIRST
        merged = balanced_interleave(list_a, list_b, coin, n)
        session_id, _ = self._next_session_id(target)
        session = InterleavingSession(
            session_id=session_id,
            target=target,
            list_a=list_a,
            list_b=list_b,
            coin=coin,
            merged=merged,
            requested_n=n,
            created_at=datetime.now(timezone.utc),
        )
        self.store.add(session)
        return session

    def record_click(self, session_id: str, item: UserRef,
                     at: datetime | None = None) -> None:
        self.store.record_click(
            session_id, item, at if at is not None else datetime.now(timezone.utc)
        )

    def close_session(self, session_id: str) -> Outcome:
        return self.store.close(session_id)

    def summary(self) -> ExperimentSummary:
        return summarize_experiment(self.store.all_sessions())
