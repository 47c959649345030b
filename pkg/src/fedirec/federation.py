"""Polite retrieval of follow lists from federated instances.

The client composes four guarantees that hold for every caller:

* robots.txt is checked before the first data request to an instance,
  and disallowed instances are never contacted;
* a single global rate limiter paces all network operations;
* fetched neighbor lists land in a persistent per-user document cache,
  and repeat lookups never touch the network;
* cache misses are single-flight (concurrent walkers asking for the
  same user trigger one fetch).

A deterministic simulated backend answers from a snapshot fixture so
the whole pipeline can run without a network.
"""

from __future__ import annotations

import json
import hashlib
import logging
import os
import threading
import time
import urllib.robotparser
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Iterable, Protocol
from urllib.parse import urlsplit

import httpx

from fedirec.graph import GraphSnapshot, read_snapshot
from fedirec.users import InvalidUserRef, UserRef

log = logging.getLogger(__name__)

MAX_REQUESTS_PER_SECOND = 10.0
DEFAULT_PAGE_CAP = 100
DEFAULT_RETRY_DELAY = 5.0
USER_AGENT = "fedirec-crawler/0.1 (+https://example.org/fedirec-crawler; research contact page)"

SOURCE_LIVE = "live"
SOURCE_CACHE = "cache"
SOURCE_SIMULATED = "simulated"


class FederationError(Exception):
    """Base class for retrieval failures."""


class CrawlDisallowed(FederationError):
    """robots.txt (or conservative fallback) forbids crawling the instance."""


class InstanceUnreachable(FederationError):
    """Network-level failure talking to the instance."""


class FetchFailed(FederationError):
    """The instance answered with an HTTP error status."""


class PayloadError(FederationError):
    """The instance answered, but the payload could not be interpreted."""


@dataclass(frozen=True)
class NeighborRecord:
    """One user's outgoing and incoming follow sets at fetch time."""

    user: UserRef
    following: frozenset[UserRef]
    followers: frozenset[UserRef]
    fetched_at: datetime
    source: str  # live | cache | simulated

    def __post_init__(self):
        if self.user in self.following or self.user in self.followers:
            raise ValueError(f"self-reference in neighbor record for {self.user}")


@dataclass(frozen=True)
class InstancePolicy:
    instance: str
    crawl_allowed: bool
    checked_at: datetime


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class RateLimiter:
    """Global paced limiter: at most ``rate`` grants per sliding window.

    Grants are paced (spaced at least 1/rate apart) rather than granted
    in bursts, and additionally each grant is pushed strictly past the
    window boundary of the grant ``burst`` places earlier, so an audit
    of grant timestamps never finds more than ``rate × window`` entries
    inside any closed window. The rate is capped at
    MAX_REQUESTS_PER_SECOND regardless of configuration.

    acquire() blocks the caller until its reserved grant time and
    returns that time; the full grant history is kept for audits.
    """

    def __init__(
        self,
        rate: float = MAX_REQUESTS_PER_SECOND,
        window: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = min(float(rate), MAX_REQUESTS_PER_SECOND)
        self.window = float(window)
        self._burst = max(1, int(self.rate * self.window))
        self._min_gap = 1.0 / self.rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._grants: list[float] = []

    def acquire(self) -> float:
        with self._lock:
            t = self._clock()
            if self._grants:
                t = max(t, self._grants[-1] + self._min_gap)
                if len(self._grants) >= self._burst:
                    t = max(t, self._grants[-self._burst] + self.window + 1e-6)
            self._grants.append(t)
        wait = t - self._clock()
        if wait > 0:
            self._sleep(wait)
        return t

    @property
    def audit_log(self) -> list[float]:
        """Grant timestamps in grant order (monotonic clock domain)."""
        with self._lock:
            return list(self._grants)


class DocumentCache:
    """Directory of per-user neighbor records, one JSON file per user.

    Files are keyed by a hash of the canonical user reference, written
    atomically, and never expire; a fresh crawl epoch is a fresh cache
    directory. Reads are lock-free; writes take a per-key lock.
    """

    def __init__(self, directory):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _path(self, user: UserRef) -> str:
        digest = hashlib.sha256(user.canonical.encode("utf-8")).hexdigest()
        return os.path.join(self.directory, f"{digest}.json")

    def _key_lock(self, path: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(path, threading.Lock())

    def get(self, user: UserRef) -> NeighborRecord | None:
        path = self._path(user)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError) as exc:
            raise PayloadError(f"corrupt cache record {path}: {exc}") from exc
        return NeighborRecord(
            user=UserRef.parse(doc["user"]),
            following=frozenset(UserRef.parse(s) for s in doc["following"]),
            followers=frozenset(UserRef.parse(s) for s in doc["followers"]),
            fetched_at=datetime.fromisoformat(doc["fetched_at"]),
            source=SOURCE_CACHE,
        )

    def put(self, record: NeighborRecord) -> None:
        path = self._path(record.user)
        doc = {
            "user": record.user.canonical,
            "following": sorted(u.canonical for u in record.following),
            "followers": sorted(u.canonical for u in record.followers),
            "fetched_at": record.fetched_at.isoformat(),
            "source": record.source,
        }
        with self._key_lock(path):
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, path)


class MemoryCache:
    """In-process stand-in for DocumentCache (tests, ephemeral runs)."""

    def __init__(self):
        self._records: dict[UserRef, NeighborRecord] = {}
        self._lock = threading.Lock()

    def get(self, user: UserRef) -> NeighborRecord | None:
        with self._lock:
            rec = self._records.get(user)
        if rec is None:
            return None
        return NeighborRecord(rec.user, rec.following, rec.followers, rec.fetched_at, SOURCE_CACHE)

    def put(self, record: NeighborRecord) -> None:
        with self._lock:
            self._records[record.user] = record


class Backend(Protocol):
    def fetch_neighbors(self, user: UserRef) -> NeighborRecord: ...

    def check_policy(self, instance: str) -> InstancePolicy: ...


class SimulatedBackend:
    """Deterministic backend answering from a graph snapshot fixture.

    Neighbor lists come straight from the snapshot's adjacency (only
    visited fixture nodes are fetchable), with optional artificial
    latency, per-user failure injection, and robots-disallowed
    instances. Every successful fetch consumes one rate-limiter permit
    when a limiter is attached, standing in for the network request.
    """

    def __init__(
        self,
        snapshot: GraphSnapshot,
        *,
        limiter: RateLimiter | None = None,
        latency: float = 0.0,
        failures: dict[UserRef, type[FederationError]] | None = None,
        disallowed_instances: Iterable[str] = (),
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.snapshot = snapshot
        self.limiter = limiter
        self.latency = latency
        self.failures = dict(failures or {})
        self.disallowed_instances = {s.lower() for s in disallowed_instances}
        self._sleep = sleep
        self.request_count = 0
        self.fetch_log: list[UserRef] = []  # audit: every user a request went out for
        self._count_lock = threading.Lock()

    @classmethod
    def from_file(cls, path, **kwargs) -> "SimulatedBackend":
        return cls(read_snapshot(path), **kwargs)

    def check_policy(self, instance: str) -> InstancePolicy:
        return InstancePolicy(
            instance=instance.lower(),
            crawl_allowed=instance.lower() not in self.disallowed_instances,
            checked_at=_utcnow(),
        )

    def fetch_neighbors(self, user: UserRef) -> NeighborRecord:
        if self.limiter is not None:
            self.limiter.acquire()
        with self._count_lock:
            self.request_count += 1
            self.fetch_log.append(user)
        if self.latency > 0:
            self._sleep(self.latency)
        if user in self.failures:
            raise self.failures[user](f"injected failure for {user}")
        if user not in self.snapshot or not self.snapshot.is_visited(user):
            raise FetchFailed(f"no such user in fixture: {user}")
        return NeighborRecord(
            user=user,
            following=frozenset(self.snapshot.following(user)),
            followers=frozenset(self.snapshot.followers(user)),
            fetched_at=_utcnow(),
            source=SOURCE_SIMULATED,
        )


def _userref_from_url(url: str) -> UserRef | None:
    """Map an actor URL like https://host/users/name (or /@name) to a UserRef."""
    parts = urlsplit(url)
    if not parts.netloc:
        return None
    segments = [s for s in parts.path.split("/") if s]
    name = None
    if len(segments) >= 2 and segments[-2] in ("users", "user", "accounts"):
        name = segments[-1]
    elif len(segments) == 1 and segments[0].startswith("@"):
        name = segments[0][1:]
    if not name:
        return None
    try:
        return UserRef(name, parts.netloc)
    except InvalidUserRef:
        return None


def _parse_collection_item(item) -> UserRef | None:
    if isinstance(item, dict):
        for key in ("acct", "id", "url"):
            if key in item and isinstance(item[key], str):
                item = item[key]
                break
        else:
            return None
    if not isinstance(item, str):
        return None
    if item.startswith("http://") or item.startswith("https://"):
        return _userref_from_url(item)
    try:
        return UserRef.parse(item)
    except InvalidUserRef:
        return None


class LiveBackend:
    """HTTP backend for Mastodon-compatible follow-collection endpoints.

    Endpoints: https://<instance>/users/<user>/{following,followers}.json.
    Collections may be inline lists or paginated ActivityPub-style
    documents (first/next links); pagination stops at ``page_cap``
    pages, recording the truncation. One transient-network retry is
    attempted after ``retry_delay`` seconds. Every page request
    consumes one rate-limiter permit.
    """

    def __init__(
        self,
        limiter: RateLimiter,
        *,
        page_cap: int = DEFAULT_PAGE_CAP,
        retry_delay: float = DEFAULT_RETRY_DELAY,
        timeout: float = 20.0,
        user_agent: str = USER_AGENT,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        self.limiter = limiter
        self.page_cap = page_cap
        self.retry_delay = retry_delay
        self.user_agent = user_agent
        self._sleep = sleep
        self._client = httpx.Client(
            headers={"User-Agent": user_agent, "Accept": "application/json"},
            timeout=timeout,
            follow_redirects=True,
            transport=transport,
        )
        self.truncated: set[str] = set()

    def close(self) -> None:
        self._client.close()

    def _request(self, url: str) -> httpx.Response:
        self.limiter.acquire()
        try:
            return self._client.get(url)
        except httpx.TransportError:
            self._sleep(self.retry_delay)
            self.limiter.acquire()
            try:
                return self._client.get(url)
            except httpx.TransportError as exc:
                raise InstanceUnreachable(f"GET {url}: {exc}") from exc

    def _get_json(self, url: str):
        resp = self._request(url)
        if resp.status_code >= 400:
            raise FetchFailed(f"GET {url}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise PayloadError(f"GET {url}: body is not JSON") from exc

    def _collect(self, url: str) -> set[UserRef]:
        """Walk a follow collection, resolving pagination links."""
        found: set[UserRef] = set()
        pages = 0
        next_url: str | None = url
        while next_url and pages < self.page_cap:
            doc = self._get_json(next_url)
            pages += 1
            if isinstance(doc, list):
                items = doc
                next_url = None
            elif isinstance(doc, dict):
                items = doc.get("orderedItems", doc.get("items", []))
                if not isinstance(items, list):
                    raise PayloadError(f"GET {next_url}: items field is not a list")
                nxt = doc.get("next")
                first = doc.get("first")
                if not items and isinstance(first, str):
                    next_url = first
                elif not items and isinstance(first, dict):
                    # inline first page
                    inner = first.get("orderedItems", first.get("items", []))
                    items = inner if isinstance(inner, list) else []
                    next_url = first.get("next") if isinstance(first.get("next"), str) else None
                else:
                    next_url = nxt if isinstance(nxt, str) else None
            else:
                raise PayloadError(f"GET {next_url}: unexpected payload type")
            for item in items:
                ref = _parse_collection_item(item)
                if ref is not None:
                    found.add(ref)
        if next_url:
            self.truncated.add(url)
            log.warning("collection truncated at %d pages: %s", self.page_cap, url)
        return found

    def check_policy(self, instance: str) -> InstancePolicy:
        instance = instance.lower()
        parser = urllib.robotparser.RobotFileParser()
        allowed: bool
        try:
            resp = self._request(f"https://{instance}/robots.txt")
        except InstanceUnreachable:
            allowed = False  # conservative: unreachable means do not crawl
        else:
            if resp.status_code == 404:
                allowed = True
            elif resp.status_code >= 400:
                allowed = False
            else:
                parser.parse(resp.text.splitlines())
                allowed = parser.can_fetch(self.user_agent, f"https://{instance}/users/")
        return InstancePolicy(instance=instance, crawl_allowed=allowed, checked_at=_utcnow())

    def fetch_neighbors(self, user: UserRef) -> NeighborRecord:
        base = f"https://{user.instance}/users/{user.username}"
        following = self._collect(f"{base}/following.json")
        followers = self._collect(f"{base}/followers.json")
        return NeighborRecord(
            user=user,
            following=frozenset(following - {user}),
            followers=frozenset(followers - {user}),
            fetched_at=_utcnow(),
            source=SOURCE_LIVE,
        )


class FederationClient:
    """Cache-first, policy-gated neighbor fetcher shared by all walkers.

    Lookup order: document cache (no policy check needed; no request
    is issued), then — under a per-user single-flight lock — robots
    policy, then the backend. Policies are resolved once per instance
    per client lifetime.
    """

    def __init__(self, backend: Backend, cache: DocumentCache | MemoryCache | None = None):
        self.backend = backend
        self.cache = cache if cache is not None else MemoryCache()
        self._policies: dict[str, InstancePolicy] = {}
        self._policy_lock = threading.Lock()
        self._flights: dict[UserRef, threading.Lock] = {}
        self._flights_guard = threading.Lock()

    @classmethod
    def simulated(cls, snapshot: GraphSnapshot, **backend_kwargs) -> "FederationClient":
        return cls(SimulatedBackend(snapshot, **backend_kwargs))

    def check_policy(self, instance: str) -> InstancePolicy:
        instance = instance.lower()
        with self._policy_lock:
            policy = self._policies.get(instance)
        if policy is not None:
            return policy
        policy = self.backend.check_policy(instance)
        with self._policy_lock:
            # first resolver wins; duplicates are identical in effect
            policy = self._policies.setdefault(instance, policy)
        return policy

    def _flight_lock(self, user: UserRef) -> threading.Lock:
        with self._flights_guard:
            return self._flights.setdefault(user, threading.Lock())

    def fetch_neighbors(self, user: UserRef) -> NeighborRecord:
        cached = self.cache.get(user)
        if cached is not None:
            return cached
        with self._flight_lock(user):
            cached = self.cache.get(user)
            if cached is not None:
                return cached
            if not self.check_policy(user.instance).crawl_allowed:
                raise CrawlDisallowed(f"robots policy forbids crawling {user.instance}")
            record = self.backend.fetch_neighbors(user)
            self.cache.put(record)
            return record
