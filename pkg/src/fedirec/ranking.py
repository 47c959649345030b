"""Ranked recommendation lists and their text export format.

All recommenders emit the same container so the evaluation harness and
the interleaving engine can stay system-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass

from fedirec.users import UserRef

EXPORT_HEADER = "# fedirec-ranking"


@dataclass(frozen=True)
class RankedList:
    """Scored recommendations for one target, best first.

    Invariants enforced at construction: scores non-increasing, no
    duplicate users, target absent. requested_k records what the
    caller asked for; a shorter list means the candidate pool ran out
    (exposed as ``short``).
    """

    target: UserRef
    system_id: str
    items: tuple[tuple[UserRef, float], ...]
    requested_k: int

    def __post_init__(self):
        seen: set[UserRef] = set()
        prev = float("inf")
        for user, score in self.items:
            if user == self.target:
                raise ValueError(f"target {self.target} appears in its own list")
            if user in seen:
                raise ValueError(f"duplicate item {user}")
            if score > prev:
                raise ValueError("scores must be non-increasing")
            seen.add(user)
            prev = score

    @property
    def k(self) -> int:
        return len(self.items)

    @property
    def short(self) -> bool:
        return len(self.items) < self.requested_k

    @property
    def users(self) -> tuple[UserRef, ...]:
        return tuple(u for u, _ in self.items)

    def rank_of(self, user: UserRef) -> int:
        """1-based rank; absent users rank one past the end (len + 1)."""
        for i, (u, _) in enumerate(self.items, start=1):
            if u == user:
                return i
        return len(self.items) + 1


def format_ranked_list(rl: RankedList) -> str:
    lines = [
        f"{EXPORT_HEADER} system={rl.system_id} target={rl.target.canonical} k={rl.requested_k}"
    ]
    for rank, (user, score) in enumerate(rl.items, start=1):
        lines.append(f"rank {rank} {user.canonical} {score:.12g}")
    return "\n".join(lines) + "\n"


def write_ranked_list(rl: RankedList, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_ranked_list(rl))
