"""Account identities on a federated network.

An account is globally identified by its local username plus the domain
of the instance hosting it. The canonical form is the lowercase
"username@instance" string; two references are the same account exactly
when their canonical forms match.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass

_USERNAME_RE = re.compile(r"^[^@/\s]+$")
_INSTANCE_RE = re.compile(r"^[^@/\s]+\.[^@/\s]+$")


class InvalidUserRef(ValueError):
    """A username/instance pair that cannot identify an account."""


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class UserRef:
    """Immutable account reference, normalized to lowercase.

    Ordering and equality are defined on the canonical
    "username@instance" string, so UserRefs sort deterministically.
    """

    username: str
    instance: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "instance", self.instance.lower())
        object.__setattr__(self, "username", self.username.lower())
        if not _USERNAME_RE.match(self.username):
            raise InvalidUserRef(f"bad username: {self.username!r}")
        if not _INSTANCE_RE.match(self.instance):
            raise InvalidUserRef(f"bad instance domain: {self.instance!r}")

    @property
    def canonical(self) -> str:
        return f"{self.username}@{self.instance}"

    @classmethod
    def parse(cls, text: str) -> "UserRef":
        """Parse "username@instance", tolerating a leading @."""
        text = text.strip().lstrip("@")
        username, sep, instance = text.partition("@")
        if not sep:
            raise InvalidUserRef(f"missing @ separator: {text!r}")
        return cls(instance=instance, username=username)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UserRef):
            return NotImplemented
        return self.canonical == other.canonical

    def __lt__(self, other: "UserRef") -> bool:
        if not isinstance(other, UserRef):
            return NotImplemented
        return self.canonical < other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)

    def __str__(self) -> str:
        return self.canonical

    def __repr__(self) -> str:
        return f"UserRef({self.canonical!r})"
