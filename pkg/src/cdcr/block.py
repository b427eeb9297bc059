"""Blocking by (type, subtype) and candidate pair generation."""

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True)
class Partition:
    key: tuple  # (major, subtype)
    members: tuple  # mention ids, ascending

    def __len__(self):
        return len(self.members)

    @property
    def name(self):
        return partition_name(self.key)


@dataclass(frozen=True, order=True)
class CandidatePair:
    a: str
    b: str
    partition_key: tuple = ("", "")

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"pair ({self.a!r}, {self.b!r}) is not in canonical order")

    @property
    def id(self):
        return f"{self.a}|{self.b}"


def partition_name(key):
    major, subtype = key
    return f"{major}/{subtype}"


def blocking_key(mention, merge_empty_subtype=False):
    if merge_empty_subtype:
        return (mention.type.major, "")
    return (mention.type.major, mention.type.subtype)


def partition_mentions(mentions: Iterable, merge_empty_subtype: bool = False) -> list[Partition]:
    """Group mentions by (major type, subtype); partitions come back sorted by key.

    With ``merge_empty_subtype`` the subtype is ignored, so blocking is on
    the major type alone.
    """
    groups = defaultdict(list)
    for m in mentions:
        groups[blocking_key(m, merge_empty_subtype)].append(m.id)
    return [Partition(k, tuple(sorted(v))) for k, v in sorted(groups.items())]


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def generate_pairs(p: Partition) -> Iterator[CandidatePair]:
    """Stream the C(n, 2) pairs of ``p`` in sorted canonical order."""
    members = p.members
    for i, a in enumerate(members):
        for b in members[i + 1:]:
            yield CandidatePair(a, b, p.key)


def row_shards(n: int, target: int) -> list[tuple]:
    """Split rows ``0..n-1`` of the upper triangle into ranges of about ``target`` pairs.

    Row ``i`` contributes ``n - 1 - i`` pairs. Every row lands in exactly
    one range, including trailing rows that hold no pairs.
    """
    target = max(1, target)
    out = []
    start, acc = 0, 0
    for i in range(n):
        acc += n - 1 - i
        if acc >= target:
            out.append((start, i + 1))
            start, acc = i + 1, 0
    if start < n:
        out.append((start, n))
    return out


def surface_groups(mentions) -> dict:
    """Mention ids keyed by exact surface; used by surface-level deduplication."""
    groups = defaultdict(list)
    for m in mentions:
        groups[m.surface].append(m.id)
    return {s: sorted(ids) for s, ids in groups.items()}
