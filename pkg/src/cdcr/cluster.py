"""Grouping coreferent mentions into entity clusters."""

import heapq
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .errors import ConfigError


class UnionFind:
    """Disjoint sets over hashable items, union by rank with path compression."""

    def __init__(self, items: Iterable = ()):
        self.parent = {}
        self.rank = {}
        for x in items:
            self.add(x)

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x):
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def merge(self, other: "UnionFind"):
        """Fold another shard's unions into this one."""
        for x in sorted(other.parent, key=str):
            self.union(x, other.find(x))
        return self

    def groups(self) -> list[list]:
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return [sorted(g) for g in out.values()]


@dataclass(frozen=True)
class EntityCluster:
    id: str
    members: tuple
    canonical_label: str = ""

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"cluster {self.id} is empty")

    def to_dict(self):
        return {"clusterId": self.id, "canonicalLabel": self.canonical_label,
                "members": list(self.members)}


def canonical_label(surfaces: Iterable[str]) -> str:
    """Longest surface; ties go to the lexicographically least."""
    return min(surfaces, key=lambda s: (-len(s), s), default="")


def make_clusters(groups: Iterable[Iterable[str]], surfaces: Optional[Mapping[str, str]] = None,
                  prefix: str = "E") -> list[EntityCluster]:
    """Number groups in order of their least member id."""
    groups = sorted((sorted(g) for g in groups if g), key=lambda g: g[0])
    surfaces = surfaces or {}
    out = []
    for i, g in enumerate(groups, 1):
        label = canonical_label(surfaces[m] for m in g if m in surfaces)
        out.append(EntityCluster(f"{prefix}{i:06d}", tuple(g), label))
    return out


def connected_components(edges: Iterable[tuple], mentions: Iterable[str],
                         surfaces: Optional[Mapping[str, str]] = None) -> list[EntityCluster]:
    """Components of the graph over ``mentions`` whose edges are coreferent pairs.

    ``edges`` are ``(a, b)`` id pairs or objects with ``a`` and ``b``
    attributes (such as ``CandidatePair``). Mentions with no edge become
    singletons.
    """
    uf = UnionFind(mentions)
    for e in edges:
        a, b = (e.a, e.b) if hasattr(e, "a") else e
        uf.union(a, b)
    return make_clusters(uf.groups(), surfaces)


def agglomerative_single_link(mentions: Iterable[str], scores: Mapping[tuple, float],
                              stop_threshold: float, surfaces=None, trace: Optional[list] = None):
    """Greedy single-link merging until the best inter-cluster score is below the threshold.

    The single-link score between two clusters is their best pair score, so
    taking pairs in descending score order (ties by canonical pair order)
    and merging whenever the pair spans two clusters reproduces the greedy
    rule. ``trace`` receives ``(a, b, score)`` for each merge.
    """
    uf = UnionFind(mentions)
    heap = []
    for (a, b), s in scores.items():
        if a > b:
            a, b = b, a
        heap.append((-s, a, b))
    heapq.heapify(heap)
    while heap:
        neg, a, b = heapq.heappop(heap)
        if -neg < stop_threshold:
            break
        if uf.union(a, b) and trace is not None:
            trace.append((a, b, -neg))
    return make_clusters(uf.groups(), surfaces)


# ---------------------------------------------------------------------------
# streaming k-center


@dataclass
class StreamingState:
    max_clusters: int
    radius_limit: float = 0.3
    centers: list = field(default_factory=list)  # (center id, center value)
    members: dict = field(default_factory=dict)  # center id -> [mention ids]
    merge_phases: int = 0

    def __post_init__(self):
        if self.max_clusters < 1:
            raise ConfigError(f"max_clusters must be >= 1, got {self.max_clusters}")
        if not 0 <= self.radius_limit:
            raise ConfigError("radius_limit must be non-negative")


def _merge_phase(state: StreamingState, sim):
    while len(state.centers) > state.max_clusters:
        if state.radius_limit > 0:
            state.radius_limit *= 2
        else:
            cs = state.centers
            state.radius_limit = min(1 - sim(cs[i][1], cs[j][1])
                                     for i in range(len(cs)) for j in range(i + 1, len(cs)))
        state.merge_phases += 1
        kept = []
        for cid, value in state.centers:
            for kid, kvalue in kept:
                if 1 - sim(kvalue, value) <= state.radius_limit:
                    state.members[kid].extend(state.members.pop(cid))
                    break
            else:
                kept.append((cid, value))
        state.centers = kept


def streaming_cluster(stream: Iterable[tuple], sim: Callable, state: StreamingState,
                      surfaces=None) -> list[EntityCluster]:
    """Single pass over ``(mention id, value)`` items with doubling k-center merges.

    Each item joins its nearest center when ``sim >= 1 - radius_limit``,
    otherwise it opens a new cluster. Whenever the count exceeds
    ``max_clusters`` the radius doubles and centers absorb later centers
    within the new radius, until the bound holds again.
    """
    for mid, value in stream:
        best, best_sim = None, -1.0
        for cid, cvalue in state.centers:
            s = sim(cvalue, value)
            if s > best_sim:
                best, best_sim = cid, s
        if best is not None and best_sim >= 1 - state.radius_limit:
            state.members[best].append(mid)
        else:
            state.centers.append((mid, value))
            state.members[mid] = [mid]
            _merge_phase(state, sim)
    return make_clusters(state.members.values(), surfaces)


def write_clusters(path, clusters: Iterable[EntityCluster]):
    with open(path, "w", encoding="utf-8") as fh:
        for c in sorted(clusters, key=lambda c: c.id):
            fh.write(json.dumps(c.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_clusters(path) -> list[EntityCluster]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(EntityCluster(d["clusterId"], tuple(d["members"]), d.get("canonicalLabel", "")))
    return out
