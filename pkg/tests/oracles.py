"""Brute-force reference implementations used as test oracles.

Each one follows a definition directly, with no shared code from the
package under test.
"""

import itertools
import math
from functools import lru_cache


def edit_distance_recursive(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return d(len(a), len(b))


def reachability(nodes, edges):
    """Floyd-Warshall transitive closure; returns the set of components."""
    idx = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    reach = [[i == j for j in range(n)] for i in range(n)]
    for a, b in edges:
        reach[idx[a]][idx[b]] = reach[idx[b]][idx[a]] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                row_k = reach[k]
                row_i = reach[i]
                for j in range(n):
                    if row_k[j]:
                        row_i[j] = True
    return {frozenset(nodes[j] for j in range(n) if reach[i][j]) for i in range(n)}


def set_partitions(items):
    """Every partition of ``items`` as a list of lists."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _cluster_of(clustering):
    out = {}
    for c in clustering:
        for m in c:
            out[m] = set(c)
    return out


def bcubed_oracle(system, gold):
    sys_c, gold_c = _cluster_of(system), _cluster_of(gold)
    ps, rs = [], []
    for m in sys_c:
        inter = len(sys_c[m] & gold_c[m])
        ps.append(inter / len(sys_c[m]))
        rs.append(inter / len(gold_c[m]))
    return sum(ps) / len(ps), sum(rs) / len(rs)


def links(clustering):
    return {frozenset(p) for c in clustering for p in itertools.combinations(c, 2)}


def link_oracle(system, gold):
    ls, lg = links(system), links(gold)
    common = len(ls & lg)
    p = common / len(ls) if ls else 1.0
    r = common / len(lg) if lg else 1.0
    return p, r


def cartesian_pairs(mentions, key):
    """All unordered pairs with equal keys, by the full Cartesian product."""
    out = set()
    for a in mentions:
        for b in mentions:
            if a.id < b.id and key(a) == key(b):
                out.add((a.id, b.id))
    return out


def optimal_k_center(points, k, dist):
    """Minimum over all k-subsets of centers of the max point-to-center distance."""
    best = math.inf
    for centers in itertools.combinations(range(len(points)), k):
        r = max(min(dist(points[i], points[c]) for c in centers) for i in range(len(points)))
        best = min(best, r)
    return best


def tfidf_cosine_oracle(a_tokens, b_tokens, docs_tokens):
    n = len(docs_tokens)

    def idf(t):
        df = sum(1 for d in docs_tokens if t in d) or 1
        return math.log(n / df)

    def vec(tokens):
        v = {}
        for t in set(tokens):
            v[t] = tokens.count(t) * idf(t)
        return v

    va, vb = vec(a_tokens), vec(b_tokens)
    na = math.sqrt(sum(x * x for x in va.values()))
    nb = math.sqrt(sum(x * x for x in vb.values()))
    if na == 0 or nb == 0:
        return 0.0
    return sum(va[t] * vb.get(t, 0.0) for t in va) / (na * nb)
