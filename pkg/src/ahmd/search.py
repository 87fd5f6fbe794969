"""Branch-and-bound over vertex labelings.

A shrinking of an up-closed cover can always be taken to be a family of open
stars: pick for every vertex ``v`` one cover element containing ``{v}`` and
let ``V_i`` be the open star of the vertices labelled ``i``.  Its order is
the largest number of distinct labels on a facet, minus one, and no
shrinking does better.  This module minimizes that quantity.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Sequence


@dataclass
class LabelSearchResult:
    value: int | None          # best order found by the search (None: no improvement)
    labels: list[int] | None   # labelling achieving ``value``
    exact: bool
    nodes: int


def min_label_order(facets: Sequence[Sequence[int]],
                    allowed: Sequence[Sequence[int]],
                    budget: int,
                    upper: int | None = None,
                    lower: int = 0) -> LabelSearchResult:
    """Minimize ``max_facet #distinct labels - 1`` over labellings.

    ``allowed[v]`` lists the admissible labels of vertex ``v``.  Only
    labellings strictly better than ``upper`` are reported.  The search stops
    early once ``lower`` is reached.  ``budget`` caps the number of vertex
    assignments tried; on exhaustion ``exact`` is False.
    """
    n = len(allowed)
    vertex_facets: list[list[int]] = [[] for _ in range(n)]
    for fi, f in enumerate(facets):
        for v in f:
            vertex_facets[v].append(fi)
    counts: list[dict[int, int]] = [{} for _ in facets]
    labels = [-1] * n
    unassigned = [len(f) for f in facets]
    best = upper if upper is not None else n  # order never exceeds n - 1
    best_labels: list[int] | None = None
    nodes = 0
    aborted = False

    # buckets[d]: facets with d distinct labels and at least one free vertex
    top = max((len(f) for f in facets), default=1) + 1
    buckets: list[set[int]] = [set() for _ in range(top + 1)]
    buckets[0].update(range(len(facets)))

    def pick_vertex() -> int:
        # free vertex of a facet carrying the most distinct labels
        for d in range(top, -1, -1):
            if buckets[d]:
                fi = next(iter(buckets[d]))
                break
        free = [v for v in facets[fi] if labels[v] < 0]
        return min(free, key=lambda v: (len(allowed[v]), v))

    def move(fi: int, before: int, after: int, free_after: int) -> None:
        buckets[before].discard(fi)
        if free_after:
            buckets[after].add(fi)

    def dfs(assigned: int, cur: int) -> bool:
        nonlocal best, best_labels, nodes, aborted
        if assigned == n:
            best = cur - 1
            best_labels = labels.copy()
            return best <= lower
        v = pick_vertex()
        options = []
        for lab in allowed[v]:
            local = 0
            fresh = 0
            for fi in vertex_facets[v]:
                d = len(counts[fi]) + (lab not in counts[fi])
                fresh += lab not in counts[fi]
                local = max(local, d)
            options.append((max(cur, local), fresh, lab))
        options.sort()
        for new_cur, _, lab in options:
            if new_cur - 1 >= best:
                break
            nodes += 1
            if nodes > budget:
                aborted = True
                return True
            labels[v] = lab
            for fi in vertex_facets[v]:
                cf = counts[fi]
                d = len(cf)
                cf[lab] = cf.get(lab, 0) + 1
                unassigned[fi] -= 1
                move(fi, d, len(cf), unassigned[fi])
            done = dfs(assigned + 1, new_cur)
            for fi in vertex_facets[v]:
                cf = counts[fi]
                d = len(cf)
                c = cf[lab] - 1
                if c:
                    cf[lab] = c
                else:
                    del cf[lab]
                unassigned[fi] += 1
                move(fi, d, len(cf), unassigned[fi])
            labels[v] = -1
            if done:
                return True
        return False

    if upper is not None and upper <= lower:
        return LabelSearchResult(None, None, True, 0)
    if any(not a for a in allowed):
        raise ValueError("a vertex has no admissible label")
    sys.setrecursionlimit(max(sys.getrecursionlimit(), n + 200))
    dfs(0, 0)
    value = best if best_labels is not None else None
    return LabelSearchResult(value, best_labels, not aborted, nodes)
