"""Oscillation-constrained covers and variation mean dimension."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import networkx as nx

from .covers import Cover, RefinementCertificate, ord, refinement_dimension
from .errors import ValidationError
from .nerve import subordinate_partition
from .simplicial import Complex, OpenSet, PLFunction, open_star
from .system import AHSystem

Member = tuple[PLFunction, ...]


@dataclass(frozen=True)
class FunctionFamily:
    """Members are tuples of diagonal entries; a member's size at a point is
    the largest absolute entry."""

    complex: Complex
    members: tuple[Member, ...]

    def __post_init__(self) -> None:
        members = tuple(tuple(m) for m in self.members)
        object.__setattr__(self, "members", members)
        for t, m in enumerate(members):
            if not m:
                raise ValidationError(f"member {t} has no entries")
            for f in m:
                if f.complex != self.complex:
                    raise ValidationError(f"member {t} has an entry on another complex")

    def refine(self, level: int) -> "FunctionFamily":
        if level == 0:
            return self
        members = tuple(tuple(f.refine(level) for f in m) for m in self.members)
        return FunctionFamily(members[0][0].complex if members else self.complex, members)

    def range_on(self, vertices: Sequence[int]):
        return max((f.range_on(vertices) for m in self.members for f in m), default=0)


def oscillation(member: Member, u: OpenSet):
    """Largest entry range over the vertices of the closure of ``u``."""
    c = u.complex
    for f in member:
        if f.complex != c:
            raise ValidationError("member and open set live on different complexes")
    verts = c.vertices_of_mask(c.down_closure(u.mask))
    return max(f.range_on(verts) for f in member)


def is_admissible(F: FunctionFamily, a: Cover, eps) -> bool:
    return all(oscillation(m, u) < eps for u in a.elements for m in F.members)


class VariationResult(NamedTuple):
    value: int
    certificate: RefinementCertificate
    exact: bool
    maximal_sets: tuple[tuple[int, ...], ...]


def maximal_admissible_sets(F: FunctionFamily, eps, budget: int = 10**6):
    """Maximal vertex sets ``S`` whose open star has oscillation ``< eps``.

    The range over a union is the largest range over pairs of its parts, so
    ``S`` is admissible iff every pair of its vertices is; the maximal sets
    are the maximal cliques of that compatibility graph.  Returns the sets
    (sorted) and whether enumeration finished within ``budget`` cliques.
    """
    c = F.complex
    n = c.vertex_count
    nbhd = [sorted(c.neighbours(v) | {v}) for v in range(n)]
    entries = [f.vertex_values for m in F.members for f in m]
    lo = [[min(e[w] for w in nbhd[v]) for e in entries] for v in range(n)]
    hi = [[max(e[w] for w in nbhd[v]) for e in entries] for v in range(n)]
    g = nx.Graph()
    g.add_nodes_from(v for v in range(n)
                     if all(h - l < eps for h, l in zip(hi[v], lo[v])))
    for u in g.nodes:
        for v in g.nodes:
            if u < v and all(max(hu, hv) - min(lu, lv) < eps for hu, hv, lu, lv
                             in zip(hi[u], hi[v], lo[u], lo[v])):
                g.add_edge(u, v)
    out = []
    for t, clique in enumerate(nx.find_cliques(g)):
        if t >= budget:
            return sorted(out), False
        out.append(tuple(sorted(clique)))
    return sorted(out), True


def variation_dimension(F: FunctionFamily, eps, level: int = 1,
                        budget: int = 10**6) -> VariationResult:
    """Least order of an ``(F, eps)``-admissible cover at subdivision ``level``.

    Any admissible cover can be shrunk to open stars of vertex classes, each
    inside a maximal admissible set, so the search runs over shrinkings of
    the cover by stars of the maximal sets.
    """
    if eps <= 0:
        raise ValidationError("epsilon must be positive")
    if level < 0:
        raise ValidationError("subdivision level must be >= 0")
    G = F.refine(level)
    c = G.complex
    for v in range(c.vertex_count):
        if G.range_on(sorted(c.neighbours(v) | {v})) >= eps:
            raise ValidationError(
                f"no admissible cover at level {level}: the star of vertex {v} "
                f"oscillates by at least {eps}; subdivide further")
    if G.range_on(range(c.vertex_count)) < eps:
        cover = Cover.trivial(c)
        cert = RefinementCertificate(cover, (0,), 0, cover)
        return VariationResult(0, cert, True, (tuple(range(c.vertex_count)),))
    sets, finished = maximal_admissible_sets(G, eps, budget)
    covered = set(v for S in sets for v in S)
    # a truncated scan still needs every vertex in some set
    sets += [(v,) for v in range(c.vertex_count) if v not in covered]
    cover = Cover(c, tuple(open_star(c, S) for S in sets))
    res = refinement_dimension(cover, 0, budget)
    return VariationResult(res.value, res.certificate, res.exact and finished, tuple(sets))


def pushforward_family(sys: AHSystem, i: int, F: Sequence[FunctionFamily],
                       j: int, k: int) -> FunctionFamily:
    """Member ``t`` on block ``(j, k)``: entries of member ``t`` pulled back along every leg."""
    if len(F) != len(sys.stages[i]):
        raise ValidationError("need one family per block of the base stage")
    sizes = {len(f.members) for f in F}
    if len(sizes) != 1:
        raise ValidationError("families on different blocks must have equal member counts")
    for l, (fam, b) in enumerate(zip(F, sys.stages[i])):
        if fam.complex != b.space:
            raise ValidationError(f"family {l} does not live on block {l}")
    legs = sys.legs(i, j).legs_between(None, k)
    members = []
    for t in range(sizes.pop()):
        entries = [f.pullback(g.map) for g in legs for f in F[g.source].members[t]]
        members.append(tuple(entries))
    return FunctionFamily(sys.block(j, k).space, tuple(members))


@dataclass(frozen=True)
class VariationSequence:
    base_stage: int
    stages: tuple[int, ...]
    values: tuple[Fraction, ...]
    exact: tuple[bool, ...]
    per_block: tuple[tuple[VariationResult, ...], ...]


def variation_mean_dimension_sequence(sys: AHSystem, i: int, F: Sequence[FunctionFamily],
                                      eps, J: int | None = None, level: int = 1,
                                      budget: int = 10**6) -> VariationSequence:
    J = sys.last_stage if J is None else J
    if J < i:
        raise ValidationError("truncation stage precedes the base stage")
    values, exact, per_block = [], [], []
    for j in range(i, J + 1):
        row = [variation_dimension(pushforward_family(sys, i, F, j, k), eps, level, budget)
               for k in range(len(sys.stages[j]))]
        values.append(max(Fraction(r.value, b.matrix_size)
                          for r, b in zip(row, sys.stages[j])))
        exact.append(all(r.exact for r in row))
        per_block.append(tuple(row))
    return VariationSequence(i, tuple(range(i, J + 1)), tuple(values), tuple(exact),
                             tuple(per_block))


def partition_family_lower_bound(a: Cover, level: int = 0) -> tuple[FunctionFamily, int]:
    """Partition functions of ``a`` as a family, and ``d = ord(a)``.

    Every cover admissible for this family at ``1/(d+1)`` refines ``a``.
    The family lives on the ``level``-fold subdivision.
    """
    p = subordinate_partition(a, level)
    F = FunctionFamily(p.cover.complex, tuple((phi,) for phi in p.functions))
    return F, ord(a)
