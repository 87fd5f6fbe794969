"""Branched open covers and the finite-stage Cuntz ratio.

A branched pair is an open set carrying one projection instance.  An
instance has a class (label and rank) and an optional tag naming where it
came from; two pairs on the same set with the same class and tag are the
same projection and count once.  Untagged pairs on the same set therefore
collapse by label.
"""
from __future__ import annotations

import sys as _sys
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, NamedTuple, Sequence

from .covers import Cover, ord, refinement_dimension
from .errors import InvariantError, ValidationError
from .simplicial import Complex, OpenSet, open_star, preimage
from .system import AHSystem, ProjectionClass


class BranchedPair(NamedTuple):
    set: OpenSet
    projection: ProjectionClass
    tag: Hashable = None


def _class_multiplicity(instances) -> int:
    """min over classes of (count x rank) for an iterable of (class, tag)."""
    counts = Counter(cls for cls, _ in instances)
    return min(n * cls.rank for cls, n in counts.items())


@dataclass(frozen=True)
class BranchedCover:
    complex: Complex
    pairs: tuple[BranchedPair, ...]

    def __post_init__(self) -> None:
        pairs = tuple(BranchedPair(*p) for p in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            raise ValidationError("a branched cover needs at least one pair")
        labels: dict[Hashable, int] = {}
        for t, p in enumerate(pairs):
            if p.set.complex != self.complex:
                raise ValidationError(f"pair {t} lives on another complex")
            r = labels.setdefault(p.projection.label, p.projection.rank)
            if r != p.projection.rank:
                raise ValidationError(
                    f"label {p.projection.label!r} used with ranks {r} and {p.projection.rank}")
        self.underlying()   # raises unless the sets cover

    @classmethod
    def trivial(cls, c: Complex, projection: ProjectionClass = ProjectionClass(),
                tag: Hashable = None) -> "BranchedCover":
        return cls(c, (BranchedPair(c.everything(), projection, tag),))

    @classmethod
    def from_cover(cls, a: Cover, projection: ProjectionClass,
                   tag: Hashable = None) -> "BranchedCover":
        return cls(a.complex, tuple(BranchedPair(u, projection, tag) for u in a.elements))

    def sets(self) -> list[OpenSet]:
        """Distinct underlying open sets in order of first appearance."""
        seen: dict[int, OpenSet] = {}
        for p in self.pairs:
            seen.setdefault(p.set.mask, p.set)
        return list(seen.values())

    def underlying(self) -> Cover:
        return Cover(self.complex, tuple(self.sets()))

    def classes_on(self, u: OpenSet) -> list[tuple[ProjectionClass, Hashable]]:
        return [(p.projection, p.tag) for p in self.pairs if p.set.mask == u.mask]


def multiplicity(bc: BranchedCover) -> int:
    """``min_U min_label |E_U(label)| * rank``."""
    return min(_class_multiplicity(bc.classes_on(u)) for u in bc.sets())


def _dedupe(c: Complex, pairs) -> BranchedCover:
    out: dict[tuple, BranchedPair] = {}
    for p in pairs:
        key = (p.set.mask, p.projection, p.tag) if p.tag is not None \
            else (p.set.mask, p.projection.label, None)
        out.setdefault(key, p)
    return BranchedCover(c, tuple(out.values()))


def branched_join(a: BranchedCover, b: BranchedCover) -> BranchedCover:
    """Pairs ``(U ∩ V, κ_U)`` and ``(U ∩ V, κ_V)`` for every nonempty intersection."""
    if a.complex != b.complex:
        raise ValidationError("branched join of covers on different complexes")
    pairs = []
    for p in a.pairs:
        for q in b.pairs:
            w = p.set & q.set
            if w:
                pairs.append(BranchedPair(w, p.projection, p.tag))
                pairs.append(BranchedPair(w, q.projection, q.tag))
    return _dedupe(a.complex, pairs)


def induce(bc: BranchedCover, b: Cover) -> BranchedCover:
    """Each ``W`` of ``b`` carries every class attached to a set containing it."""
    if b.complex != bc.complex:
        raise ValidationError("cover lives on another complex")
    sets = bc.sets()
    for t, w in enumerate(b.elements):
        if not any(w <= u for u in sets):
            raise ValidationError(f"element {t} is not inside any branched set")
    pairs = [BranchedPair(w, p.projection, p.tag)
             for w in b.elements for p in bc.pairs if w <= p.set]
    return _dedupe(bc.complex, pairs)


def pullback_branched(f, a: Cover, projection: ProjectionClass,
                      tag: Hashable = None) -> BranchedCover:
    """``(λ, p)^{-1}(a)``: preimages of ``a`` all carrying the same projection."""
    pairs = []
    for u in a.elements:
        w = preimage(f, u)
        if w:
            pairs.append(BranchedPair(w, projection, tag))
    return _dedupe(f.domain, pairs)


@dataclass(frozen=True)
class CuntzCertificate:
    branched: BranchedCover        # α̃ on the target block (unlifted)
    join: Cover                    # ordinary join, lifted to the search level
    cover: Cover                   # β, a shrinking of ``join``
    witness: tuple[int, ...]       # index into ``join`` per element of β
    order: int
    multiplicity: int              # mul(Ind β)

    @property
    def value(self) -> Fraction:
        return Fraction(self.order, self.multiplicity)

    def check(self) -> None:
        for t, (v, w) in enumerate(zip(self.cover.elements, self.witness)):
            if not v <= self.join.elements[w]:
                raise InvariantError(f"element {t} is not inside join element {w}")
        if ord(self.cover) != self.order:
            raise InvariantError("order differs from ord(cover)")


class CuntzResult(NamedTuple):
    value: Fraction
    certificate: CuntzCertificate
    exact: bool
    nodes: int


def stage_branched_cover(sys: AHSystem, i: int, a: Sequence[Cover], j: int, k: int,
                         projections: Sequence[ProjectionClass] | None = None
                         ) -> BranchedCover:
    """Branched join over the legs into ``(j, k)`` of the per-leg pullbacks.

    Each leg's projection is its own instance.  Its effective rank is the leg
    rank times the source block size, and its class is the label together
    with that rank, so equal labels over equal sizes add up to ``n_{j,k}``.
    """
    if len(a) != len(sys.stages[i]):
        raise ValidationError("need one cover per block of the base stage")
    for l, (cov, b) in enumerate(zip(a, sys.stages[i])):
        if cov.complex != b.space:
            raise ValidationError(f"cover {l} does not live on block {l}")
    legs = sys.legs(i, j).legs_between(None, k)
    if projections is None:
        projections = [g.projection for g in legs]
    if len(projections) != len(legs):
        raise ValidationError(f"{len(legs)} legs into block {k} need as many projections")
    total = sum(p.rank * sys.size(i, g.source) for g, p in zip(legs, projections))
    if total != sys.size(j, k):
        raise ValidationError(
            f"unitality violated at block ({j}, {k}): n={sys.size(j, k)} but projections give {total}")
    space = sys.block(j, k).space
    result: BranchedCover | None = None
    for t, (g, p) in enumerate(zip(legs, projections)):
        rank = p.rank * sys.size(i, g.source)
        eff = ProjectionClass((p.label, rank), rank)
        piece = pullback_branched(g.map, a[g.source], eff, tag=t)
        result = piece if result is None else branched_join(result, piece)
    assert result is not None and result.complex == space
    return result


def _induced_multiplicity(bc: BranchedCover, join_sets: list[OpenSet], cont: int) -> int:
    inst = set()
    for e in range(len(join_sets)):
        if cont >> e & 1:
            inst.update(bc.classes_on(join_sets[e]))
    return _class_multiplicity(inst)


def min_ratio_shrinking(bc: BranchedCover, level: int = 1,
                        budget: int = 10**6) -> CuntzResult:
    """Minimize ``ord(β) / mul(Ind β)`` over open-star shrinkings ``β`` of the
    underlying cover lifted to ``level``."""
    if budget <= 0:
        raise ValidationError("search budget must be positive")
    base_sets = bc.sets()
    base = Cover(bc.complex, tuple(base_sets))
    lifted = base.lift(level)
    c = lifted.complex
    m = len(base_sets)
    # containment of sets is preserved by lifting, so instances are read off the base
    inst = [frozenset(bc.classes_on(u)) for u in base_sets]
    memo: dict[int, int] = {}

    def mul(cont: int) -> int:
        if cont not in memo:
            memo[cont] = _induced_multiplicity(bc, base_sets, cont)
        return memo[cont]

    supersets = [sum(1 << f for f in range(m) if base_sets[e] <= base_sets[f])
                 for e in range(m)]
    ident_mul = min(mul(supersets[e]) for e in range(m))
    incumbent = CuntzCertificate(bc, lifted, lifted, tuple(range(m)), ord(lifted), ident_mul)

    if all(s == inst[0] for s in inst):
        # every element sees the same instances: the denominator is constant
        res = refinement_dimension(lifted, 0, budget)
        cert = res.certificate
        const = mul(supersets[0])
        if Fraction(cert.achieved_order, const) < incumbent.value:
            incumbent = CuntzCertificate(bc, lifted, cert.cover, cert.witness,
                                         cert.achieved_order, const)
        return CuntzResult(incumbent.value, incumbent, res.exact, res.nodes)

    n = c.vertex_count
    vin = [sum(1 << e for e, u in enumerate(lifted.elements) if u.mask >> v & 1)
           for v in range(n)]
    facets = c.facets
    vertex_facets: list[list[int]] = [[] for _ in range(n)]
    for fi, f in enumerate(facets):
        for v in f:
            vertex_facets[v].append(fi)
    # breadth-first vertex order keeps facets filling up early
    order_v: list[int] = []
    seen = set()
    for s in range(n):
        if s in seen:
            continue
        queue = [s]
        seen.add(s)
        while queue:
            v = queue.pop(0)
            order_v.append(v)
            for w in sorted(c.neighbours(v)):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    counts: list[dict[int, int]] = [{} for _ in facets]
    labels = [-1] * n
    cont: dict[int, int] = {}
    used: Counter = Counter()
    best = incumbent.value
    best_labels: list[int] | None = None
    nodes = 0
    aborted = False

    def bound(cur: int, muls) -> Fraction:
        return Fraction(max(cur - 1, 0), min(muls)) if cur > 1 else Fraction(0)

    def dfs(pos: int, cur: int) -> bool:
        nonlocal best, best_labels, nodes, aborted
        if pos == n:
            val = bound(cur, [mul(cont[lab]) for lab in cont])
            if val < best:
                best, best_labels = val, labels.copy()
            return best == 0
        v = order_v[pos]
        options = []
        for lab in range(m):
            if not vin[v] >> lab & 1:
                continue
            local = max((len(counts[fi]) + (lab not in counts[fi])
                         for fi in vertex_facets[v]), default=1)
            new_cur = max(cur, local)
            new_cont = cont.get(lab, (1 << m) - 1) & vin[v]
            muls = [mul(new_cont)] + [mul(cont[x]) for x in cont if x != lab]
            options.append((bound(new_cur, muls), new_cur, lab, new_cont))
        options.sort(key=lambda t: (t[0], t[1], t[2]))
        for lb, new_cur, lab, new_cont in options:
            if lb >= best:
                break
            nodes += 1
            if nodes > budget:
                aborted = True
                return True
            labels[v] = lab
            old = cont.get(lab)
            cont[lab] = new_cont
            for fi in vertex_facets[v]:
                counts[fi][lab] = counts[fi].get(lab, 0) + 1
            done = dfs(pos + 1, new_cur)
            for fi in vertex_facets[v]:
                x = counts[fi][lab] - 1
                if x:
                    counts[fi][lab] = x
                else:
                    del counts[fi][lab]
            if old is None:
                del cont[lab]
            else:
                cont[lab] = old
            labels[v] = -1
            if done:
                return True
        return False

    _sys.setrecursionlimit(max(_sys.getrecursionlimit(), n + 200))
    dfs(0, 0)
    if best_labels is not None:
        masks: dict[int, int] = {}
        for v, lab in enumerate(best_labels):
            masks[lab] = masks.get(lab, 0) | open_star(c, [v]).mask
        witness = tuple(sorted(masks))
        beta = Cover.from_masks(c, [masks[w] for w in witness])
        mu = min(mul(_contained_in(lifted, OpenSet(c, masks[w]))) for w in witness)
        incumbent = CuntzCertificate(bc, lifted, beta, witness, ord(beta), mu)
    return CuntzResult(incumbent.value, incumbent, not aborted, nodes)


def _contained_in(a: Cover, v: OpenSet) -> int:
    return sum(1 << e for e, u in enumerate(a.elements) if v <= u)


def cuntz_ratio(sys: AHSystem, i: int, a: Sequence[Cover], j: int, k: int,
                projections: Sequence[ProjectionClass] | None = None,
                level: int = 1, budget: int = 10**6) -> CuntzResult:
    """Best ``ord(β) / mul(Ind β)`` over shrinkings of the join into block ``(j, k)``."""
    bc = stage_branched_cover(sys, i, a, j, k, projections)
    return min_ratio_shrinking(bc, level, budget)


@dataclass(frozen=True)
class CuntzSequence:
    base_stage: int
    stages: tuple[int, ...]
    values: tuple[Fraction, ...]
    exact: tuple[bool, ...]
    per_block: tuple[tuple[CuntzResult, ...], ...]


def cuntz_mean_dimension_sequence(sys: AHSystem, i: int, a: Sequence[Cover],
                                  J: int | None = None, level: int = 1,
                                  budget: int = 10**6,
                                  alternatives: Sequence[AHSystem] = ()) -> CuntzSequence:
    """Per stage ``max_k min_pairing cuntz_ratio``; pairings are ``sys`` and ``alternatives``.

    Alternatives must share stages and eigenvalue maps with ``sys`` (typically
    built with :meth:`AHSystem.with_projections`).
    """
    J = sys.last_stage if J is None else J
    if J < i:
        raise ValidationError("truncation stage precedes the base stage")
    for t, alt in enumerate(alternatives):
        if alt.stages != sys.stages or len(alt.maps) != len(sys.maps) or any(
                [g.map for g in m1.legs] != [g.map for g in m2.legs]
                for m1, m2 in zip(alt.maps, sys.maps)):
            raise ValidationError(f"alternatives[{t}] does not induce the same maps")
    systems = [sys, *alternatives]
    values, exact, per_block = [], [], []
    for j in range(i, J + 1):
        row, ok = [], True
        for k in range(len(sys.stages[j])):
            results = [cuntz_ratio(s, i, a, j, k, None, level, budget) for s in systems]
            row.append(min(results, key=lambda r: r.value))
            ok = ok and all(r.exact for r in results)
        values.append(max(r.value for r in row))
        exact.append(ok)
        per_block.append(tuple(row))
    return CuntzSequence(i, tuple(range(i, J + 1)), tuple(values), tuple(exact),
                         tuple(per_block))
