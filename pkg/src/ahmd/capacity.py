"""Orbit capacities, trace variation and finite-stage boundary probes."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .covers import Cover
from .errors import ValidationError
from .simplicial import (ClosedSet, OpenSet, PLFunction, closure_and_boundary,
                         open_star, subdivide)
from .system import AHSystem, Block, subdivide_system


def _ratio(x, n):
    return Fraction(x, n) if isinstance(x, Rational) else x / n


@dataclass(frozen=True)
class TraceData:
    """Trace profile ``x -> Tr(f(x))`` of a central element on block ``(stage, block)``."""

    stage: int
    block: int
    profile: PLFunction


@dataclass
class CapacityReport:
    base: tuple[int, int]
    stages: tuple[int, ...]
    values: dict[tuple[int, int], object]   # (j, k) -> ocap_{j,k}
    per_stage_max: tuple
    kind: str = "element"
    monotone: bool = field(init=False)

    def __post_init__(self) -> None:
        s = self.per_stage_max
        self.monotone = all(x >= y for x, y in zip(s, s[1:]))

    @property
    def limit_estimate(self):
        """Value at the truncation stage; an upper estimate of the limit."""
        return self.per_stage_max[-1]

    def rows(self) -> list[tuple[int, int, object]]:
        return [(j, k, v) for (j, k), v in sorted(self.values.items())]


def _check_profile(sys: AHSystem, i: int, l: int, f: PLFunction) -> None:
    if f.complex != sys.block(i, l).space:
        raise ValidationError(f"trace profile does not live on block ({i}, {l})")


def _stage_range(sys: AHSystem, i: int, J: int | None) -> range:
    J = sys.last_stage if J is None else J
    if not i <= J <= sys.last_stage:
        raise ValidationError(f"truncation stage {J} out of range")
    return range(i, J + 1)


def ocap_element(sys: AHSystem, i: int, l: int, f: TraceData | PLFunction,
                 J: int | None = None) -> CapacityReport:
    """``ocap_{j,k}(f) = max_x Tr(φ_{i,j}(f)(x)) / n_{j,k}`` for ``j = i..J``.

    The pushed-forward trace is affine on simplices, so the max is over vertices.
    """
    prof = f.profile if isinstance(f, TraceData) else f
    if isinstance(f, TraceData) and (f.stage, f.block) != (i, l):
        raise ValidationError("trace data belongs to another block")
    _check_profile(sys, i, l, prof)
    vals = prof.vertex_values
    values, per_stage = {}, []
    for j in _stage_range(sys, i, J):
        dmap = sys.legs(i, j)
        row = []
        for k, b in enumerate(sys.stages[j]):
            legs = dmap.legs_between(l, k)
            best = 0
            for v in range(b.space.vertex_count):
                total = sum(g.projection.rank * vals[g.map.vertex_image[v]]
                            for g in legs)
                if total > best:
                    best = total
            values[(j, k)] = _ratio(best, b.matrix_size)
            row.append(values[(j, k)])
        per_stage.append(max(row))
    return CapacityReport((i, l), tuple(_stage_range(sys, i, J)), values,
                          tuple(per_stage), "element")


def closed_set_counts(sys: AHSystem, i: int, l: int, mask: int, j: int, k: int) -> int:
    """max over simplices σ of X_{j,k} of the rank-weighted number of legs with λ(σ) in ``mask``."""
    best = 0
    legs = sys.legs(i, j).legs_between(l, k)
    for s in range(len(sys.block(j, k).space)):
        hits = sum(g.projection.rank for g in legs
                   if mask >> g.map.simplex_image[s] & 1)
        best = max(best, hits)
    return best


def ocap_closed_set(sys: AHSystem, i: int, l: int, E: ClosedSet,
                    J: int | None = None) -> CapacityReport:
    """``ocap_{j,k}(E) = (n_{i,l}/n_{j,k}) max_σ #{legs λ : λ(σ) ⊆ E}``."""
    if E.complex != sys.block(i, l).space:
        raise ValidationError(f"closed set does not live on block ({i}, {l})")
    n_il = sys.size(i, l)
    values, per_stage = {}, []
    for j in _stage_range(sys, i, J):
        row = []
        for k, b in enumerate(sys.stages[j]):
            values[(j, k)] = Fraction(n_il * closed_set_counts(sys, i, l, E.mask, j, k),
                                      b.matrix_size)
            row.append(values[(j, k)])
        per_stage.append(max(row))
    return CapacityReport((i, l), tuple(_stage_range(sys, i, J)), values,
                          tuple(per_stage), "closed_set")


def trace_variation(blocks: Sequence[Block], F: Sequence[TraceData | PLFunction]):
    """``max_l (max Tr F - min Tr F) / n_l``."""
    if len(blocks) != len(F):
        raise ValidationError("one trace profile per block required")
    out = 0
    for b, f in zip(blocks, F):
        prof = f.profile if isinstance(f, TraceData) else f
        if prof.complex != b.space:
            raise ValidationError("trace profile lives on another space")
        out = max(out, _ratio(prof.max() - prof.min(), b.matrix_size))
    return out


def pushforward_traces(sys: AHSystem, i: int, F: Sequence[PLFunction],
                       j: int) -> list[PLFunction]:
    """Trace profiles of ``φ_{i,j}(F)`` on every block of stage ``j``."""
    if len(F) != len(sys.stages[i]):
        raise ValidationError("one trace profile per block of the base stage required")
    for l, f in enumerate(F):
        _check_profile(sys, i, l, f)
    dmap = sys.legs(i, j)
    out = []
    for k, b in enumerate(sys.stages[j]):
        vals = []
        for v in range(b.space.vertex_count):
            vals.append(sum(g.projection.rank * F[g.source][g.map.vertex_image[v]]
                            for g in dmap.legs_between(None, k)))
        out.append(PLFunction(b.space, tuple(vals)))
    return out


@dataclass
class SVTResult:
    satisfied_by_stage: int | None
    stages: tuple[int, ...]
    values: tuple


def svt_probe(sys: AHSystem, i: int, F: Sequence[TraceData | PLFunction],
              J: int | None, eps) -> SVTResult:
    if eps <= 0:
        raise ValidationError("epsilon must be positive")
    profs = [f.profile if isinstance(f, TraceData) else f for f in F]
    stages = tuple(_stage_range(sys, i, J))
    values = tuple(trace_variation(sys.stages[j], pushforward_traces(sys, i, profs, j))
                   for j in stages)
    hit = next((j for j, v in zip(stages, values) if v < eps), None)
    return SVTResult(hit, stages, values)


@dataclass
class SBPResult:
    found: OpenSet | None        # a candidate whose truncated boundary capacity is < eps
    best: OpenSet | None
    best_value: object
    candidates: int
    exhaustive: bool
    stage: int


def _star_candidates(u: OpenSet, point: int | None, limit: int):
    c = u.complex
    verts = u.vertices
    if point is not None:
        if point not in verts:
            return [], True
        rest = [v for v in verts if v != point]
        fixed = [point]
    else:
        rest, fixed = verts, []
    seen: set[int] = set()
    out: list[OpenSet] = []

    def emit(mask: int) -> None:
        if mask and mask not in seen:
            seen.add(mask)
            out.append(OpenSet(c, mask))

    exhaustive = 2 ** len(rest) <= limit
    if exhaustive:
        for r in range(len(rest) + 1):
            for extra in itertools.combinations(rest, r):
                S = fixed + list(extra)
                if S:
                    emit(open_star(c, S).mask)
    else:
        # graph balls inside u around each admissible centre
        centres = fixed or verts
        allowed = set(verts)
        for centre in centres:
            ball = {centre}
            while True:
                emit(open_star(c, ball).mask)
                grow = {w for v in ball for w in c.neighbours(v) if w in allowed} - ball
                if not grow:
                    break
                ball |= grow
    if point is None or point in verts:
        emit(u.mask)
    return out, exhaustive


def sbp_probe(sys: AHSystem, i: int, l: int, u: OpenSet, J: int | None,
              eps, point: int | None = None, level: int = 0,
              max_candidates: int = 4096) -> SBPResult:
    """Search open sets ``V ⊆ u`` (open stars of vertex sets, and ``u`` itself)
    minimizing the stage-``J`` capacity of ``∂V``.

    With ``level > 0`` the whole system and ``u`` are subdivided first and
    the returned sets live on the subdivided block; ``point`` then indexes a
    vertex of the subdivision.  A value below ``eps`` is a finite-stage
    certificate only.
    """
    if eps <= 0:
        raise ValidationError("epsilon must be positive")
    if u.complex != sys.block(i, l).space:
        raise ValidationError(f"open set does not live on block ({i}, {l})")
    if level:
        u = subdivide(u.complex, level).lift_open(u)
        sys = subdivide_system(sys, level)
    J = sys.last_stage if J is None else J
    _stage_range(sys, i, J)
    n_il = sys.size(i, l)
    cands, exhaustive = _star_candidates(u, point, max_candidates)
    best, best_value = None, None
    for V in cands:
        _, bd = closure_and_boundary(V)
        value = max(Fraction(n_il * closed_set_counts(sys, i, l, bd.mask, J, k),
                             b.matrix_size)
                    for k, b in enumerate(sys.stages[J]))
        if best_value is None or value < best_value:
            best, best_value = V, value
    found = best if best_value is not None and best_value < eps else None
    return SBPResult(found, best, best_value, len(cands), exhaustive, J)


@dataclass
class SBRPResult:
    refinement: Cover | None
    shrinking: tuple[OpenSet, ...] | None
    best_value: object
    nodes: int
    exhaustive: bool


def fattened_boundary(V: OpenSet, radius: int) -> ClosedSet:
    return V.boundary().star_neighbourhood(radius)


def sbrp_probe(sys: AHSystem, i: int, l: int, a: Cover, eps, j: int, k: int,
               neighborhood_radius: int = 1, level: int = 0,
               budget: int = 10**5) -> SBRPResult:
    """Search one-to-one shrinkings ``V_s`` (closure of ``V_s`` inside ``U_s``)
    whose fattened boundaries have small capacity at block ``(j, k)``.

    Candidates for ``V_s`` are open stars of vertex sets whose closed stars
    lie in ``U_s`` (plus ``U_s`` itself when it is closed).  With
    ``level > 0`` the system and ``a`` are subdivided first.
    """
    if eps <= 0:
        raise ValidationError("epsilon must be positive")
    if a.complex != sys.block(i, l).space:
        raise ValidationError(f"cover does not live on block ({i}, {l})")
    if level:
        a = a.lift(level)
        sys = subdivide_system(sys, level)
    if neighborhood_radius < 0:
        raise ValidationError("neighbourhood radius must be >= 0")
    c = a.complex
    n_il, n_jk = sys.size(i, l), sys.size(j, k)

    memo: dict[int, Fraction] = {}

    def capacity(mask: int) -> Fraction:
        if mask not in memo:
            memo[mask] = Fraction(n_il * closed_set_counts(sys, i, l, mask, j, k), n_jk)
        return memo[mask]

    per_element: list[list[tuple[int, int]]] = []
    for U in a.elements:
        good = [v for v in range(c.vertex_count)
                if c.down_closure(c.up(v)) & ~U.mask == 0]
        opts: dict[int, int] = {}
        if c.down_closure(U.mask) & ~U.mask == 0:
            opts[U.mask] = 0
        for r in range(len(good), -1, -1):
            for S in itertools.combinations(good, r):
                m = open_star(c, S).mask if S else 0
                if m not in opts:
                    opts[m] = fattened_boundary(OpenSet(c, m), neighborhood_radius).mask
        per_element.append(sorted(opts.items(), key=lambda t: -bin(t[0]).count("1")))

    best_value = None
    best_choice: list[int] | None = None
    nodes = 0
    aborted = False
    choice: list[int] = []

    def dfs(s: int, union: int, fat: int) -> None:
        nonlocal best_value, best_choice, nodes, aborted
        if aborted:
            return
        if s == len(per_element):
            if union == c.full_mask:
                val = capacity(fat)
                if best_value is None or val < best_value:
                    best_value, best_choice = val, choice.copy()
            return
        for m, bmask in per_element[s]:
            nodes += 1
            if nodes > budget:
                aborted = True
                return
            new_fat = fat | bmask
            if best_value is not None and capacity(new_fat) >= best_value:
                continue
            choice.append(m)
            dfs(s + 1, union | m, new_fat)
            choice.pop()
            if best_value == 0:
                return

    dfs(0, 0, 0)
    if best_choice is None:
        return SBRPResult(None, None, None, nodes, not aborted)
    shrink = tuple(OpenSet(c, m) for m in best_choice)
    refinement = Cover(c, tuple(V for V in shrink if V))
    ok = best_value < eps
    return SBRPResult(refinement if ok else None, shrink, best_value, nodes, not aborted)
