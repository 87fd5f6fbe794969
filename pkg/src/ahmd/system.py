"""Inductive systems of homogeneous stages joined by diagonal maps.

Stage ``i`` is a list of blocks ``(X_{i,l}, n_{i,l})``.  The connecting map
from stage ``i`` to ``i+1`` is a list of legs; a leg from source block ``l``
into target block ``k`` carries an eigenvalue map ``X_{i+1,k} -> X_{i,l}``
(a :class:`SimplicialMap`) and a projection class.  For an ordinary
diagonal map every projection has rank 1 and a common label.
Stage indices are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Sequence

from .covers import (Cover, RefinementResult, join, pullback_cover,
                     refinement_dimension)
from .errors import ValidationError
from .simplicial import (Complex, SimplicialMap, path_complex, subdivide,
                         subdivide_map)

DEFAULT_LABEL = "p"


@dataclass(frozen=True)
class ProjectionClass:
    """Murray-von Neumann class of a projection: an opaque label and a rank."""

    label: Hashable = DEFAULT_LABEL
    rank: int = 1

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValidationError(f"projection rank must be positive, got {self.rank}")


@dataclass(frozen=True)
class Block:
    space: Complex
    matrix_size: int

    def __post_init__(self) -> None:
        if self.matrix_size < 1:
            raise ValidationError("matrix size must be positive")
        if not self.space.is_connected():
            raise ValidationError("block space must be connected")


@dataclass(frozen=True)
class Leg:
    source: int   # block index at the source stage
    target: int   # block index at the target stage
    map: SimplicialMap
    projection: ProjectionClass = ProjectionClass()


@dataclass(frozen=True)
class DiagonalMap:
    source_stage: int
    target_stage: int
    legs: tuple[Leg, ...]

    def legs_between(self, l: int | None, k: int) -> list[Leg]:
        return [g for g in self.legs
                if g.target == k and (l is None or g.source == l)]

    def multiplicity(self, l: int, k: int) -> int:
        return len(self.legs_between(l, k))

    def weighted_multiplicity(self, l: int, k: int) -> int:
        """Multiplicity counted with projection ranks."""
        return sum(g.projection.rank for g in self.legs_between(l, k))


def check_unital(source: Sequence[Block], target: Sequence[Block],
                 dmap: DiagonalMap, where: str = "map") -> None:
    """Validate leg endpoints and ``n_{j,k} = Σ rank · n_{i,l}``."""
    totals = [0] * len(target)
    for t, g in enumerate(dmap.legs):
        if not (0 <= g.source < len(source) and 0 <= g.target < len(target)):
            raise ValidationError(f"{where}.legs[{t}]: block index out of range")
        if g.map.domain != target[g.target].space:
            raise ValidationError(
                f"{where}.legs[{t}]: map domain is not target block {g.target}")
        if g.map.codomain != source[g.source].space:
            raise ValidationError(
                f"{where}.legs[{t}]: map codomain is not source block {g.source}")
        totals[g.target] += g.projection.rank * source[g.source].matrix_size
    for k, b in enumerate(target):
        if totals[k] != b.matrix_size:
            raise ValidationError(
                f"{where}: unitality violated at target block {k}: "
                f"n={b.matrix_size} but legs give {totals[k]}")


@dataclass(frozen=True)
class AHSystem:
    stages: tuple[tuple[Block, ...], ...]
    maps: tuple[DiagonalMap, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False,
                         compare=False, hash=False)

    def __post_init__(self) -> None:
        stages = tuple(tuple(s) for s in self.stages)
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "maps", tuple(self.maps))
        if not stages:
            raise ValidationError("a system needs at least one stage")
        for i, s in enumerate(stages):
            if not s:
                raise ValidationError(f"stages[{i}] has no blocks")
        if len(self.maps) != len(stages) - 1:
            raise ValidationError(
                f"{len(stages)} stages need {len(stages) - 1} maps, got {len(self.maps)}")
        for i, m in enumerate(self.maps):
            if (m.source_stage, m.target_stage) != (i, i + 1):
                raise ValidationError(f"maps[{i}] must connect stages {i} and {i + 1}")
            check_unital(stages[i], stages[i + 1], m, f"maps[{i}]")

    @property
    def last_stage(self) -> int:
        return len(self.stages) - 1

    def block(self, i: int, l: int) -> Block:
        self._check_stage(i)
        if not 0 <= l < len(self.stages[i]):
            raise ValidationError(f"block {l} out of range at stage {i}")
        return self.stages[i][l]

    def size(self, i: int, l: int) -> int:
        return self.block(i, l).matrix_size

    def _check_stage(self, i: int) -> None:
        if not 0 <= i < len(self.stages):
            raise ValidationError(f"stage {i} out of range")

    def legs(self, i: int, j: int) -> DiagonalMap:
        """Composite map from stage ``i`` to ``j >= i`` (identity legs when equal)."""
        self._check_stage(i)
        self._check_stage(j)
        if j < i:
            raise ValidationError("target stage precedes source stage")
        key = (i, j)
        if key in self._cache:
            return self._cache[key]
        if j == i:
            out = DiagonalMap(i, i, tuple(
                Leg(l, l, SimplicialMap.identity(b.space),
                    ProjectionClass(DEFAULT_LABEL, 1))
                for l, b in enumerate(self.stages[i])))
        elif j == i + 1:
            out = self.maps[i]
        else:
            prev = self.legs(i, j - 1)
            last = self.maps[j - 1]
            composed = []
            for g2 in last.legs:
                for g1 in prev.legs_between(None, g2.source):
                    composed.append(Leg(
                        g1.source, g2.target, g1.map.compose(g2.map),
                        _compose_projection(g1.projection, g2.projection)))
            out = DiagonalMap(i, j, tuple(composed))
        self._cache[key] = out
        return out

    def with_projections(self, projections: Sequence[Sequence[ProjectionClass]]) -> "AHSystem":
        """Same maps with new per-leg projection classes (one list per connecting map)."""
        if len(projections) != len(self.maps):
            raise ValidationError("one projection list per connecting map required")
        maps = []
        for i, (m, ps) in enumerate(zip(self.maps, projections)):
            if len(ps) != len(m.legs):
                raise ValidationError(f"maps[{i}]: one projection per leg required")
            maps.append(DiagonalMap(m.source_stage, m.target_stage, tuple(
                Leg(g.source, g.target, g.map, p) for g, p in zip(m.legs, ps))))
        return AHSystem(self.stages, tuple(maps))


def _compose_projection(first: ProjectionClass, second: ProjectionClass) -> ProjectionClass:
    if first.label == DEFAULT_LABEL and second.label == DEFAULT_LABEL:
        label: Hashable = DEFAULT_LABEL
    else:
        label = _label_tuple(first.label) + _label_tuple(second.label)
    return ProjectionClass(label, first.rank * second.rank)


def _label_tuple(label: Hashable) -> tuple:
    return label if isinstance(label, tuple) else (label,)


def compose_maps(sys: AHSystem, i: int, j: int) -> DiagonalMap:
    """``φ_{i,j}`` as a diagonal map; requires ``i < j``."""
    if not i < j:
        raise ValidationError("compose_maps needs i < j")
    return sys.legs(i, j)


def pullback_stage_cover(sys: AHSystem, i: int, j: int, k: int,
                         a: Sequence[Cover]) -> Cover:
    """Join, over all legs into block ``k`` of stage ``j``, of the pulled-back covers."""
    stage = sys.stages[i] if 0 <= i < len(sys.stages) else None
    if stage is None or len(a) != len(stage):
        raise ValidationError("need one cover per block of the base stage")
    for l, (cov, b) in enumerate(zip(a, stage)):
        if cov.complex != b.space:
            raise ValidationError(f"cover {l} does not live on block {l}")
    target = sys.block(j, k)
    result = Cover.trivial(target.space)
    for g in sys.legs(i, j).legs_between(None, k):
        result = join(result, pullback_cover(g.map, a[g.source]))
    return result


@dataclass(frozen=True)
class MeanDimEstimate:
    base_stage: int
    covers: tuple[Cover, ...]
    stages: tuple[int, ...]
    values: tuple[Fraction, ...]          # s_j = max_k D(φ^k_{i,j}(a)) / n_{j,k}
    exact: tuple[bool, ...]
    per_block: tuple[tuple[RefinementResult, ...], ...]

    @property
    def all_exact(self) -> bool:
        return all(self.exact)

    @property
    def non_increasing(self) -> bool:
        return all(x >= y for x, y in zip(self.values, self.values[1:]))


def mean_dimension_sequence(sys: AHSystem, i: int, a: Sequence[Cover],
                            J: int | None = None, level: int = 1,
                            budget: int = 10**6) -> MeanDimEstimate:
    J = sys.last_stage if J is None else J
    if J < i:
        raise ValidationError("truncation stage precedes the base stage")
    values, exact, per_block = [], [], []
    for j in range(i, J + 1):
        row = []
        for k, b in enumerate(sys.stages[j]):
            cov = pullback_stage_cover(sys, i, j, k, a)
            row.append(refinement_dimension(cov, level, budget))
        values.append(max(Fraction(r.value, b.matrix_size)
                          for r, b in zip(row, sys.stages[j])))
        exact.append(all(r.exact for r in row))
        per_block.append(tuple(row))
    return MeanDimEstimate(i, tuple(a), tuple(range(i, J + 1)), tuple(values),
                           tuple(exact), tuple(per_block))


def default_goodearl_points(n_maps: int, resolution: int) -> list[int]:
    """Constant targets spread over the interior of the path, avoiding vertex 0."""
    return [1 + (t * (resolution - 1)) // max(n_maps, 1) for t in range(n_maps)]


def build_goodearl(m: Sequence[int], point_vertices: Sequence[int] | None = None,
                   path_resolution: int = 8) -> AHSystem:
    """Goodearl-type system over a triangulated interval.

    Stage ``n -> n+1`` has ``m[n]`` legs: ``m[n]-1`` identities and one
    constant map to ``point_vertices[n]``; matrix sizes are ``r_{n+1} = m_n r_n``
    with ``r_0 = 1``.
    """
    if any(x < 2 for x in m):
        raise ValidationError("every multiplicity must be at least 2")
    space = path_complex(path_resolution + 1)
    if point_vertices is None:
        point_vertices = default_goodearl_points(len(m), path_resolution)
    if len(point_vertices) != len(m):
        raise ValidationError("one constant target per connecting map required")
    for p in point_vertices:
        if not 0 <= p < space.vertex_count:
            raise ValidationError(f"constant target {p} is not a vertex of the path")
    ident = SimplicialMap.identity(space)
    sizes = [1]
    for x in m:
        sizes.append(sizes[-1] * x)
    stages = tuple((Block(space, n),) for n in sizes)
    maps = []
    for n, (x, p) in enumerate(zip(m, point_vertices)):
        legs = [Leg(0, 0, ident) for _ in range(x - 1)]
        legs.append(Leg(0, 0, SimplicialMap.constant(space, space, p)))
        maps.append(DiagonalMap(n, n + 1, tuple(legs)))
    return AHSystem(stages, tuple(maps))


def subdivide_system(sys: AHSystem, level: int) -> AHSystem:
    """Every block space and eigenvalue map replaced by its ``level``-fold subdivision."""
    if level == 0:
        return sys
    stages = tuple(tuple(Block(subdivide(b.space, level).complex, b.matrix_size)
                         for b in s) for s in sys.stages)
    maps = tuple(DiagonalMap(m.source_stage, m.target_stage, tuple(
        Leg(g.source, g.target, subdivide_map(g.map, level), g.projection)
        for g in m.legs)) for m in sys.maps)
    return AHSystem(stages, maps)
