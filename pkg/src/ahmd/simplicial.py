"""Finite simplicial complexes and their combinatorial open/closed sets.

Simplices are sorted vertex tuples.  Every complex orders its simplices by
``(dimension, lexicographic)`` so the 0-simplex ``(v,)`` always has index
``v``; subsets of simplices are stored as Python ``int`` bitmasks over those
indices.

An *open* set is an up-closed family of simplices (a union of open simplex
interiors of the geometric realization); a *closed* set is a subcomplex.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from typing import Iterable, Iterator, Sequence

from .errors import ValidationError

Simplex = tuple[int, ...]


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Complex:
    """A finite abstract simplicial complex on vertices ``0..vertex_count-1``.

    The constructor closes the given simplices under taking nonempty faces and
    adds every vertex index as a 0-simplex.
    """

    __slots__ = ("vertex_count", "simplices", "index", "_up", "_down",
                 "_hash", "full_mask")

    def __init__(self, simplices: Iterable[Iterable[int]],
                 vertex_count: int | None = None):
        closed: set[Simplex] = set()
        for raw in simplices:
            s = tuple(sorted(set(int(v) for v in raw)))
            if not s:
                raise ValidationError("empty simplex")
            if s[0] < 0:
                raise ValidationError(f"negative vertex index in {s}")
            if s in closed:
                continue
            for r in range(1, len(s) + 1):
                closed.update(itertools.combinations(s, r))
        top = max((s[-1] for s in closed), default=-1)
        if vertex_count is None:
            vertex_count = top + 1
        if top >= vertex_count:
            raise ValidationError(
                f"vertex {top} out of range for vertex_count={vertex_count}")
        closed.update((v,) for v in range(vertex_count))
        self.vertex_count = vertex_count
        self.simplices: tuple[Simplex, ...] = tuple(
            sorted(closed, key=lambda s: (len(s), s)))
        self.index: dict[Simplex, int] = {
            s: i for i, s in enumerate(self.simplices)}
        n = len(self.simplices)
        up = [0] * n
        down = [0] * n
        for t, tau in enumerate(self.simplices):
            for r in range(1, len(tau) + 1):
                for face in itertools.combinations(tau, r):
                    f = self.index[face]
                    up[f] |= 1 << t
                    down[t] |= 1 << f
        self._up = tuple(up)
        self._down = tuple(down)
        self.full_mask = (1 << n) - 1
        self._hash = hash((vertex_count, self.simplices))

    @classmethod
    def from_facets(cls, facets: Iterable[Iterable[int]],
                    vertex_count: int | None = None) -> "Complex":
        return cls(facets, vertex_count)

    def __len__(self) -> int:
        return len(self.simplices)

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Complex):
            return NotImplemented
        return (self._hash == other._hash
                and self.vertex_count == other.vertex_count
                and self.simplices == other.simplices)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return (f"Complex(vertex_count={self.vertex_count}, "
                f"facets={list(self.facets)})")

    @property
    def dimension(self) -> int:
        return max((len(s) for s in self.simplices), default=0) - 1

    @property
    def vertex_mask(self) -> int:
        return (1 << self.vertex_count) - 1

    @property
    def facets(self) -> tuple[Simplex, ...]:
        """Maximal simplices."""
        return tuple(s for i, s in enumerate(self.simplices)
                     if self._up[i] == 1 << i)

    def up(self, i: int) -> int:
        """Mask of all simplices having simplex ``i`` as a face (itself included)."""
        return self._up[i]

    def down(self, i: int) -> int:
        """Mask of all faces of simplex ``i`` (itself included)."""
        return self._down[i]

    def mask_of(self, simplices: Iterable[Iterable[int]]) -> int:
        mask = 0
        for s in simplices:
            key = tuple(sorted(set(s)))
            try:
                mask |= 1 << self.index[key]
            except KeyError:
                raise ValidationError(f"{key} is not a simplex") from None
        return mask

    def simplices_of(self, mask: int) -> frozenset[Simplex]:
        return frozenset(self.simplices[i] for i in iter_bits(mask))

    def up_closure(self, mask: int) -> int:
        out = 0
        for i in iter_bits(mask):
            out |= self._up[i]
        return out

    def down_closure(self, mask: int) -> int:
        out = 0
        for i in iter_bits(mask):
            out |= self._down[i]
        return out

    def is_up_closed(self, mask: int) -> bool:
        return all(self._up[i] & ~mask == 0 for i in iter_bits(mask))

    def is_down_closed(self, mask: int) -> bool:
        return all(self._down[i] & ~mask == 0 for i in iter_bits(mask))

    def vertices_of_mask(self, mask: int) -> list[int]:
        """All vertices of all simplices in ``mask`` (the closure's vertex set)."""
        return list(iter_bits(self.down_closure(mask) & self.vertex_mask))

    def neighbours(self, v: int) -> set[int]:
        return {w for s in self.simplices if len(s) == 2 and v in s
                for w in s if w != v}

    def connected_components(self) -> list[list[int]]:
        parent = list(range(self.vertex_count))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for s in self.simplices:
            if len(s) == 2:
                a, b = find(s[0]), find(s[1])
                if a != b:
                    parent[max(a, b)] = min(a, b)
        groups: dict[int, list[int]] = {}
        for v in range(self.vertex_count):
            groups.setdefault(find(v), []).append(v)
        return [groups[r] for r in sorted(groups)]

    def is_connected(self) -> bool:
        return len(self.connected_components()) == 1

    def open_star(self, vertices: Iterable[int]) -> "OpenSet":
        return open_star(self, vertices)

    def everything(self) -> "OpenSet":
        return OpenSet(self, self.full_mask)

    def to_dict(self) -> dict:
        return {"vertex_count": self.vertex_count,
                "facets": [list(s) for s in self.facets]}


def path_complex(n_vertices: int) -> Complex:
    """Path graph ``0-1-...-(n-1)``; a triangulated interval."""
    if n_vertices < 1:
        raise ValidationError("a path needs at least one vertex")
    return Complex([(v, v + 1) for v in range(n_vertices - 1)], n_vertices)


def cycle_complex(n_vertices: int) -> Complex:
    """Cycle graph on ``n_vertices >= 3`` vertices; a triangulated circle."""
    if n_vertices < 3:
        raise ValidationError("a cycle needs at least three vertices")
    return Complex([(v, (v + 1) % n_vertices) for v in range(n_vertices)],
                   n_vertices)


def simplex_complex(dim: int) -> Complex:
    """The full ``dim``-simplex with all its faces."""
    return Complex([tuple(range(dim + 1))], dim + 1)


@dataclass(frozen=True)
class OpenSet:
    complex: Complex
    mask: int

    def __post_init__(self) -> None:
        if self.mask & ~self.complex.full_mask:
            raise ValidationError("open set mask exceeds the complex")
        if not self.complex.is_up_closed(self.mask):
            raise ValidationError("open set is not up-closed")

    @classmethod
    def from_simplices(cls, c: Complex,
                       simplices: Iterable[Iterable[int]]) -> "OpenSet":
        return cls(c, c.mask_of(simplices))

    @classmethod
    def generated_by(cls, c: Complex,
                     simplices: Iterable[Iterable[int]]) -> "OpenSet":
        """Smallest open set containing the given simplices."""
        return cls(c, c.up_closure(c.mask_of(simplices)))

    @property
    def members(self) -> frozenset[Simplex]:
        return self.complex.simplices_of(self.mask)

    @property
    def vertices(self) -> list[int]:
        """Vertices ``v`` with ``{v}`` in the set, i.e. whose open star lies inside."""
        return list(iter_bits(self.mask & self.complex.vertex_mask))

    def __contains__(self, simplex: object) -> bool:
        i = self.complex.index.get(tuple(sorted(simplex)))  # type: ignore[arg-type]
        return i is not None and bool(self.mask >> i & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def _check(self, other: "OpenSet") -> None:
        if other.complex != self.complex:
            raise ValidationError("open sets live on different complexes")

    def __and__(self, other: "OpenSet") -> "OpenSet":
        self._check(other)
        return OpenSet(self.complex, self.mask & other.mask)

    def __or__(self, other: "OpenSet") -> "OpenSet":
        self._check(other)
        return OpenSet(self.complex, self.mask | other.mask)

    def __le__(self, other: "OpenSet") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def closure(self) -> "ClosedSet":
        return ClosedSet(self.complex, self.complex.down_closure(self.mask))

    def boundary(self) -> "ClosedSet":
        return closure_and_boundary(self)[1]


@dataclass(frozen=True)
class ClosedSet:
    complex: Complex
    mask: int

    def __post_init__(self) -> None:
        if self.mask & ~self.complex.full_mask:
            raise ValidationError("closed set mask exceeds the complex")
        if not self.complex.is_down_closed(self.mask):
            raise ValidationError("closed set is not down-closed")

    @classmethod
    def from_simplices(cls, c: Complex,
                       simplices: Iterable[Iterable[int]]) -> "ClosedSet":
        return cls(c, c.mask_of(simplices))

    @classmethod
    def generated_by(cls, c: Complex,
                     simplices: Iterable[Iterable[int]]) -> "ClosedSet":
        return cls(c, c.down_closure(c.mask_of(simplices)))

    @property
    def members(self) -> frozenset[Simplex]:
        return self.complex.simplices_of(self.mask)

    def __contains__(self, simplex: object) -> bool:
        i = self.complex.index.get(tuple(sorted(simplex)))  # type: ignore[arg-type]
        return i is not None and bool(self.mask >> i & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def __or__(self, other: "ClosedSet") -> "ClosedSet":
        return ClosedSet(self.complex, self.mask | other.mask)

    def star_neighbourhood(self, radius: int = 1) -> "ClosedSet":
        """``radius``-fold closed-star fattening of the subcomplex."""
        c = self.complex
        mask = self.mask
        for _ in range(radius):
            mask = c.down_closure(c.up_closure(mask))
        return ClosedSet(c, mask)


def open_star(c: Complex, vertices: Iterable[int]) -> OpenSet:
    """All simplices meeting ``vertices``."""
    mask = 0
    for v in vertices:
        if not 0 <= v < c.vertex_count:
            raise ValidationError(f"vertex {v} out of range")
        mask |= c.up(v)
    return OpenSet(c, mask)


def closure_and_boundary(u: OpenSet) -> tuple[ClosedSet, ClosedSet]:
    """Closure of ``u`` and its frontier ``closure \\ u``.

    ``u`` is up-closed, so it is its own interior and the frontier is again
    a subcomplex.
    """
    c = u.complex
    closure = c.down_closure(u.mask)
    return ClosedSet(c, closure), ClosedSet(c, closure & ~u.mask)


@dataclass(frozen=True)
class SimplicialMap:
    domain: Complex
    codomain: Complex
    vertex_image: tuple[int, ...]
    simplex_image: tuple[int, ...] = field(init=False, repr=False,
                                           compare=False)

    def __post_init__(self) -> None:
        vi = tuple(int(v) for v in self.vertex_image)
        object.__setattr__(self, "vertex_image", vi)
        if len(vi) != self.domain.vertex_count:
            raise ValidationError(
                f"vertex_image has {len(vi)} entries, domain has "
                f"{self.domain.vertex_count} vertices")
        index = self.codomain.index
        images = []
        for s in self.domain.simplices:
            img = tuple(sorted({vi[v] for v in s}))
            j = index.get(img)
            if j is None:
                raise ValidationError(
                    f"simplex {s} maps to {img}, not a simplex of the codomain")
            images.append(j)
        object.__setattr__(self, "simplex_image", tuple(images))

    @classmethod
    def identity(cls, c: Complex) -> "SimplicialMap":
        return cls(c, c, tuple(range(c.vertex_count)))

    @classmethod
    def constant(cls, domain: Complex, codomain: Complex,
                 vertex: int) -> "SimplicialMap":
        return cls(domain, codomain, (vertex,) * domain.vertex_count)

    def __call__(self, simplex: Sequence[int]) -> Simplex:
        return tuple(sorted({self.vertex_image[v] for v in simplex}))

    @property
    def is_identity(self) -> bool:
        return (self.domain == self.codomain
                and self.vertex_image == tuple(range(self.domain.vertex_count)))

    def compose(self, inner: "SimplicialMap") -> "SimplicialMap":
        """``self ∘ inner`` (apply ``inner`` first)."""
        if inner.codomain != self.domain:
            raise ValidationError("cannot compose: complex mismatch")
        return SimplicialMap(inner.domain, self.codomain,
                             tuple(self.vertex_image[v]
                                   for v in inner.vertex_image))


def preimage(f: SimplicialMap, u: OpenSet) -> OpenSet:
    if u.complex != f.codomain:
        raise ValidationError("open set does not live on the map's codomain")
    target = u.mask
    mask = 0
    for i, j in enumerate(f.simplex_image):
        if target >> j & 1:
            mask |= 1 << i
    return OpenSet(f.domain, mask)


def preimage_closed(f: SimplicialMap, e: ClosedSet) -> ClosedSet:
    if e.complex != f.codomain:
        raise ValidationError("closed set does not live on the map's codomain")
    mask = 0
    for i, j in enumerate(f.simplex_image):
        if e.mask >> j & 1:
            mask |= 1 << i
    return ClosedSet(f.domain, mask)


@dataclass(frozen=True)
class PLFunction:
    """Function on ``|complex|`` that is affine on every simplex."""

    complex: Complex
    vertex_values: tuple

    def __post_init__(self) -> None:
        vals = tuple(self.vertex_values)
        if len(vals) != self.complex.vertex_count:
            raise ValidationError(
                f"{len(vals)} vertex values for {self.complex.vertex_count} vertices")
        for x in vals:
            if not isinstance(x, Real):
                raise ValidationError(f"non-real vertex value {x!r}")
        object.__setattr__(self, "vertex_values", vals)

    @classmethod
    def constant(cls, c: Complex, value) -> "PLFunction":
        return cls(c, (value,) * c.vertex_count)

    def __getitem__(self, v: int):
        return self.vertex_values[v]

    def at(self, simplex: Sequence[int], weights: Sequence) -> Real:
        """Value at the point with barycentric ``weights`` on ``simplex``."""
        return sum(w * self.vertex_values[v] for v, w in zip(simplex, weights))

    def max(self):
        return max(self.vertex_values)

    def min(self):
        return min(self.vertex_values)

    def range_on(self, vertices: Iterable[int]):
        """``max - min`` over the given vertices (0 for an empty set)."""
        vals = [self.vertex_values[v] for v in vertices]
        return max(vals) - min(vals) if vals else 0

    def pullback(self, f: SimplicialMap) -> "PLFunction":
        """``self ∘ |f|``, again affine on simplices of ``f.domain``."""
        if f.codomain != self.complex:
            raise ValidationError("function does not live on the map's codomain")
        return PLFunction(f.domain,
                          tuple(self.vertex_values[w] for w in f.vertex_image))

    def refine(self, level: int) -> "PLFunction":
        """The same function expressed on the ``level``-fold subdivision."""
        if level == 0:
            return self
        sub = subdivide(self.complex, level)
        vals = tuple(sum(w * self.vertex_values[v] for v, w in pos)
                     for pos in sub.positions)
        return PLFunction(sub.complex, vals)

    def __add__(self, other: "PLFunction") -> "PLFunction":
        if other.complex != self.complex:
            raise ValidationError("functions live on different complexes")
        return PLFunction(self.complex, tuple(
            a + b for a, b in zip(self.vertex_values, other.vertex_values)))

    def scale(self, c) -> "PLFunction":
        return PLFunction(self.complex, tuple(c * a for a in self.vertex_values))


def barycentric_subdivide(c: Complex) -> tuple[Complex, tuple[int, ...]]:
    """First barycentric subdivision.

    Vertex ``s`` of the result is the barycenter of simplex index ``s`` of
    ``c``; simplices are chains of faces.  The carrier sends each chain to
    the index of its largest element.
    """
    chains_ending: list[list[Simplex]] = []
    for t in range(len(c.simplices)):
        ch: list[Simplex] = [(t,)]
        for f in iter_bits(c.down(t) & ~(1 << t)):
            ch.extend(prev + (t,) for prev in chains_ending[f])
        chains_ending.append(ch)
    chains = [chain for group in chains_ending for chain in group]
    sd = Complex(chains, len(c.simplices))
    # face indices precede their cofaces, so the last entry is the maximum
    carrier = tuple(s[-1] for s in sd.simplices)
    return sd, carrier


@dataclass(frozen=True)
class Subdivision:
    base: Complex
    level: int
    complex: Complex
    carrier: tuple[int, ...]
    # barycentric coordinates of each subdivision vertex over base vertices
    positions: tuple[tuple[tuple[int, Fraction], ...], ...]

    def lift_mask(self, mask: int) -> int:
        out = 0
        for i, t in enumerate(self.carrier):
            if mask >> t & 1:
                out |= 1 << i
        return out

    def lift_open(self, u: OpenSet) -> OpenSet:
        if u.complex != self.base:
            raise ValidationError("open set is not on the subdivided complex")
        return OpenSet(self.complex, self.lift_mask(u.mask))

    def lift_closed(self, e: ClosedSet) -> ClosedSet:
        if e.complex != self.base:
            raise ValidationError("closed set is not on the subdivided complex")
        return ClosedSet(self.complex, self.lift_mask(e.mask))


@lru_cache(maxsize=256)
def subdivide(c: Complex, level: int) -> Subdivision:
    """``level``-fold iterated barycentric subdivision with carrier data."""
    if level < 0:
        raise ValidationError("subdivision level must be >= 0")
    if level == 0:
        return Subdivision(c, 0, c, tuple(range(len(c.simplices))),
                           tuple(((v, Fraction(1)),)
                                 for v in range(c.vertex_count)))
    prev = subdivide(c, level - 1)
    sd, carrier = barycentric_subdivide(prev.complex)
    positions = []
    for s in prev.complex.simplices:
        acc: dict[int, Fraction] = {}
        for v in s:
            for b, w in prev.positions[v]:
                acc[b] = acc.get(b, Fraction(0)) + w / len(s)
        positions.append(tuple(sorted(acc.items())))
    return Subdivision(c, level, sd,
                       tuple(prev.carrier[t] for t in carrier),
                       tuple(positions))


@lru_cache(maxsize=1024)
def subdivide_map(f: SimplicialMap, level: int) -> SimplicialMap:
    """Simplicial subdivision ``sd^level(f)``: barycenter of σ goes to barycenter of f(σ)."""
    if level == 0:
        return f
    g = subdivide_map(f, level - 1)
    dom = subdivide(f.domain, level).complex
    cod = subdivide(f.codomain, level).complex
    return SimplicialMap(dom, cod, g.simplex_image)
