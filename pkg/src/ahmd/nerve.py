"""Subordinate partitions of unity, nerves and the approximation operator."""
from __future__ import annotations

from dataclasses import dataclass

from .covers import Cover, ord
from .errors import InvariantError, ValidationError
from .simplicial import Complex, PLFunction, iter_bits


@dataclass(frozen=True)
class PartitionOfUnity:
    """Vertex-witness partition on ``cover`` (already lifted to ``level``).

    ``witness[v]`` is the lowest-index element whose lift contains the open
    star of ``v``; ``functions[e]`` is the sum of barycentric coordinates of
    the vertices witnessed by ``e``.  ``anchors[e]`` is the lowest-index
    vertex whose star lies in element ``e`` (``None`` if there is none, in
    which case ``functions[e]`` vanishes).
    """

    base: Cover
    level: int
    cover: Cover
    witness: tuple[int, ...]
    functions: tuple[PLFunction, ...]
    anchors: tuple[int | None, ...]

    def check(self) -> None:
        c = self.cover.complex
        for v in range(c.vertex_count):
            if sum(f[v] for f in self.functions) != 1:
                raise InvariantError(f"partition does not sum to one at vertex {v}")
            for e, f in enumerate(self.functions):
                if f[v] > 0 and c.up(v) & ~self.cover.elements[e].mask:
                    raise InvariantError(f"function {e} is positive outside its element")
                if f[v] < 0:
                    raise InvariantError(f"function {e} is negative at vertex {v}")


def subordinate_partition(a: Cover, level: int = 0) -> PartitionOfUnity:
    if level < 0:
        raise ValidationError("subdivision level must be >= 0")
    lifted = a.lift(level)
    c = lifted.complex
    witness = []
    for v in range(c.vertex_count):
        star = c.up(v)
        w = next((e for e, u in enumerate(lifted.elements) if star & ~u.mask == 0), None)
        if w is None:
            raise ValidationError(
                f"level too small: the star of vertex {v} fits in no element")
        witness.append(w)
    funcs = tuple(PLFunction(c, tuple(1 if w == e else 0 for w in witness))
                  for e in range(len(lifted)))
    anchors = tuple(next(iter(iter_bits(u.mask & c.vertex_mask)), None)
                    for u in lifted.elements)
    return PartitionOfUnity(a, level, lifted, tuple(witness), funcs, anchors)


def _on_partition_complex(p: PartitionOfUnity, f: PLFunction) -> PLFunction:
    if f.complex == p.cover.complex:
        return f
    if f.complex == p.base.complex:
        return f.refine(p.level)
    raise ValidationError("function lives on another complex")


def theta(p: PartitionOfUnity, f: PLFunction) -> PLFunction:
    """``Θ(f) = Σ_U φ_U · f(x_U)``; at a vertex this is ``f`` at the witness anchor."""
    f = _on_partition_complex(p, f)
    c = p.cover.complex
    vals = []
    for v in range(c.vertex_count):
        vals.append(sum(phi[v] * f[x] for phi, x in zip(p.functions, p.anchors)
                        if x is not None))
    return PLFunction(c, tuple(vals))


def max_element_oscillation(a: Cover, f: PLFunction) -> object:
    """Largest ``max - min`` of ``f`` over the closure vertices of an element."""
    c = a.complex
    out = 0
    for u in a.elements:
        verts = c.vertices_of_mask(c.down_closure(u.mask))
        out = max(out, f.range_on(verts))
    return out


@dataclass(frozen=True)
class NerveComplex:
    cover: Cover
    nerve: Complex        # vertex e is cover element e

    @property
    def dimension(self) -> int:
        return self.nerve.dimension


def nerve(a: Cover) -> NerveComplex:
    """Subfamilies of elements sharing a simplex of the base complex."""
    tops: set[tuple[int, ...]] = set()
    for s in range(len(a.complex)):
        tops.add(tuple(e for e, u in enumerate(a.elements) if u.mask >> s & 1))
    n = NerveComplex(a, Complex(tops, len(a)))
    if n.dimension != ord(a):
        raise InvariantError("nerve dimension differs from the order of the cover")
    return n


@dataclass(frozen=True)
class NerveMap:
    """``ξ(v) = (φ_U(v))_U`` for each vertex of the partition's complex."""

    partition: PartitionOfUnity
    nerve: NerveComplex
    coordinates: tuple[tuple, ...]

    def support(self, v: int) -> tuple[int, ...]:
        return tuple(e for e, x in enumerate(self.coordinates[v]) if x)

    def extension(self, f: PLFunction) -> PLFunction:
        """``f̆`` on the nerve: the affine extension of ``U -> f(x_U)``."""
        f = _on_partition_complex(self.partition, f)
        vals = tuple(f[x] if x is not None else 0 for x in self.partition.anchors)
        return PLFunction(self.nerve.nerve, vals)

    def compose(self, f: PLFunction) -> PLFunction:
        """``f̆ ∘ ξ`` evaluated at every vertex."""
        ext = self.extension(f)
        c = self.partition.cover.complex
        vals = []
        for v in range(c.vertex_count):
            supp = self.support(v)
            vals.append(ext.at(supp, [self.coordinates[v][e] for e in supp]))
        return PLFunction(c, tuple(vals))


def nerve_map(p: PartitionOfUnity) -> NerveMap:
    n = nerve(p.cover)
    c = p.cover.complex
    coords = tuple(tuple(phi[v] for phi in p.functions) for v in range(c.vertex_count))
    m = NerveMap(p, n, coords)
    for v in range(c.vertex_count):
        supp = m.support(v)
        if supp not in n.nerve.index:
            raise InvariantError(f"vertex {v} maps outside every nerve simplex")
    return m


def sample_error(p: PartitionOfUnity, f: PLFunction, extra_levels: int = 2):
    """``max |Θ(f) - f|`` over the vertices of ``extra_levels`` further subdivisions."""
    f = _on_partition_complex(p, f)
    t = theta(p, f).refine(extra_levels)
    g = f.refine(extra_levels)
    return max(abs(x - y) for x, y in zip(t.vertex_values, g.vertex_values))

