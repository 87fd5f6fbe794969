"""Finite open covers: order, joins, pullbacks and minimum-order refinement."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple, Sequence

from .errors import InvariantError, ValidationError
from .search import min_label_order
from .simplicial import (Complex, OpenSet, SimplicialMap, iter_bits,
                         open_star, preimage, subdivide)


@dataclass(frozen=True)
class Cover:
    complex: Complex
    elements: tuple[OpenSet, ...]

    def __post_init__(self) -> None:
        elems = tuple(self.elements)
        object.__setattr__(self, "elements", elems)
        if not elems:
            raise ValidationError("a cover needs at least one element")
        union = 0
        for k, u in enumerate(elems):
            if u.complex != self.complex:
                raise ValidationError(f"element {k} lives on another complex")
            if not u:
                raise ValidationError(f"element {k} is empty")
            union |= u.mask
        if union != self.complex.full_mask:
            missing = sorted(self.complex.simplices_of(
                self.complex.full_mask & ~union))
            raise ValidationError(f"not a cover: {missing[:3]} uncovered")

    @classmethod
    def trivial(cls, c: Complex) -> "Cover":
        """The one-element cover ``{X}``."""
        return cls(c, (c.everything(),))

    @classmethod
    def stars(cls, c: Complex) -> "Cover":
        """Open stars of all vertices."""
        return cls(c, tuple(open_star(c, [v]) for v in range(c.vertex_count)))

    @classmethod
    def from_masks(cls, c: Complex, masks: Sequence[int]) -> "Cover":
        return cls(c, tuple(OpenSet(c, m) for m in masks))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def masks(self) -> list[int]:
        return [u.mask for u in self.elements]

    def multiplicities(self) -> list[int]:
        """Number of elements containing each simplex, by simplex index."""
        counts = [0] * len(self.complex)
        for u in self.elements:
            for i in iter_bits(u.mask):
                counts[i] += 1
        return counts

    def deduplicated(self) -> "Cover":
        seen: dict[int, OpenSet] = {}
        for u in self.elements:
            seen.setdefault(u.mask, u)
        return Cover(self.complex, tuple(seen.values()))

    def lift(self, level: int) -> "Cover":
        if level == 0:
            return self
        sub = subdivide(self.complex, level)
        return Cover(sub.complex, tuple(sub.lift_open(u) for u in self.elements))

    def refines(self, other: "Cover") -> bool:
        return all(any(u <= w for w in other.elements) for u in self.elements)

    def same_profile(self, other: "Cover") -> bool:
        """Same sets of elements, ignoring order and repetitions."""
        return {u.mask for u in self.elements} == {w.mask for w in other.elements}


def ord(a: Cover) -> int:  # noqa: A001 - the standard name of the invariant
    """Largest number of elements sharing a simplex, minus one."""
    return max(a.multiplicities()) - 1


def join(a: Cover, b: Cover) -> Cover:
    """All nonempty pairwise intersections, repetitions removed."""
    if a.complex != b.complex:
        raise ValidationError("join of covers on different complexes")
    out: dict[int, None] = {}
    for u in a.elements:
        for w in b.elements:
            m = u.mask & w.mask
            if m:
                out.setdefault(m, None)
    return Cover.from_masks(a.complex, list(out))


def join_all(covers: Sequence[Cover]) -> Cover:
    result = covers[0]
    for c in covers[1:]:
        result = join(result, c)
    return result


def pullback_cover(f: SimplicialMap, a: Cover) -> Cover:
    """Elementwise preimage; empty and repeated preimages are dropped."""
    if a.complex != f.codomain:
        raise ValidationError("cover does not live on the map's codomain")
    out: dict[int, None] = {}
    for u in a.elements:
        m = preimage(f, u).mask
        if m:
            out.setdefault(m, None)
    return Cover.from_masks(f.domain, list(out))


@dataclass(frozen=True)
class RefinementCertificate:
    """A refinement of ``coarse`` with the element each piece sits in."""

    cover: Cover
    witness: tuple[int, ...]
    achieved_order: int
    coarse: Cover

    def check(self) -> None:
        if len(self.witness) != len(self.cover.elements):
            raise InvariantError("one witness per element required")
        if self.cover.complex != self.coarse.complex:
            raise InvariantError("certificate and coarse cover on different complexes")
        for k, (v, w) in enumerate(zip(self.cover.elements, self.witness)):
            if not v <= self.coarse.elements[w]:
                raise InvariantError(f"element {k} not inside its witness {w}")
        if ord(self.cover) != self.achieved_order:
            raise InvariantError("achieved_order differs from ord(cover)")

    def to_dict(self) -> dict:
        c = self.cover.complex
        return {
            "achieved_order": self.achieved_order,
            "witness": list(self.witness),
            "elements": [[list(s) for s in sorted(u.members, key=lambda s: c.index[s])]
                         for u in self.cover.elements],
            "vertex_count": c.vertex_count,
        }


class RefinementResult(NamedTuple):
    value: int
    certificate: RefinementCertificate
    exact: bool
    nodes: int = 0


def certificate_from_labels(coarse: Cover, labels: Sequence[int]) -> RefinementCertificate:
    """Open-star shrinking given by one coarse-element label per vertex."""
    c = coarse.complex
    masks: dict[int, int] = {}
    for v, lab in enumerate(labels):
        masks[lab] = masks.get(lab, 0) | c.up(v)
    witness = tuple(sorted(masks))
    cover = Cover.from_masks(c, [masks[w] for w in witness])
    return RefinementCertificate(cover, witness, ord(cover), coarse)


def component_lower_bound(a: Cover) -> int:
    """0 if each component lies in one element, else 1."""
    for comp in a.complex.connected_components():
        vmask = sum(1 << v for v in comp)
        if not any(u.mask & vmask == vmask for u in a.elements):
            return 1
    return 0


def admissible_labels(a: Cover) -> list[list[int]]:
    return [[i for i, u in enumerate(a.elements) if u.mask >> v & 1]
            for v in range(a.complex.vertex_count)]


def refinement_dimension(a: Cover, level: int = 1,
                         budget: int = 10**6) -> RefinementResult:
    """Minimum order over shrinkings of ``a`` lifted to subdivision ``level``.

    The value is exact within the combinatorial model at that level when
    the returned flag is set, and is always an upper bound for the
    topological invariant.
    """
    if budget <= 0:
        raise ValidationError("search budget must be positive")
    if level < 0:
        raise ValidationError("subdivision level must be >= 0")
    lifted = a.lift(level)
    incumbent = RefinementCertificate(lifted, tuple(range(len(lifted))),
                                      ord(lifted), lifted)
    lower = component_lower_bound(lifted)
    facets = lifted.complex.facets
    res = min_label_order(facets, admissible_labels(lifted), budget,
                          upper=incumbent.achieved_order, lower=lower)
    cert = incumbent
    if res.labels is not None:
        cert = certificate_from_labels(lifted, res.labels)
    return RefinementResult(cert.achieved_order, cert, res.exact, res.nodes)


def greedy_refinement(a: Cover, level: int = 1) -> RefinementCertificate:
    """Shrink greedily: drop a most-covered simplex (with its faces) from the
    element carrying most overlap, while the family still covers."""
    if level < 0:
        raise ValidationError("subdivision level must be >= 0")
    lifted = a.lift(level)
    c = lifted.complex
    masks = lifted.masks
    counts = lifted.multiplicities()
    changed = True
    while changed:
        changed = False
        hot = sorted((i for i in range(len(c)) if counts[i] > 1),
                     key=lambda i: (-counts[i], i))
        # overlap ranking is refreshed once per pass
        overlap = [sum(counts[i] - 1 for i in iter_bits(m)) for m in masks]
        for s in hot:
            if counts[s] < 2:
                continue
            holders = [k for k, m in enumerate(masks) if m >> s & 1]
            for k in sorted(holders, key=lambda k: (-overlap[k], k)):
                removed = masks[k] & c.down(s)
                # every removed simplex must stay covered by another element
                if all(counts[i] > 1 for i in iter_bits(removed)):
                    masks[k] &= ~removed
                    for i in iter_bits(removed):
                        counts[i] -= 1
                    changed = True
                    break
    kept = [k for k, m in enumerate(masks) if m]
    cover = Cover.from_masks(c, [masks[k] for k in kept])
    return RefinementCertificate(cover, tuple(kept), ord(cover), lifted)


def mediant_bound(numerators: Sequence, denominators: Sequence,
                  weights: Sequence):
    """``Σ m_i a_i / Σ m_i b_i``; never exceeds ``max a_i / b_i``."""
    if not (len(numerators) == len(denominators) == len(weights)) or not weights:
        raise ValidationError("numerators, denominators and weights must align")
    if any(b <= 0 for b in denominators):
        raise ValidationError("zero or negative denominator")
    if any(m <= 0 for m in weights):
        raise ValidationError("weights must be positive")
    num = sum(m * x for m, x in zip(weights, numerators))
    den = sum(m * b for m, b in zip(weights, denominators))
    if isinstance(num, Rational) and isinstance(den, Rational):
        return Fraction(num, den)
    return num / den
