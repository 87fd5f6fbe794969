import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ahmd.branched import (BranchedCover, BranchedPair, branched_join, cuntz_mean_dimension_sequence,
                           cuntz_ratio, induce, min_ratio_shrinking, multiplicity,
                           stage_branched_cover)
from ahmd.covers import Cover, join, ord, refinement_dimension
from ahmd.errors import ValidationError
from ahmd.simplicial import OpenSet, SimplicialMap, open_star, path_complex
from ahmd.system import (AHSystem, Block, DiagonalMap, Leg, ProjectionClass, build_goodearl,
                         mean_dimension_sequence, pullback_stage_cover)

from helpers import brute_upsets, random_cover, random_system, small_bases

seeds = st.integers(0, 2**32 - 1)
A1, B3 = ProjectionClass("a", 1), ProjectionClass("b", 3)


def class_mul(instances):
    counts = {}
    for cls, _ in set(instances):
        counts[cls] = counts.get(cls, 0) + 1
    return min(n * cls.rank for cls, n in counts.items())


# multiplicity

def test_common_label_copies():
    c = path_complex(3)
    r = ProjectionClass("q", 2)
    pairs = [BranchedPair(c.everything(), r, t) for t in range(3)]
    assert multiplicity(BranchedCover(c, pairs)) == 3 * 2


def test_mixed_classes():
    c = path_complex(3)
    x = c.everything()
    bc = BranchedCover(c, [BranchedPair(x, A1, 0), BranchedPair(x, A1, 1), BranchedPair(x, B3, 2)])
    assert multiplicity(bc) == 2


def test_single_pair():
    c = path_complex(2)
    assert multiplicity(BranchedCover.trivial(c, ProjectionClass("r", 5))) == 5


def test_label_rank_clash_rejected():
    c = path_complex(2)
    with pytest.raises(ValidationError):
        BranchedCover(c, [BranchedPair(c.everything(), A1), BranchedPair(c.everything(), ProjectionClass("a", 2))])


# join

def two_piece(c, split, cls):
    return BranchedCover.from_cover(
        Cover(c, (open_star(c, range(split + 1)), open_star(c, range(split, c.vertex_count)))), cls)


def test_join_with_trivial():
    c = path_complex(4)
    a = two_piece(c, 1, A1)
    j = branched_join(a, BranchedCover.trivial(c, B3))
    for p in a.pairs:
        assert {q.projection for q in j.pairs if q.set == p.set} == {A1, B3}


def test_join_brute_force():
    c = path_complex(5)
    a, b = two_piece(c, 1, A1), two_piece(c, 3, B3)
    expected = set()
    for p, q in itertools.product(a.pairs, b.pairs):
        w = p.set.mask & q.set.mask
        if w:
            expected |= {(w, p.projection.label), (w, q.projection.label)}
    got = {(p.set.mask, p.projection.label) for p in branched_join(a, b).pairs}
    assert got == expected


def test_join_with_itself():
    c = path_complex(4)
    a = two_piece(c, 2, A1)
    j = branched_join(a, a)
    got = {(p.set.mask, p.projection) for p in j.pairs}
    assert {(p.set.mask, p.projection) for p in a.pairs} <= got
    assert len(j.pairs) == len(got)


# induce

def test_induce_own_cover():
    c = path_complex(4)
    big = BranchedPair(c.everything(), B3)
    a = BranchedCover(c, [BranchedPair(open_star(c, [0, 1]), A1), big])
    ind = induce(a, a.underlying())
    small = open_star(c, [0, 1])
    assert {p.projection for p in ind.pairs if p.set == small} == {A1, B3}
    assert {p.projection for p in ind.pairs if p.set == c.everything()} == {B3}


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_induce_brute_force(seed):
    rng = random.Random(seed)
    c = rng.choice(small_bases())
    a = BranchedCover(c, [BranchedPair(u, rng.choice([A1, B3]))
                          for u in random_cover(rng, c).elements])
    b = Cover(c, tuple(OpenSet(c, m) for m in
                       {u.mask & w.mask for u in a.underlying().elements
                        for w in random_cover(rng, c).elements} if m))
    ind = induce(a, b)
    for w in b.elements:
        expected = {p.projection.label for p in a.pairs if w.mask & ~p.set.mask == 0}
        assert {p.projection.label for p in ind.pairs if p.set == w} == expected


def test_induce_two_labels_on_overlap():
    c = path_complex(5)
    a = BranchedCover(c, [BranchedPair(open_star(c, [0, 1, 2]), A1),
                          BranchedPair(open_star(c, [2, 3, 4]), B3)])
    w = open_star(c, [2])
    ind = induce(a, Cover(c, (w, open_star(c, [0, 1]), open_star(c, [3, 4]))))
    assert {p.projection for p in ind.pairs if p.set == w} == {A1, B3}
    assert class_mul(ind.classes_on(w)) == 1


def test_induce_rejects_outside():
    c = path_complex(3)
    a = two_piece(c, 1, A1)
    b = Cover.trivial(c)
    with pytest.raises(ValidationError):
        induce(a, b)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_label_deduplicated_induce_mul_drops_under_refinement(seed):
    rng = random.Random(seed)
    c = rng.choice(small_bases())
    classes = [A1, B3, ProjectionClass("c", 2)]
    a = BranchedCover(c, [BranchedPair(u, rng.choice(classes)) for u in random_cover(rng, c).elements])
    b = a.underlying()
    finer = join(b, random_cover(rng, c))
    assert multiplicity(induce(a, finer)) <= multiplicity(induce(a, b))


# ratio search

def brute_ratio(bc):
    """Least ord/mul over every shrinking (level 0) of the underlying cover."""
    base = bc.underlying()
    c = base.complex
    sets = base.elements
    options = [[m for m in brute_upsets(c, u.mask)] for u in sets]
    best = None
    for choice in itertools.product(*options):
        union = 0
        for m in choice:
            union |= m
        if union != c.full_mask:
            continue
        kept = [m for m in choice if m]
        order = max(sum(1 for m in kept if m >> s & 1) for s in range(len(c))) - 1
        mul = min(class_mul([(p.projection, p.tag) for p in bc.pairs if m & ~p.set.mask == 0])
                  for m in kept)
        val = Fraction(order, mul)
        best = val if best is None or val < best else best
    return best


def test_two_labels_ranks_one_and_three():
    c = path_complex(3)
    legs = (Leg(0, 0, SimplicialMap.identity(c), A1),
            Leg(0, 0, SimplicialMap(c, c, (1, 1, 2)), B3))
    sys = AHSystem(((Block(c, 1),), (Block(c, 4),)), (DiagonalMap(0, 1, legs),))
    a = [Cover(c, (open_star(c, [0, 1]), open_star(c, [1, 2])))]
    bc = stage_branched_cover(sys, 0, a, 1, 0)
    assert multiplicity(bc) == 1
    res = min_ratio_shrinking(bc, level=0)
    assert res.exact and res.value == brute_ratio(bc)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_ratio_matches_all_shrinkings_on_constant_instances(seed):
    rng = random.Random(seed)
    c = rng.choice([path_complex(3), path_complex(4), small_bases()[3]])
    cover = random_cover(rng, c, 3)
    bc = BranchedCover(c, [BranchedPair(u, cls, t) for u in cover.elements
                           for t, cls in enumerate([A1, B3])])
    res = min_ratio_shrinking(bc, level=0)
    res.certificate.check()
    assert res.value == brute_ratio(bc)


def test_single_leg_single_element():
    c = path_complex(3)
    sys = AHSystem(((Block(c, 1),), (Block(c, 1),)),
                   (DiagonalMap(0, 1, (Leg(0, 0, SimplicialMap.identity(c)),)),))
    assert cuntz_ratio(sys, 0, [Cover.trivial(c)], 1, 0).value == 0


def test_unitality_of_projections():
    sys = build_goodearl([2])
    c = sys.stages[0][0].space
    with pytest.raises(ValidationError, match="unitality"):
        cuntz_ratio(sys, 0, [Cover.trivial(c)], 1, 0, projections=[A1, B3])


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_common_label_matches_refinement_dimension(seed):
    rng = random.Random(seed)
    sys = random_system(rng, n_stages=2, uniform_sizes=True, label="e")
    a = [random_cover(rng, b.space) for b in sys.stages[0]]
    for k, b in enumerate(sys.stages[1]):
        res = cuntz_ratio(sys, 0, a, 1, k)
        d = refinement_dimension(pullback_stage_cover(sys, 0, 1, k, a))
        assert res.exact and d.exact
        assert res.value == Fraction(d.value, b.matrix_size)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_certificate_refines_join_and_beats_identity(seed):
    rng = random.Random(seed)
    sys = random_system(rng, n_stages=2)
    a = [random_cover(rng, b.space) for b in sys.stages[0]]
    k = rng.randrange(len(sys.stages[1]))
    res = cuntz_ratio(sys, 0, a, 1, k)
    cert = res.certificate
    cert.check()
    assert cert.cover.refines(cert.join)
    bc = stage_branched_cover(sys, 0, a, 1, k)
    assert res.value <= Fraction(ord(cert.join), multiplicity(bc))


# sequences

def test_sequence_equals_mean_dimension_on_diagonal_systems():
    sys = build_goodearl([2, 3])
    c = sys.stages[0][0].space
    a = [Cover(c, (open_star(c, range(5)), open_star(c, range(4, 9))))]
    seq = cuntz_mean_dimension_sequence(sys, 0, a)
    assert seq.values == mean_dimension_sequence(sys, 0, a).values
    assert all(seq.exact)


def test_sequence_single_stage():
    sys = build_goodearl([2, 3])
    c = sys.stages[0][0].space
    a = [Cover.stars(c)]
    seq = cuntz_mean_dimension_sequence(sys, 0, a, J=1)
    assert seq.values[-1] == cuntz_ratio(sys, 0, a, 1, 0).value


def test_goodearl_sequence_bound():
    sys = build_goodearl([2, 2, 2], path_resolution=4)
    c = sys.stages[0][0].space
    seq = cuntz_mean_dimension_sequence(sys, 0, [Cover.stars(c)])
    for value, (b,) in zip(seq.values, sys.stages):
        assert value <= Fraction(1, b.matrix_size)


def test_alternatives_take_the_smaller_ratio():
    sys = build_goodearl([2])
    c = sys.stages[0][0].space
    alt = sys.with_projections([[ProjectionClass("x"), ProjectionClass("y")]])
    a = [Cover.stars(c)]
    seq = cuntz_mean_dimension_sequence(sys, 0, a, alternatives=[alt])
    direct = min(cuntz_ratio(s, 0, a, 1, 0).value for s in (sys, alt))
    assert seq.values[1] == direct
    other = build_goodearl([2], point_vertices=[3])
    with pytest.raises(ValidationError):
        cuntz_mean_dimension_sequence(sys, 0, a, alternatives=[other])


def brute_star_ratio(bc):
    """Least ord/mul over every vertex labelling (level 0 open-star shrinkings)."""
    base = bc.underlying()
    c = base.complex
    sets = base.elements
    choices = [[e for e, u in enumerate(sets) if u.mask >> v & 1] for v in range(c.vertex_count)]
    best = None
    for labels in itertools.product(*choices):
        masks = {}
        for v, e in enumerate(labels):
            masks[e] = masks.get(e, 0) | c.up(v)
        kept = list(masks.values())
        order = max(sum(1 for m in kept if m >> s & 1) for s in range(len(c))) - 1
        mul = min(class_mul([(p.projection, p.tag) for p in bc.pairs if m & ~p.set.mask == 0])
                  for m in kept)
        val = Fraction(order, mul)
        best = val if best is None or val < best else best
    return best


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_generic_search_matches_star_labelling_oracle(seed):
    rng = random.Random(seed)
    c = rng.choice(small_bases())
    classes = [A1, B3, ProjectionClass("c", 2)]
    cover = random_cover(rng, c, 3)
    pairs = [BranchedPair(u, rng.choice(classes), t)
             for u in cover.elements for t in range(rng.randint(1, 2))]
    bc = BranchedCover(c, pairs)
    res = min_ratio_shrinking(bc, level=0)
    assert res.exact
    assert res.value == brute_star_ratio(bc)
