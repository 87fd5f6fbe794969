import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ahmd.covers import Cover, refinement_dimension
from ahmd.errors import ValidationError
from ahmd.simplicial import OpenSet, PLFunction, cycle_complex, open_star, path_complex, subdivide
from ahmd.system import build_goodearl, pullback_stage_cover
from ahmd.variation import (FunctionFamily, is_admissible, maximal_admissible_sets, oscillation,
                            partition_family_lower_bound, pushforward_family, variation_dimension,
                            variation_mean_dimension_sequence)

from helpers import (brute_min_admissible_cover_order, brute_upsets, random_cover, random_system,
                     small_bases)

from test_system import identity_system

seeds = st.integers(0, 2**32 - 1)
HAT5 = (0, Fraction(1, 2), 1, Fraction(1, 2), 0)


def family(c, *rows):
    return FunctionFamily(c, tuple((PLFunction(c, r),) for r in rows))


def random_family(rng, c, members=2):
    return FunctionFamily(c, tuple(
        tuple(PLFunction(c, tuple(Fraction(rng.randint(0, 8), 8) for _ in range(c.vertex_count)))
              for _ in range(rng.randint(1, 2)))
        for _ in range(members)))


# oscillation

def test_constant_member():
    c = cycle_complex(4)
    assert oscillation((PLFunction.constant(c, 2),), c.everything()) == 0


def test_hat_over_everything():
    c = path_complex(5)
    assert oscillation((PLFunction(c, HAT5),), c.everything()) == 1


@pytest.mark.parametrize("c", small_bases(), ids=repr)
def test_oscillation_on_a_star(c):
    f = PLFunction(c, tuple(Fraction(v * v, 3) for v in range(c.vertex_count)))
    top = c.facets[-1]
    u = OpenSet.generated_by(c, [top])
    verts = {v for s in c.simplices if set(s) <= set(top) for v in s}
    vals = [f[v] for v in verts]
    assert oscillation((f,), u) == max(vals) - min(vals)


# variation dimension

def test_constant_family_is_zero():
    c = path_complex(4)
    F = family(c, (1, 1, 1, 1))
    for eps in (Fraction(1, 10), 1, 5):
        assert variation_dimension(F, eps).value == 0


def test_large_epsilon_is_zero():
    c = path_complex(5)
    assert variation_dimension(family(c, HAT5), Fraction(11, 10)).value == 0


def test_hat_on_path_matches_brute_force():
    c = path_complex(5)
    F = family(c, HAT5)
    eps = Fraction(3, 5)
    res = variation_dimension(F, eps, level=1)
    assert res.exact and res.value == 1
    G = F.refine(1)
    sd = G.complex
    admissible = [m for m in brute_upsets(sd)
                  if m and all(oscillation(mem, OpenSet(sd, m)) < eps for mem in G.members)]
    assert brute_min_admissible_cover_order(sd, admissible) == res.value


def test_subdivide_further_message():
    c = path_complex(3)
    with pytest.raises(ValidationError, match="subdivide further"):
        variation_dimension(family(c, (0, 1, 0)), Fraction(3, 5), level=1)


def test_maximal_sets_are_admissible_and_maximal():
    c = subdivide(path_complex(5), 1).complex
    G = family(path_complex(5), HAT5).refine(1)
    eps = Fraction(3, 5)
    sets, done = maximal_admissible_sets(G, eps)
    assert done
    for S in sets:
        assert G.range_on(sorted({w for v in S for w in c.neighbours(v) | {v}})) < eps
        for extra in set(range(c.vertex_count)) - set(S):
            T = set(S) | {extra}
            assert G.range_on(sorted({w for v in T for w in c.neighbours(v) | {v}})) >= eps


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_refinements_of_admissible_covers_stay_admissible(seed):
    rng = random.Random(seed)
    c = rng.choice(small_bases())
    F = random_family(rng, c)
    a = random_cover(rng, c)
    eps = max(oscillation(m, u) for u in a.elements for m in F.members) + Fraction(1, 16)
    assert is_admissible(F, a, eps)
    finer = Cover(c, tuple(OpenSet(c, u.mask & w.mask) for u in a.elements
                           for w in random_cover(rng, c).elements if u.mask & w.mask))
    assert is_admissible(F, finer, eps)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_monotone_in_epsilon_and_level(seed):
    rng = random.Random(seed)
    c = rng.choice(small_bases())
    F = random_family(rng, c)
    eps = Fraction(rng.randint(5, 12), 16)
    try:
        base = variation_dimension(F, eps, level=2).value
    except ValidationError:
        return
    assert variation_dimension(F, eps + Fraction(1, 4), level=2).value <= base
    assert variation_dimension(F, eps, level=3).value <= base


# finite-stage sequences

def test_identity_system_constant_sequence():
    c = path_complex(5)
    seq = variation_mean_dimension_sequence(identity_system(c, 3), 0, [family(c, HAT5)], Fraction(3, 5))
    assert len(set(seq.values)) == 1


def test_single_stage_sequence():
    c = path_complex(5)
    F = family(c, HAT5)
    seq = variation_mean_dimension_sequence(identity_system(c, 2), 0, [F], Fraction(3, 5), J=0)
    assert seq.values == (variation_dimension(F, Fraction(3, 5)).value,)


def test_goodearl_sequence_bound():
    sys = build_goodearl([2, 2, 2], path_resolution=4)
    c = sys.stages[0][0].space
    seq = variation_mean_dimension_sequence(sys, 0, [family(c, HAT5)], Fraction(3, 5))
    for value, (b,) in zip(seq.values, sys.stages):
        assert value <= Fraction(1, b.matrix_size)


def test_pushforward_concatenates_leg_entries():
    sys = build_goodearl([3])
    c = sys.stages[0][0].space
    F = family(c, tuple(range(c.vertex_count)))
    G = pushforward_family(sys, 0, [F], 1, 0)
    assert len(G.members[0]) == 3


# comparisons

@settings(max_examples=25, deadline=None)
@given(seeds)
def test_admissible_cover_bounds_pushed_variation(seed):
    rng = random.Random(seed)
    sys = random_system(rng, n_stages=2)
    a = [random_cover(rng, b.space) for b in sys.stages[0]]
    F = [random_family(rng, b.space, 1) for b in sys.stages[0]]
    eps = max(oscillation(m, u) for f, x in zip(F, a) for u in x.elements for m in f.members) + Fraction(1, 16)
    for k in range(len(sys.stages[1])):
        G = pushforward_family(sys, 0, F, 1, k)
        cov = pullback_stage_cover(sys, 0, 1, k, a)
        assert is_admissible(G, cov, eps)
        assert variation_dimension(G, eps, level=1).value <= refinement_dimension(cov, level=1).value


def test_lower_bound_trivial_cover():
    c = path_complex(3)
    F, d = partition_family_lower_bound(Cover.trivial(c))
    assert d == 0 and F.members[0][0].vertex_values == (1, 1, 1)
    assert variation_dimension(F, 1).value == 0 == refinement_dimension(Cover.trivial(c)).value


def test_lower_bound_two_stars_on_path():
    c = path_complex(4)
    a = Cover(c, (open_star(c, [0, 1, 2]), open_star(c, [2, 3])))
    F, d = partition_family_lower_bound(a)
    assert d == 1
    v = variation_dimension(F, Fraction(1, d + 1), level=3)
    r = refinement_dimension(a, level=3)
    assert v.exact and r.exact and v.value >= r.value


def test_lower_bound_triangle_boundary():
    c = cycle_complex(3)
    a = Cover.stars(c)
    F, d = partition_family_lower_bound(a)
    assert d == 1
    for level in (3, 4):
        assert variation_dimension(F, Fraction(1, 2), level=level).value == 1
        assert refinement_dimension(a, level=level).value == 1
