"""Brute-force oracles and random instance generators shared by the tests."""
from __future__ import annotations

import random

from ahmd.covers import Cover
from ahmd.errors import ValidationError
from ahmd.simplicial import (Complex, OpenSet, SimplicialMap, cycle_complex,
                             path_complex, simplex_complex)
from ahmd.system import AHSystem, Block, DiagonalMap, Leg, ProjectionClass


# ---------------------------------------------------------------- oracles

def is_up_closed(c: Complex, members: set) -> bool:
    return all(t in members for s in members for t in c.simplices if set(s) <= set(t))


def brute_upsets(c: Complex, within: int | None = None) -> list[int]:
    """Every up-closed subset (as a mask) of the simplices in ``within``.

    Decides simplices from the top dimension down; a simplex may join only
    when all of its cofaces already have.
    """
    idx = [i for i in range(len(c)) if within is None or within >> i & 1]
    idx.sort(key=lambda i: -len(c.simplices[i]))
    cofaces = [c.up(i) & ~(1 << i) for i in range(len(c))]
    out = []

    def rec(t: int, mask: int) -> None:
        if t == len(idx):
            out.append(mask)
            return
        i = idx[t]
        rec(t + 1, mask)
        if cofaces[i] & ~mask == 0:
            rec(t + 1, mask | 1 << i)

    rec(0, 0)
    return out


def brute_ord(c: Complex, masks) -> int:
    return max(sum(1 for m in masks if m >> s & 1) for s in range(len(c))) - 1


def brute_min_shrinking_order(a: Cover) -> int:
    """Least order over families ``V_i ⊆ U_i`` of up-closed sets that cover.

    Enumerates up-closed subsets of every element directly.
    """
    c = a.complex
    full = c.full_mask
    options = [sorted(brute_upsets(c, u.mask), key=lambda m: -bin(m).count("1"))
               for u in a.elements]
    best = [len(a.elements)]
    counts = [0] * len(c)

    def dfs(t: int, union: int) -> None:
        if t == len(options):
            if union == full:
                best[0] = min(best[0], max(counts) - 1)
            return
        # the remaining elements must still be able to cover what is missing
        rest = 0
        for u in a.elements[t:]:
            rest |= u.mask
        if (union | rest) != full:
            return
        for m in options[t]:
            bits = [s for s in range(len(c)) if m >> s & 1]
            for s in bits:
                counts[s] += 1
            if max(counts) - 1 < best[0]:
                dfs(t + 1, union | m)
            for s in bits:
                counts[s] -= 1

    dfs(0, 0)
    return best[0]


def brute_min_admissible_cover_order(c: Complex, admissible_masks: list[int]) -> int:
    """Least order of a cover assembled from the given up-closed sets."""
    best = [len(admissible_masks)]
    counts = [0] * len(c)

    def dfs(union: int) -> None:
        if union == c.full_mask:
            best[0] = min(best[0], max(counts) - 1)
            return
        s = next(i for i in range(len(c)) if not union >> i & 1)
        for m in admissible_masks:
            if m >> s & 1:
                bits = [i for i in range(len(c)) if m >> i & 1]
                for i in bits:
                    counts[i] += 1
                if max(counts) - 1 < best[0]:
                    dfs(union | m)
                for i in bits:
                    counts[i] -= 1

    dfs(0)
    return best[0]


# ---------------------------------------------------------------- generators

def small_bases() -> list[Complex]:
    return [path_complex(2), path_complex(3), path_complex(4), cycle_complex(3),
            cycle_complex(4), simplex_complex(2)]


def random_map(rng: random.Random, dom: Complex, cod: Complex, tries: int = 30) -> SimplicialMap:
    for _ in range(tries):
        img = tuple(rng.randrange(cod.vertex_count) for _ in range(dom.vertex_count))
        try:
            return SimplicialMap(dom, cod, img)
        except ValidationError:
            pass
    if dom == cod and rng.random() < 0.5:
        return SimplicialMap.identity(dom)
    return SimplicialMap.constant(dom, cod, rng.randrange(cod.vertex_count))


def random_open_set(rng: random.Random, c: Complex) -> OpenSet:
    if rng.random() < 0.5:
        verts = [v for v in range(c.vertex_count) if rng.random() < 0.4] or [rng.randrange(c.vertex_count)]
        return c.open_star(verts)
    picks = [s for s in range(len(c)) if rng.random() < 0.3] or [rng.randrange(len(c))]
    return OpenSet(c, c.up_closure(sum(1 << s for s in picks)))


def random_cover(rng: random.Random, c: Complex, max_elements: int = 3) -> Cover:
    elems = [random_open_set(rng, c) for _ in range(rng.randint(1, max_elements))]
    union = 0
    for u in elems:
        union |= u.mask
    missing = c.full_mask & ~union
    if missing:
        elems.append(OpenSet(c, c.up_closure(missing)))
    return Cover(c, tuple(elems))


def random_system(rng: random.Random, n_stages: int | None = None, max_blocks: int = 3,
                  label: str | None = None, uniform_sizes: bool = False,
                  max_legs: int = 3, bases: list[Complex] | None = None) -> AHSystem:
    """Random diagonal system; with ``uniform_sizes`` all blocks of a stage
    share one matrix size (every target block then takes the same number of legs)."""
    bases = bases or small_bases()
    n_stages = n_stages or rng.randint(1, 4)
    proj = ProjectionClass(label, 1) if label is not None else ProjectionClass()
    stages = [tuple(Block(rng.choice(bases), 1 if uniform_sizes else rng.randint(1, 2))
                    for _ in range(rng.randint(1, max_blocks)))]
    maps = []
    for i in range(n_stages - 1):
        src = stages[-1]
        n_tgt = rng.randint(1, max_blocks)
        legs, blocks = [], []
        n_legs_uniform = rng.randint(1, max_legs)
        for k in range(n_tgt):
            space = rng.choice(bases)
            n_legs = n_legs_uniform if uniform_sizes else rng.randint(1, max_legs)
            size = 0
            for _ in range(n_legs):
                l = rng.randrange(len(src))
                legs.append(Leg(l, k, random_map(rng, space, src[l].space), proj))
                size += src[l].matrix_size
            blocks.append(Block(space, size))
        stages.append(tuple(blocks))
        maps.append(DiagonalMap(i, i + 1, tuple(legs)))
    return AHSystem(tuple(stages), tuple(maps))

