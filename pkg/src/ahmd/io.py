"""System-description JSON: loading with positional errors, and dumping.

Schema (all keys optional except a system source)::

    complexes:  {name: {vertex_count, facets} | {path: n} | {cycle: n} | {simplex: d}}
    stages:     [[{space: name, size: n}, ...], ...]
    maps:       [{legs: [{source, target, map: [vertex images], projection: {label, rank}}]}]
    generator:  {goodearl: {m: [...], points: [...], resolution: r}}   (instead of stages/maps)
    covers:     {name: {stage: i, blocks: [[element, ...] per block]}}
    open_sets:  {name: {stage, block, element}}
    closed_sets:{name: {stage, block, simplices: [...]}}     (down-closure is taken)
    traces:     {name: {stage, blocks: [[vertex values] per block]}}
    families:   {name: {stage, blocks: [[[vertex values per entry] per member] per block]}}
    alternatives: {name: [[{label, rank} per leg] per connecting map]}

An element is ``{star: [vertices]}``, ``{simplices: [...]}`` (must be
up-closed), ``{generated_by: [...]}`` (up-closure) or ``{all: true}``.
Numbers may be integers, decimals or ``"p/q"`` strings; they are read as
exact rationals.
"""
from __future__ import annotations

import json
from importlib import resources
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .covers import Cover
from .errors import ValidationError
from .simplicial import (ClosedSet, Complex, OpenSet, PLFunction, SimplicialMap,
                         cycle_complex, open_star, path_complex, simplex_complex)
from .system import (AHSystem, Block, DiagonalMap, Leg, ProjectionClass,
                     build_goodearl, default_goodearl_points)
from .variation import FunctionFamily


@dataclass
class SystemDescription:
    system: AHSystem
    complexes: dict[str, Complex] = field(default_factory=dict)
    covers: dict[str, tuple[int, tuple[Cover, ...]]] = field(default_factory=dict)
    open_sets: dict[str, tuple[int, int, OpenSet]] = field(default_factory=dict)
    closed_sets: dict[str, tuple[int, int, ClosedSet]] = field(default_factory=dict)
    traces: dict[str, tuple[int, tuple[PLFunction, ...]]] = field(default_factory=dict)
    families: dict[str, tuple[int, tuple[FunctionFamily, ...]]] = field(default_factory=dict)
    alternatives: dict[str, AHSystem] = field(default_factory=dict)


def parse_number(x: Any, where: str):
    if isinstance(x, bool):
        raise ValidationError(f"{where}: expected a number, got a boolean")
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            pass
    raise ValidationError(f"{where}: expected a number, got {x!r}")


def format_number(x: Any):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


def _get(d: Any, key: str, where: str, kind=None):
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in d:
        raise ValidationError(f"{where}: missing key '{key}'")
    v = d[key]
    if kind is not None and not isinstance(v, kind) or isinstance(v, bool) and kind is int:
        raise ValidationError(f"{where}.{key}: wrong type")
    return v


def _int_list(v: Any, where: str) -> list[int]:
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                          for x in v):
        raise ValidationError(f"{where}: expected a list of integers")
    return v


def _complex(spec: Any, where: str) -> Complex:
    if not isinstance(spec, dict):
        raise ValidationError(f"{where}: expected an object")
    if "path" in spec:
        return _wrap(where, path_complex, _get(spec, "path", where, int))
    if "cycle" in spec:
        return _wrap(where, cycle_complex, _get(spec, "cycle", where, int))
    if "simplex" in spec:
        return _wrap(where, simplex_complex, _get(spec, "simplex", where, int))
    facets = _get(spec, "facets", where, list)
    n = spec.get("vertex_count")
    for t, f in enumerate(facets):
        _int_list(f, f"{where}.facets[{t}]")
    return _wrap(where, Complex, facets, n)


def _wrap(where: str, fn, *args):
    try:
        return fn(*args)
    except ValidationError as e:
        if str(e).startswith(where):
            raise
        raise ValidationError(f"{where}: {e}") from None


def _element(c: Complex, spec: Any, where: str) -> OpenSet:
    if not isinstance(spec, dict):
        raise ValidationError(f"{where}: expected an object")
    if spec.get("all"):
        return c.everything()
    if "star" in spec:
        return _wrap(where, open_star, c, _int_list(spec["star"], f"{where}.star"))
    if "simplices" in spec:
        return _wrap(where, OpenSet.from_simplices, c, spec["simplices"])
    if "generated_by" in spec:
        return _wrap(where, OpenSet.generated_by, c, spec["generated_by"])
    raise ValidationError(f"{where}: element needs 'star', 'simplices', 'generated_by' or 'all'")


def _projection(spec: Any, where: str) -> ProjectionClass:
    if spec is None:
        return ProjectionClass()
    label = _get(spec, "label", where)
    if isinstance(label, list):
        label = tuple(label)
    rank = spec.get("rank", 1)
    if not isinstance(rank, int) or isinstance(rank, bool):
        raise ValidationError(f"{where}.rank: expected an integer")
    return _wrap(where, ProjectionClass, label, rank)


def _stage_block(sys: AHSystem, spec: Any, where: str, with_block: bool = True):
    i = _get(spec, "stage", where, int)
    if not 0 <= i < len(sys.stages):
        raise ValidationError(f"{where}.stage: stage {i} out of range")
    if not with_block:
        return i, None
    l = spec.get("block", 0)
    if not isinstance(l, int) or not 0 <= l < len(sys.stages[i]):
        raise ValidationError(f"{where}.block: block {l!r} out of range")
    return i, l


def from_dict(data: Any) -> SystemDescription:
    if not isinstance(data, dict):
        raise ValidationError("top level: expected an object")
    complexes: dict[str, Complex] = {}
    for name, spec in (data.get("complexes") or {}).items():
        complexes[name] = _complex(spec, f"complexes.{name}")
    gen = data.get("generator")
    if gen is not None:
        g = _get(gen, "goodearl", "generator")
        m = _int_list(_get(g, "m", "generator.goodearl"), "generator.goodearl.m")
        res = g.get("resolution", 8)
        pts = g.get("points")
        if pts is not None:
            pts = _int_list(pts, "generator.goodearl.points")
        sys = _wrap("generator.goodearl", build_goodearl, m, pts, res)
        complexes.setdefault("interval", sys.stages[0][0].space)
    else:
        stages_raw = _get(data, "stages", "top level", list)
        if not stages_raw:
            raise ValidationError("stages: a system needs at least one stage")
        stages = []
        for i, st in enumerate(stages_raw):
            if not isinstance(st, list) or not st:
                raise ValidationError(f"stages[{i}]: expected a nonempty list of blocks")
            row = []
            for l, b in enumerate(st):
                w = f"stages[{i}][{l}]"
                space = _get(b, "space", w, str)
                if space not in complexes:
                    raise ValidationError(f"{w}.space: unknown complex '{space}'")
                row.append(_wrap(w, Block, complexes[space], _get(b, "size", w, int)))
            stages.append(tuple(row))
        maps_raw = data.get("maps", [])
        if not isinstance(maps_raw, list) or len(maps_raw) != len(stages) - 1:
            raise ValidationError(
                f"maps: {len(stages)} stages need {len(stages) - 1} maps")
        maps = []
        for i, mp in enumerate(maps_raw):
            legs = []
            for t, leg in enumerate(_get(mp, "legs", f"maps[{i}]", list)):
                w = f"maps[{i}].legs[{t}]"
                src = _get(leg, "source", w, int)
                tgt = _get(leg, "target", w, int)
                if not 0 <= src < len(stages[i]) or not 0 <= tgt < len(stages[i + 1]):
                    raise ValidationError(f"{w}: block index out of range")
                img = _int_list(_get(leg, "map", w), f"{w}.map")
                f = _wrap(w, SimplicialMap, stages[i + 1][tgt].space,
                          stages[i][src].space, tuple(img))
                legs.append(Leg(src, tgt, f, _projection(leg.get("projection"),
                                                         f"{w}.projection")))
            maps.append(DiagonalMap(i, i + 1, tuple(legs)))
        sys = _wrap("system", AHSystem, tuple(stages), tuple(maps))
    desc = SystemDescription(sys, complexes)

    for name, spec in (data.get("covers") or {}).items():
        w = f"covers.{name}"
        i, _ = _stage_block(sys, spec, w, with_block=False)
        blocks = _get(spec, "blocks", w, list)
        if len(blocks) != len(sys.stages[i]):
            raise ValidationError(f"{w}.blocks: need one cover per block of stage {i}")
        covers = []
        for l, elems in enumerate(blocks):
            c = sys.stages[i][l].space
            if not isinstance(elems, list):
                raise ValidationError(f"{w}.blocks[{l}]: expected a list of elements")
            els = tuple(_element(c, e, f"{w}.blocks[{l}][{t}]") for t, e in enumerate(elems))
            covers.append(_wrap(f"{w}.blocks[{l}]", Cover, c, els))
        desc.covers[name] = (i, tuple(covers))

    for name, spec in (data.get("open_sets") or {}).items():
        w = f"open_sets.{name}"
        i, l = _stage_block(sys, spec, w)
        desc.open_sets[name] = (i, l, _element(sys.stages[i][l].space,
                                               _get(spec, "element", w), f"{w}.element"))

    for name, spec in (data.get("closed_sets") or {}).items():
        w = f"closed_sets.{name}"
        i, l = _stage_block(sys, spec, w)
        sims = _get(spec, "simplices", w, list)
        desc.closed_sets[name] = (i, l, _wrap(w, ClosedSet.generated_by,
                                              sys.stages[i][l].space, sims))

    for name, spec in (data.get("traces") or {}).items():
        w = f"traces.{name}"
        i, _ = _stage_block(sys, spec, w, with_block=False)
        blocks = _get(spec, "blocks", w, list)
        if len(blocks) != len(sys.stages[i]):
            raise ValidationError(f"{w}.blocks: need one profile per block of stage {i}")
        profs = []
        for l, vals in enumerate(blocks):
            ww = f"{w}.blocks[{l}]"
            if not isinstance(vals, list):
                raise ValidationError(f"{ww}: expected a list of vertex values")
            nums = [parse_number(x, f"{ww}[{t}]") for t, x in enumerate(vals)]
            profs.append(_wrap(ww, PLFunction, sys.stages[i][l].space, tuple(nums)))
        desc.traces[name] = (i, tuple(profs))

    for name, spec in (data.get("families") or {}).items():
        w = f"families.{name}"
        i, _ = _stage_block(sys, spec, w, with_block=False)
        blocks = _get(spec, "blocks", w, list)
        if len(blocks) != len(sys.stages[i]):
            raise ValidationError(f"{w}.blocks: need one family per block of stage {i}")
        fams = []
        for l, members in enumerate(blocks):
            c = sys.stages[i][l].space
            mem = []
            for t, entries in enumerate(members):
                ents = []
                for e, vals in enumerate(entries):
                    ww = f"{w}.blocks[{l}][{t}][{e}]"
                    if not isinstance(vals, list):
                        raise ValidationError(f"{ww}: expected a list of vertex values")
                    nums = [parse_number(x, f"{ww}[{q}]") for q, x in enumerate(vals)]
                    ents.append(_wrap(ww, PLFunction, c, tuple(nums)))
                mem.append(tuple(ents))
            fams.append(_wrap(f"{w}.blocks[{l}]", FunctionFamily, c, tuple(mem)))
        desc.families[name] = (i, tuple(fams))

    for name, spec in (data.get("alternatives") or {}).items():
        w = f"alternatives.{name}"
        if not isinstance(spec, list):
            raise ValidationError(f"{w}: expected one list of projections per map")
        projs = [[_projection(p, f"{w}[{i}][{t}]") for t, p in enumerate(row)]
                 for i, row in enumerate(spec)]
        desc.alternatives[name] = _wrap(w, sys.with_projections, projs)
    return desc


def loads(text: str) -> SystemDescription:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return from_dict(data)


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("ahmd").joinpath("data").iterdir()
                  if p.name.endswith(".json"))


def load(path: str | Path) -> SystemDescription:
    """Load a description file; ``bundled:<name>`` picks a shipped example."""
    try:
        if isinstance(path, str) and path.startswith("bundled:"):
            name = path[len("bundled:"):]
            if name not in bundled_names():
                raise ValidationError(
                    f"no bundled system '{name}' (have: {', '.join(bundled_names())})")
            text = resources.files("ahmd").joinpath("data", name + ".json").read_text()
        else:
            text = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e.strerror}") from None
    return loads(text)


def _space_names(desc: SystemDescription) -> dict[Complex, str]:
    names: dict[Complex, str] = {}
    for name, c in sorted(desc.complexes.items()):
        names.setdefault(c, name)
    for i, st in enumerate(desc.system.stages):
        for l, b in enumerate(st):
            names.setdefault(b.space, f"X{i}_{l}")
    return names


def _projection_dict(p: ProjectionClass) -> dict:
    label = list(p.label) if isinstance(p.label, tuple) else p.label
    return {"label": label, "rank": p.rank}


def _simplices(c: Complex, mask: int) -> list[list[int]]:
    return [list(s) for s in sorted(c.simplices_of(mask), key=lambda s: c.index[s])]


def to_dict(desc: SystemDescription) -> dict:
    """Explicit form (generators are expanded)."""
    sys = desc.system
    names = _space_names(desc)
    used = {names[b.space] for st in sys.stages for b in st}
    complexes = {n: c.to_dict() for c, n in names.items()
                 if n in used or n in desc.complexes}
    out: dict[str, Any] = {
        "complexes": complexes,
        "stages": [[{"space": names[b.space], "size": b.matrix_size} for b in st]
                   for st in sys.stages],
        "maps": [{"legs": [{"source": g.source, "target": g.target,
                            "map": list(g.map.vertex_image),
                            "projection": _projection_dict(g.projection)}
                           for g in m.legs]} for m in sys.maps],
    }
    if desc.covers:
        out["covers"] = {n: {"stage": i, "blocks": [
            [{"simplices": _simplices(cov.complex, u.mask)} for u in cov.elements]
            for cov in covs]} for n, (i, covs) in desc.covers.items()}
    if desc.open_sets:
        out["open_sets"] = {n: {"stage": i, "block": l,
                                "element": {"simplices": _simplices(u.complex, u.mask)}}
                            for n, (i, l, u) in desc.open_sets.items()}
    if desc.closed_sets:
        out["closed_sets"] = {n: {"stage": i, "block": l,
                                  "simplices": _simplices(e.complex, e.mask)}
                              for n, (i, l, e) in desc.closed_sets.items()}
    if desc.traces:
        out["traces"] = {n: {"stage": i, "blocks": [
            [format_number(x) for x in f.vertex_values] for f in fs]}
            for n, (i, fs) in desc.traces.items()}
    if desc.families:
        out["families"] = {n: {"stage": i, "blocks": [
            [[[format_number(x) for x in f.vertex_values] for f in m] for m in fam.members]
            for fam in fams]} for n, (i, fams) in desc.families.items()}
    if desc.alternatives:
        out["alternatives"] = {n: [[_projection_dict(g.projection) for g in m.legs]
                                   for m in alt.maps]
                               for n, alt in desc.alternatives.items()}
    return out


def dumps(desc: SystemDescription) -> str:
    return json.dumps(to_dict(desc), indent=2, sort_keys=True)


def goodearl_description(m, points=None, resolution: int = 8) -> dict:
    """A ready-to-run Goodearl description with a closed set, trace, cover and family."""
    if points is None:
        points = default_goodearl_points(len(m), resolution)
    # prefer an interior vertex that is not a constant target
    z = next(v for v in [*range(resolution - 1, 0, -1), resolution, 0] if v not in points)
    hat = [max(0, 1 - abs(Fraction(v - z, 4))) for v in range(resolution + 1)]
    half = resolution // 2
    return {
        "generator": {"goodearl": {"m": list(m), "points": list(points),
                                   "resolution": resolution}},
        "closed_sets": {"z": {"stage": 0, "block": 0, "simplices": [[z]]}},
        "open_sets": {"around_z": {"stage": 0, "block": 0,
                                   "element": {"star": [max(z - 1, 0), z]}}},
        "traces": {"hat_at_z": {"stage": 0, "blocks": [[format_number(x) for x in hat]]}},
        "covers": {"halves": {"stage": 0, "blocks": [[
            {"star": list(range(0, half + 1))},
            {"star": list(range(half, resolution + 1))}]]},
            "stars": {"stage": 0, "blocks": [[{"star": [v]} for v in range(resolution + 1)]]}},
        "families": {"hat": {"stage": 0, "blocks": [[[[format_number(x) for x in hat]]]]}},
    }
