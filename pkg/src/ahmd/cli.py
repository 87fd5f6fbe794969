"""Command dispatch, reports and the ``ahmd`` entry point."""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable

from . import io
from .branched import cuntz_mean_dimension_sequence
from .capacity import (ocap_closed_set, ocap_element, sbp_probe, sbrp_probe,
                       svt_probe)
from .covers import ord, refinement_dimension
from .errors import InvariantError, ValidationError
from .nerve import nerve, subordinate_partition
from .system import mean_dimension_sequence
from .variation import variation_mean_dimension_sequence

COMMANDS = ("dim-cover", "mean-dim", "ocap", "svt", "sbp", "sbrp", "cuntz-dim",
            "var-dim", "nerve", "report-all")


@dataclass
class Config:
    level: int = 1
    budget: int = 10**6
    stage: int | None = None       # truncation stage J; None means the last stage
    epsilon: Fraction = Fraction(1, 2)
    radius: int = 1
    cover: str | None = None       # restrict to one named input
    timing: bool = False

    def validate(self) -> None:
        if self.level < 0:
            raise ValidationError("--level must be >= 0")
        if self.budget <= 0:
            raise ValidationError("--budget must be positive")
        if self.epsilon <= 0:
            raise ValidationError("--epsilon must be positive")
        if self.radius < 0:
            raise ValidationError("--radius must be >= 0")


def jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return io.format_number(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("AHMD_THREADS", "1")))
    except ValueError:
        raise ValidationError("AHMD_THREADS must be an integer") from None


def _pmap(fn: Callable, items: Iterable) -> list:
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))   # keeps input order


def _select(named: dict, cfg: Config) -> list:
    if cfg.cover is None:
        return sorted(named.items())
    if cfg.cover not in named:
        raise ValidationError(f"no input named '{cfg.cover}'")
    return [(cfg.cover, named[cfg.cover])]


def _J(desc: io.SystemDescription, cfg: Config, i: int) -> int:
    J = desc.system.last_stage if cfg.stage is None else cfg.stage
    if not i <= J <= desc.system.last_stage:
        raise ValidationError(f"truncation stage {J} out of range for base stage {i}")
    return J


def cmd_dim_cover(desc, cfg):
    def one(item):
        name, (i, covs) = item
        out = []
        for l, cov in enumerate(covs):
            res = refinement_dimension(cov, cfg.level, cfg.budget)
            res.certificate.check()
            out.append({"name": name, "stage": i, "block": l, "ord": ord(cov),
                        "value": res.value, "exact": res.exact,
                        "budget_exhausted": not res.exact, "nodes": res.nodes,
                        "certificate": res.certificate.to_dict()})
        return out
    results = [r for rs in _pmap(one, _select(desc.covers, cfg)) for r in rs]
    rows = [(r["name"], r["stage"], r["block"], r["value"], r["exact"]) for r in results]
    return results, rows


def cmd_mean_dim(desc, cfg):
    sys = desc.system

    def one(item):
        name, (i, covs) = item
        est = mean_dimension_sequence(sys, i, covs, _J(desc, cfg, i), cfg.level, cfg.budget)
        per_block = [[{"value": Fraction(r.value, sys.size(j, k)), "D": r.value,
                       "exact": r.exact} for k, r in enumerate(row)]
                     for j, row in zip(est.stages, est.per_block)]
        res = {"name": name, "base_stage": i, "stages": est.stages, "values": est.values,
               "exact": est.exact, "budget_exhausted": not est.all_exact,
               "non_increasing": est.non_increasing, "per_block": per_block}
        rows = [(name, j, k, cell["value"], cell["exact"])
                for j, row in zip(est.stages, per_block) for k, cell in enumerate(row)]
        return res, rows
    out = _pmap(one, _select(desc.covers, cfg))
    return [r for r, _ in out], [x for _, rows in out for x in rows]


def _capacity_dict(name, kind, rep):
    return {"name": name, "kind": kind, "base": rep.base, "stages": rep.stages,
            "values": [{"stage": j, "block": k, "value": v} for j, k, v in rep.rows()],
            "per_stage_max": rep.per_stage_max, "limit_estimate": rep.limit_estimate,
            "monotone": rep.monotone, "exact": True}


def cmd_ocap(desc, cfg):
    sys = desc.system
    jobs = []
    closed = {n: v for n, v in desc.closed_sets.items() if cfg.cover in (None, n)}
    traces = {n: v for n, v in desc.traces.items() if cfg.cover in (None, n)}
    for name, (i, l, e) in sorted(closed.items()):
        jobs.append((name, "closed_set",
                     lambda i=i, l=l, e=e: ocap_closed_set(sys, i, l, e, _J(desc, cfg, i))))
    for name, (i, profs) in sorted(traces.items()):
        for l, f in enumerate(profs):
            jobs.append((name, "element",
                         lambda i=i, l=l, f=f: ocap_element(sys, i, l, f, _J(desc, cfg, i))))
    if cfg.cover is not None and not jobs:
        raise ValidationError(f"no closed set or trace named '{cfg.cover}'")
    results = _pmap(lambda job: _capacity_dict(job[0], job[1], job[2]()), jobs)
    rows = [(r["name"], v["stage"], v["block"], v["value"], True)
            for r in results for v in r["values"]]
    return results, rows


def cmd_svt(desc, cfg):
    sys = desc.system

    def one(item):
        name, (i, profs) = item
        res = svt_probe(sys, i, profs, _J(desc, cfg, i), cfg.epsilon)
        return {"name": name, "base_stage": i, "epsilon": cfg.epsilon,
                "stages": res.stages, "values": res.values,
                "satisfied_by_stage": res.satisfied_by_stage, "exact": True}
    results = _pmap(one, _select(desc.traces, cfg))
    rows = [(r["name"], j, None, v, True)
            for r in results for j, v in zip(r["stages"], r["values"])]
    return results, rows


def cmd_sbp(desc, cfg):
    sys = desc.system

    def one(item):
        name, (i, l, u) = item
        J = _J(desc, cfg, i)
        res = sbp_probe(sys, i, l, u, J, cfg.epsilon, level=cfg.level)
        best = None if res.best is None else sorted(
            list(s) for s in res.best.members)
        return {"name": name, "stage": i, "block": l, "truncation_stage": J,
                "epsilon": cfg.epsilon, "found": res.found is not None,
                "best_value": res.best_value, "best": best,
                "candidates": res.candidates, "exhaustive": res.exhaustive,
                "exact": res.exhaustive, "finite_stage_only": True}
    results = _pmap(one, _select(desc.open_sets, cfg))
    rows = [(r["name"], r["truncation_stage"], r["block"], r["best_value"], r["exact"])
            for r in results]
    return results, rows


def cmd_sbrp(desc, cfg):
    sys = desc.system
    jobs = []
    for name, (i, covs) in _select(desc.covers, cfg):
        J = _J(desc, cfg, i)
        for l, cov in enumerate(covs):
            for k in range(len(sys.stages[J])):
                jobs.append((name, i, l, cov, J, k))

    def one(job):
        name, i, l, cov, J, k = job
        res = sbrp_probe(sys, i, l, cov, cfg.epsilon, J, k, cfg.radius,
                         level=cfg.level, budget=cfg.budget)
        shrink = None if res.shrinking is None else [
            sorted(list(s) for s in v.members) for v in res.shrinking]
        return {"name": name, "stage": i, "block": l, "target": [J, k],
                "epsilon": cfg.epsilon, "radius": cfg.radius,
                "found": res.refinement is not None, "best_value": res.best_value,
                "shrinking": shrink, "nodes": res.nodes, "exhaustive": res.exhaustive,
                "exact": res.exhaustive, "budget_exhausted": not res.exhaustive}
    results = _pmap(one, jobs)
    rows = [(r["name"], r["target"][0], r["target"][1], r["best_value"], r["exact"])
            for r in results]
    return results, rows


def cmd_cuntz_dim(desc, cfg):
    sys = desc.system
    alts = [desc.alternatives[n] for n in sorted(desc.alternatives)]

    def one(item):
        name, (i, covs) = item
        seq = cuntz_mean_dimension_sequence(sys, i, covs, _J(desc, cfg, i), cfg.level,
                                            cfg.budget, alts)
        per_block = [[{"value": r.value, "order": r.certificate.order,
                       "multiplicity": r.certificate.multiplicity, "exact": r.exact}
                      for r in row] for row in seq.per_block]
        res = {"name": name, "base_stage": i, "stages": seq.stages, "values": seq.values,
               "exact": seq.exact, "budget_exhausted": not all(seq.exact),
               "alternatives": sorted(desc.alternatives),
               "half_limit_estimate": seq.values[-1] / 2, "per_block": per_block}
        rows = [(name, j, k, cell["value"], cell["exact"])
                for j, row in zip(seq.stages, per_block) for k, cell in enumerate(row)]
        return res, rows
    out = _pmap(one, _select(desc.covers, cfg))
    return [r for r, _ in out], [x for _, rows in out for x in rows]


def cmd_var_dim(desc, cfg):
    sys = desc.system

    def one(item):
        name, (i, fams) = item
        seq = variation_mean_dimension_sequence(sys, i, fams, cfg.epsilon,
                                                _J(desc, cfg, i), cfg.level, cfg.budget)
        per_block = [[{"value": Fraction(r.value, sys.size(j, k)), "D": r.value,
                       "exact": r.exact} for k, r in enumerate(row)]
                     for j, row in zip(seq.stages, seq.per_block)]
        res = {"name": name, "base_stage": i, "epsilon": cfg.epsilon, "stages": seq.stages,
               "values": seq.values, "exact": seq.exact,
               "budget_exhausted": not all(seq.exact), "per_block": per_block,
               "model_only": True}
        rows = [(name, j, k, cell["value"], cell["exact"])
                for j, row in zip(seq.stages, per_block) for k, cell in enumerate(row)]
        return res, rows
    out = _pmap(one, _select(desc.families, cfg))
    return [r for r, _ in out], [x for _, rows in out for x in rows]


def cmd_nerve(desc, cfg):
    def one(item):
        name, (i, covs) = item
        out = []
        for l, cov in enumerate(covs):
            p = subordinate_partition(cov, cfg.level)
            p.check()
            n = nerve(p.cover)
            ref = refinement_dimension(cov, cfg.level, cfg.budget)
            nr = nerve(ref.certificate.cover)
            out.append({"name": name, "stage": i, "block": l, "level": cfg.level,
                        "ord": ord(cov), "nerve_dimension": n.dimension,
                        "nerve": n.nerve.to_dict(), "anchors": p.anchors,
                        "refinement_order": ref.value,
                        "refinement_nerve_dimension": nr.dimension,
                        "refinement_nerve": nr.nerve.to_dict(), "exact": ref.exact})
        return out
    results = [r for rs in _pmap(one, _select(desc.covers, cfg)) for r in rs]
    rows = [(r["name"], r["stage"], r["block"], r["refinement_nerve_dimension"], r["exact"])
            for r in results]
    return results, rows


HANDLERS = {
    "dim-cover": cmd_dim_cover, "mean-dim": cmd_mean_dim, "ocap": cmd_ocap,
    "svt": cmd_svt, "sbp": cmd_sbp, "sbrp": cmd_sbrp, "cuntz-dim": cmd_cuntz_dim,
    "var-dim": cmd_var_dim, "nerve": cmd_nerve,
}


def run_with_rows(cmd: str, desc: io.SystemDescription, cfg: Config):
    cfg.validate()
    start = time.perf_counter()
    if cmd == "report-all":
        results, rows = {}, []
        for name in COMMANDS[:-1]:
            try:
                res, r = HANDLERS[name](desc, cfg)
            except ValidationError as e:
                res, r = {"error": str(e)}, []
            results[name] = res
            rows += [(name, *x) for x in r]
    elif cmd in HANDLERS:
        results, rows = HANDLERS[cmd](desc, cfg)
        rows = [(cmd, *x) for x in rows]
    else:
        raise ValidationError(f"unknown command '{cmd}'")
    elapsed = time.perf_counter() - start
    report = {"command": cmd, "config": asdict(cfg), "results": results,
              "wall_time": elapsed if cfg.timing else None}
    return jsonable(report), rows


def run(cmd: str, desc: io.SystemDescription, cfg: Config | None = None) -> dict:
    return run_with_rows(cmd, desc, cfg or Config())[0]


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def rows_csv(rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["command", "series", "stage", "block", "value", "exact"])
    for row in rows:
        w.writerow(["" if x is None else io.format_number(x) for x in row])
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ahmd", description=(
        "Finite-stage invariants of inductive systems with diagonal maps."))
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        s = sub.add_parser(cmd)
        s.add_argument("--system", required=True, help="system-description JSON")
        s.add_argument("--cover", help="restrict to one named cover/set/trace/family")
        s.add_argument("--level", type=int, default=1, help="subdivision level")
        s.add_argument("--budget", type=int, default=10**6, help="search node budget")
        s.add_argument("--stage", type=int, default=None, help="truncation stage J")
        s.add_argument("--epsilon", default="1/2", help="tolerance (e.g. 0.1 or 1/10)")
        s.add_argument("--radius", type=int, default=1, help="neighbourhood radius")
        s.add_argument("--out", help="write the JSON report here instead of stdout")
        s.add_argument("--csv", help="also write sequence rows as CSV")
        s.add_argument("--timing", action="store_true", help="record wall time")
    g = sub.add_parser("goodearl", help="write a Goodearl system description")
    g.add_argument("--m", type=int, nargs="+", required=True)
    g.add_argument("--points", type=int, nargs="+")
    g.add_argument("--resolution", type=int, default=8)
    g.add_argument("--out")
    return p


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "goodearl":
            data = io.goodearl_description(args.m, args.points, args.resolution)
            io.from_dict(data)   # validate before writing
            _write(args.out, json.dumps(data, indent=2, sort_keys=True) + "\n")
            return 0
        cfg = Config(level=args.level, budget=args.budget, stage=args.stage,
                     epsilon=io.parse_number(args.epsilon, "--epsilon"),
                     radius=args.radius, cover=args.cover, timing=args.timing)
        desc = io.load(args.system)
        report, rows = run_with_rows(args.command, desc, cfg)
        _write(args.out, report_json(report))
        if args.csv:
            _write(args.csv, rows_csv(rows))
        return 0
    except ValidationError as e:
        print(f"ahmd: error: {e}", file=sys.stderr)
        return 2
    except InvariantError as e:
        print(f"ahmd: invariant violated: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
