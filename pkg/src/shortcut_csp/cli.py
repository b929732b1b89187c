"""Command-line front end: ``shortcut-csp solve|detect|compute-map|gen|bench``.

Exit codes: 0 SAT or found, 1 UNSAT, 2 NONE, 3 library error, 4 usage error.
With ``--json`` every command prints one JSON report per line; elapsed
time is included only with ``--timing`` so that output stays reproducible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Mapping, Sequence

from . import backdoor as bd
from . import sidedoor as sd
from .algebra import Relation, all_unions, basic_relations, load_scheme, relation_from_json
from .branchmap import (
    BranchingMap,
    builtin_branch_map,
    load_definitions,
    rcc5_gamma_prime,
    rcc5_split_definitions,
    rcc5_theta,
    synthesize,
    synthesize_from_backdoor_triple,
    triangle_keys,
)
from .errors import ShortcutError
from .gadgets import (
    DoorSpec,
    Graph,
    HittingSetInstance,
    build_rk,
    edge_partition_reduction,
    generate_planted,
    hitting_set_reduction,
)
from .model import Instance, parse_instance, serialize_instance
from .oracle import find_certificate
from .simpmap import (
    SimplificationMap,
    TableSimpMap,
    UNSAT,
    builtin_map,
    compute_simpmap,
    delta_relation,
)

EXIT_SAT, EXIT_UNSAT, EXIT_NONE, EXIT_ERROR, EXIT_USAGE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# resolving files and built-ins


def _builtin(spec: str | None) -> str | None:
    if spec and spec.startswith("builtin:"):
        return spec.split(":", 1)[1]
    return None


def resolve_simpmap(spec: str) -> SimplificationMap:
    name = _builtin(spec)
    if name is not None:
        return builtin_map(name)
    return TableSimpMap.load(spec)


def _language(spec: str) -> tuple[str, dict[str, Relation]]:
    """A relation language: ``builtin:NAME`` or ``{"scheme", "relations"}`` file."""
    name = _builtin(spec)
    if name is not None:
        if name == "rcc5-theta":
            return "rcc5", dict(rcc5_theta())
        if name == "gamma-prime":
            return "rcc5", dict(rcc5_gamma_prime())
        if name in ("rcc5-basics", "eq-basics", "point-basics"):
            scheme = name.split("-")[0]
            return scheme, dict(basic_relations(load_scheme(scheme)))
        if name == "delta":
            return "eq", {"delta": delta_relation()}
        if name.startswith("rk") and name[2:].isdigit():
            return "eq", {f"R{name[2:]}": build_rk(int(name[2:]))}
        raise UsageError(f"unknown built-in language {name!r}")
    doc = json.loads(Path(spec).read_text())
    scheme = load_scheme(doc["scheme"])
    return scheme.name, {n: relation_from_json(scheme, r) for n, r in doc["relations"].items()}


def resolve_branch_map(spec: str, instance: Instance, radius: int) -> BranchingMap:
    name = _builtin(spec)
    if name is not None:
        bmap = builtin_branch_map(name)
        return bmap
    # a definition file: atom names resolve against the instance or as unions
    doc = json.loads(Path(spec).read_text())
    unions = all_unions(instance.scheme, include_empty=True)
    targets: dict[str, Relation] = {}
    for clauses in doc.values():
        for clause in clauses:
            for t, _, _ in clause:
                rel = instance.relations.get(t) or unions.get(t)
                if rel is None:
                    raise UsageError(f"definition atom {t!r} names no known relation")
                targets[t] = rel
    for rname, rel in instance.relations.items():
        if rname not in doc:
            targets.setdefault(rname, rel)
    source = {n: instance.relations[n] for n in doc if n in instance.relations}
    defs = load_definitions(spec, targets)
    return synthesize(source, targets, radius, defs, instance.scheme)


def resolve_targets(spec: str) -> set[str]:
    name = _builtin(spec)
    if name is not None:
        if name in ("omega2", "omega3", "gamma-prime"):
            return set(rcc5_gamma_prime())
        if name == "delta":
            return set(basic_relations(load_scheme("eq")))
        raise UsageError(f"unknown built-in target language {name!r}")
    if Path(spec).exists():
        return set(_language(spec)[1])
    return {t for t in spec.split(",") if t}


# ---------------------------------------------------------------------------
# reports


def _stats(instance: Instance) -> dict:
    return {
        "scheme": instance.scheme.name,
        "variables": len(instance.variables),
        "constraints": len(instance.constraints),
    }


def _emit(args, report: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(report, sort_keys=True, ensure_ascii=False))
    else:
        print(text)


def _timed(args, report: dict, start: float) -> dict:
    if getattr(args, "timing", False):
        report["elapsed_s"] = round(time.perf_counter() - start, 6)
    return report


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    start = time.perf_counter()
    instance = parse_instance(args.instance)
    report: dict = {"command": "solve", "instance": _stats(instance), "strategy": args.strategy}
    trace: list[str] = []
    if args.strategy == "oracle":
        cert = find_certificate(instance)
        sat = cert is not None
        report["counters"] = {}
        if sat:
            report["certificate"] = cert.to_json()
    elif args.strategy == "backdoor":
        if not args.door or not args.map:
            raise UsageError("--strategy backdoor needs --door and --map")
        door = bd.Backdoor.from_json(json.loads(Path(args.door).read_text()))
        smap = resolve_simpmap(args.map)
        res = bd.evaluate(instance, door, smap, skip_trivial=args.skip_trivial, trace=args.trace)
        sat = res.satisfiable
        formula = "popcount-product" if args.skip_trivial else "m^k"
        report["counters"] = {"branches": res.branches, "inconsistent": res.inconsistent}
        report["bound"] = {"formula": formula, "value": res.bound, "ok": res.branches <= res.bound}
        trace = res.trace
    else:
        if not args.door or not args.map:
            raise UsageError("--strategy sidedoor needs --door and --map")
        door = sd.Sidedoor.from_json(json.loads(Path(args.door).read_text()))
        bmap = resolve_branch_map(args.map, instance, door.radius)
        res = sd.evaluate(instance, door, bmap, trace=args.trace)
        sat = res.satisfiable
        report["counters"] = {"leaves": res.leaves, "nodes": res.nodes, "factor": res.factor}
        report["bound"] = {"formula": "c^|S|", "value": res.bound, "ok": res.leaves <= res.bound}
        trace = res.trace
    report["answer"] = "SAT" if sat else "UNSAT"
    for line in trace:
        print(line)
    _emit(args, _timed(args, report, start), report["answer"])
    return EXIT_SAT if sat else EXIT_UNSAT


def cmd_detect(args) -> int:
    start = time.perf_counter()
    instance = parse_instance(args.instance)
    report: dict = {"command": "detect", "instance": _stats(instance), "kind": args.kind, "k": args.k}
    if args.kind == "backdoor":
        if not args.map:
            raise UsageError("--kind backdoor needs --map")
        res = bd.detect(instance, args.k, resolve_simpmap(args.map))
        door = res.backdoor.to_json() if res.found else None
        report["counters"] = {"nodes": res.nodes}
        report["bound"] = {"formula": "C(a,2)^(k+1)", "value": res.bound, "ok": res.nodes <= res.bound}
    else:
        if args.r is None:
            raise UsageError("--kind sidedoor needs --r")
        if not args.targets and not args.map:
            raise UsageError("--kind sidedoor needs --targets or --map")
        targets = resolve_targets(args.targets or args.map)
        res = sd.detect(instance, args.r, args.k, targets)
        door = res.sidedoor.to_json() if res.found else None
        report["counters"] = {"families": res.families}
        report["bound"] = {"formula": "(rk)^(rk)", "value": res.bound, "ok": res.families <= res.bound}
    report["door"] = door
    report["answer"] = "FOUND" if door is not None else "NONE"
    if door is not None and args.out:
        Path(args.out).write_text(json.dumps(door, indent=2) + "\n")
    _emit(args, _timed(args, report, start), json.dumps(door) if door is not None else "NONE")
    return EXIT_SAT if door is not None else EXIT_NONE


def _branch_keys(bmap: BranchingMap, mode: str) -> list:
    """Keys visited by ``compute-map --kind branch``."""
    keys = []
    for name, rel in sorted(bmap.source.items()):
        if rel.arity <= bmap.radius:
            keys.append((rel.arity, ((name, tuple(range(rel.arity))),)))
    binary = [n for n, r in bmap.source.items() if r.arity == 2]
    if bmap.radius >= 3 and binary and mode != "single":
        pool = binary if mode == "all-triangles" else [n for n in binary if not bmap.is_target(n)]
        keys.extend(triangle_keys(pool))
    return keys


def cmd_compute_map(args) -> int:
    start = time.perf_counter()
    s_scheme, source = _language(args.source)
    t_scheme, targets = _language(args.target)
    if s_scheme != t_scheme:
        raise UsageError(f"source scheme {s_scheme} differs from target scheme {t_scheme}")
    report: dict = {"command": "compute-map", "kind": args.kind, "scheme": s_scheme}
    if args.kind == "simp":
        smap = compute_simpmap(source, targets, s_scheme)
        entries = smap.entries
        report["counters"] = {
            "keys": len(entries),
            "defined": sum(1 for f in entries.values() if f is not None and f != UNSAT),
            "unsat": sum(1 for f in entries.values() if f == UNSAT),
            "undefined": sum(1 for f in entries.values() if f is None),
        }
        text = smap.dumps()
    else:
        if args.r is None:
            raise UsageError("--kind branch needs --r")
        defs_spec = args.defs
        if defs_spec is None and args.target == "builtin:gamma-prime":
            defs_spec = "builtin:rcc5-split"
        if defs_spec == "builtin:rcc5-split":
            merged = dict(targets)
            bmap = synthesize(source, merged, args.r, rcc5_split_definitions(), s_scheme)
        elif defs_spec:
            unions = all_unions(load_scheme(s_scheme), include_empty=True)
            merged = dict(targets)
            defs_doc = json.loads(Path(defs_spec).read_text())
            for clauses in defs_doc.values():
                for clause in clauses:
                    for t, _, _ in clause:
                        if t not in merged and t in unions:
                            merged[t] = unions[t]
            bmap = synthesize(source, merged, args.r, load_definitions(defs_spec, merged), s_scheme)
        else:
            bmap = synthesize_from_backdoor_triple(source, targets, s_scheme, args.r)
        keys = _branch_keys(bmap, args.keys)
        bad = [k for k in keys if not bmap.verify_entry(k)]
        report["counters"] = {"keys": len(keys), "factor": bmap.branching_factor, "sol_failures": len(bad)}
        text = json.dumps(bmap.dump(), indent=1, ensure_ascii=False) + "\n"
        if bad:
            raise ShortcutError(f"{len(bad)} entries fail the solution-preservation check")
    if args.out:
        Path(args.out).write_text(text)
    elif not args.json:
        sys.stdout.write(text)
    _emit(args, _timed(args, report, start), json.dumps(report["counters"], sort_keys=True))
    return EXIT_SAT


def _write_instance(args, instance: Instance, extra: Mapping | None = None) -> None:
    text = serialize_instance(instance)
    if args.out:
        Path(args.out).write_text(text)
    report = {"command": f"gen {args.gen}", "instance": _stats(instance)}
    if extra:
        report.update(extra)
    if args.json:
        print(json.dumps(report, sort_keys=True))
    elif not args.out:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    if args.gen == "planted":
        spec = DoorSpec(
            kind=args.kind,
            density=args.density,
            size=args.size,
            radius=args.radius,
            door_menu=tuple(args.door_menu.split(",")) if args.door_menu else (),
            base_menu=tuple(args.base_menu.split(",")) if args.base_menu else (),
        )
        instance, door = generate_planted(args.scheme, args.n, spec, args.seed)
        if args.door_out:
            Path(args.door_out).write_text(json.dumps(door.to_json(), indent=2) + "\n")
        _write_instance(args, instance, {"seed": args.seed, "door": door.to_json()})
    elif args.gen == "hitting-set":
        if args.file:
            hs = HittingSetInstance.from_json(json.loads(Path(args.file).read_text()))
        else:
            if not args.universe:
                raise UsageError("gen hitting-set needs --file or --universe/--family")
            family = [f.split(",") for f in (args.family or "").split(";") if f]
            hs = HittingSetInstance.of(args.universe.split(","), family, args.k)
        instance, k = hitting_set_reduction(hs)
        _write_instance(args, instance, {"k": k})
    elif args.gen == "edge-partition":
        if args.file:
            g = Graph.from_json(json.loads(Path(args.file).read_text()))
        elif args.complete is not None:
            g = Graph.complete(args.complete)
        else:
            raise UsageError("gen edge-partition needs --file or --complete")
        instance, r, k = edge_partition_reduction(g)
        _write_instance(args, instance, {"r": r, "k": k})
    elif args.gen == "rk":
        rel = build_rk(args.k)
        text = json.dumps(rel.to_json(), indent=2) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        if args.json:
            print(json.dumps({"command": "gen rk", "k": args.k, "clauses": len(rel.clauses)}, sort_keys=True))
        elif not args.out:
            sys.stdout.write(text)
    return EXIT_SAT


# -- bench


BENCH_FIELDS = [
    "row",
    "seed",
    "n",
    "constraints",
    "strategy",
    "door_size",
    "answer",
    "oracle",
    "agree",
    "counter",
    "bound_formula",
    "bound",
    "ok",
]


def _bench_row(task: tuple) -> dict:
    suite, strategy, row, seed, n, size, skip_trivial = task
    if suite == "planted-backdoor":
        instance, door = generate_planted("rcc5", n, DoorSpec("backdoor", size=size), seed)
    elif suite == "planted-sidedoor":
        instance, door = generate_planted("rcc5", n, DoorSpec("sidedoor", radius=3), seed)
    else:
        raise UsageError(f"unknown suite {suite!r}")
    oracle = find_certificate(instance) is not None
    if strategy == "oracle":
        answer, counter, formula, bound = oracle, 0, "-", 0
    elif strategy == "backdoor":
        if suite != "planted-backdoor":
            raise UsageError("the backdoor strategy runs on the planted-backdoor suite")
        res = bd.evaluate(instance, door, builtin_map("rcc5-basic"), skip_trivial=skip_trivial)
        answer, counter, bound = res.satisfiable, res.branches, res.bound
        formula = "4^k" if skip_trivial else "5^k"
        if skip_trivial:
            bound = min(bound, 4 ** door.size)
    else:
        if suite == "planted-backdoor":
            # each backdoor pair is a radius-2 window covering its constraints
            door = sd.Sidedoor.of(2, door.pairs)
            bmap = builtin_branch_map("omega2")
        else:
            bmap = builtin_branch_map("omega3")
        res = sd.evaluate(instance, door, bmap)
        answer, counter, formula, bound = res.satisfiable, res.leaves, "c^|S|", res.bound
        if suite == "planted-backdoor":
            formula, bound = "2^|S|", 2 ** door.size
    ok = answer == oracle and (strategy == "oracle" or counter <= bound)
    return {
        "row": row,
        "seed": seed,
        "n": n,
        "constraints": len(instance.constraints),
        "strategy": strategy,
        "door_size": door.size,
        "answer": "SAT" if answer else "UNSAT",
        "oracle": "SAT" if oracle else "UNSAT",
        "agree": answer == oracle,
        "counter": counter,
        "bound_formula": formula,
        "bound": bound,
        "ok": ok,
    }


def cmd_bench(args) -> int:
    start = time.perf_counter()
    tasks = [
        (args.suite, args.strategy, i, args.seed * 1_000_003 + i, args.n, args.size, args.skip_trivial)
        for i in range(args.count)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_row, tasks))
    else:
        rows = [_bench_row(t) for t in tasks]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    failures = sum(1 for r in rows if not r["ok"])
    report = {
        "command": "bench",
        "suite": args.suite,
        "strategy": args.strategy,
        "seed": args.seed,
        "rows": len(rows),
        "failures": failures,
    }
    if args.json:
        print(json.dumps(_timed(args, report, start), sort_keys=True))
    elif not args.out:
        sys.stdout.write(buf.getvalue())
    else:
        print(f"{len(rows)} rows, {failures} bound or agreement failures")
    return EXIT_ERROR if failures else EXIT_SAT


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="line-delimited JSON reports")
    common.add_argument("--trace", action="store_true", help="print one line per branch")
    common.add_argument("--timing", action="store_true", help="include elapsed time in reports")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (bench rows)")

    parser = _Parser(prog="shortcut-csp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="decide an instance")
    p.add_argument("instance")
    p.add_argument("--strategy", choices=["oracle", "backdoor", "sidedoor"], default="oracle")
    p.add_argument("--door", help="backdoor or sidedoor JSON file")
    p.add_argument("--map", help="map file or builtin:NAME")
    p.add_argument("--skip-trivial", action="store_true", help="branch only on basics allowed by the pair's constraints")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("detect", parents=[common], help="find a backdoor or sidedoor")
    p.add_argument("instance")
    p.add_argument("--kind", choices=["backdoor", "sidedoor"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--map", help="simplification map (backdoor) or branching map (sidedoor targets)")
    p.add_argument("--targets", help="target relation names, a language file, or builtin:NAME")
    p.add_argument("--out", help="write the door here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("compute-map", parents=[common], help="build a simplification or branching map")
    p.add_argument("--kind", choices=["simp", "branch"], required=True)
    p.add_argument("--source", required=True, help="language file or builtin:NAME")
    p.add_argument("--target", required=True, help="language file or builtin:NAME")
    p.add_argument("--r", type=int)
    p.add_argument("--defs", help="definition file or builtin:rcc5-split for --kind branch")
    p.add_argument(
        "--keys",
        choices=["single", "triangles", "all-triangles"],
        default="triangles",
        help="which keys a branch map visits",
    )
    p.add_argument("--out")
    p.set_defaults(func=cmd_compute_map)

    p = sub.add_parser("gen", parents=[common], help="generate instances")
    gsub = p.add_subparsers(dest="gen", required=True, parser_class=_Parser)
    g = gsub.add_parser("planted", parents=[common])
    g.add_argument("--scheme", default="rcc5")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--kind", choices=["backdoor", "sidedoor"], default="backdoor")
    g.add_argument("--size", type=int, default=2)
    g.add_argument("--radius", type=int, default=3)
    g.add_argument("--density", type=float, default=0.5)
    g.add_argument("--door-menu")
    g.add_argument("--base-menu")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--door-out")
    g = gsub.add_parser("hitting-set", parents=[common])
    g.add_argument("--file")
    g.add_argument("--universe")
    g.add_argument("--family", help="sets separated by ';', members by ','")
    g.add_argument("--k", type=int, default=0)
    g.add_argument("--out")
    g = gsub.add_parser("edge-partition", parents=[common])
    g.add_argument("--file")
    g.add_argument("--complete", type=int)
    g.add_argument("--out")
    g = gsub.add_parser("rk", parents=[common])
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", parents=[common], help="run a seeded suite and check bounds")
    p.add_argument("--suite", choices=["planted-backdoor", "planted-sidedoor"], default="planted-backdoor")
    p.add_argument("--strategy", choices=["oracle", "backdoor", "sidedoor"], default="backdoor")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skip-trivial", action="store_true")
    p.add_argument("--out", help="CSV output file")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ShortcutError, OSError, json.JSONDecodeError, KeyError, ValueError, AssertionError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
