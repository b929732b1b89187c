"""Acceptance suite: ten end-to-end criteria with exact checks and time limits.

Each test prints ``CRITERION n: PASS|FAIL ...``; the lines are repeated in
the terminal summary.  Run directly with ``python tests/test_acceptance.py``
to get the same lines without pytest.
"""

from __future__ import annotations

import itertools
import random
import subprocess
import sys
import time
from pathlib import Path


from shortcut_csp.algebra import all_unions, basic_relations, load_scheme, make_dnf
from shortcut_csp.backdoor import evaluate as bd_evaluate
from shortcut_csp.backdoor import minimum_backdoor, validate_backdoor
from shortcut_csp.branchmap import omega, rcc5_gamma_prime, rcc5_theta, triangle_keys
from shortcut_csp.gadgets import (
    DoorSpec,
    HittingSetInstance,
    all_graphs,
    build_rk,
    edge_partition_reduction,
    generate_planted,
    hitting_set_reduction,
    min_hitting_set,
    sidedoor_two_family,
    triangle_partition_exists,
)
from shortcut_csp.model import Constraint, Instance, PairAssignment, binary_instance, reduce_constraint
from shortcut_csp.oracle import (
    brute_force_equality,
    brute_force_order,
    enumerate_certificates,
    equivalent,
    find_certificate,
    is_satisfiable,
    naive_certificates,
)
from shortcut_csp.sidedoor import brute_force_sidedoor_exists
from shortcut_csp.sidedoor import detect as sd_detect
from shortcut_csp.sidedoor import evaluate as sd_evaluate
from shortcut_csp.sidedoor import validate_sidedoor
from shortcut_csp.simpmap import (
    UNSAT,
    candidate_space_has_equivalent,
    compute_simpmap,
    delta_relation,
    key_from_parts,
    rk_map,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

DATA = Path(__file__).resolve().parents[1] / "src" / "shortcut_csp" / "data" / "instances"


def report(number: int, title: str, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    within = elapsed <= limit
    passed = ok and within
    line = (
        f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {title} | {detail} | "
        f"{elapsed:.1f}s (limit {limit:.0f}s)"
    )
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


# ---------------------------------------------------------------------------
# 1. oracle cross-validation


def eq_constraint_menu(names: list[str]) -> list[tuple[str, tuple[str, ...]]]:
    """Distinct constraints over ``names`` up to argument symmetries.

    ``=``, ``!=`` and R_3 are symmetric in their arguments and delta is
    invariant under reversal, so each constraint is kept in one form.
    """
    out = set()
    for x, y in itertools.product(names, repeat=2):
        out.add(("=", tuple(sorted((x, y)))))
        out.add(("!=", tuple(sorted((x, y)))))
    for s in itertools.product(names, repeat=3):
        out.add(("R3", tuple(sorted(s))))
        out.add(("delta", min(s, s[::-1])))
    return sorted(out)


def point_random_instance(rng: random.Random) -> Instance:
    point = load_scheme("point")
    n = rng.randint(1, 5)
    names = [f"v{i}" for i in range(n)]
    unions = all_unions(point, include_empty=True)
    lt, gt = point.index("<"), point.index(">")
    relations = dict(unions)
    relations["between"] = make_dnf(point, 3, [[(0, 1, lt), (1, 2, lt)], [(0, 1, gt), (1, 2, gt)]])
    menu = sorted(unions) + ["between"]
    constraints = []
    for _ in range(rng.randint(0, 7)):
        rel = rng.choice(menu)
        scope = tuple(rng.choice(names) for _ in range(relations[rel].arity))
        constraints.append(Constraint(rel, scope))
    return Instance.build(point, names, relations, constraints)


def criterion_1() -> bool:
    start = time.perf_counter()
    eqs = load_scheme("eq")
    relations = dict(basic_relations(eqs))
    relations["delta"] = delta_relation(eqs)
    relations["R3"] = build_rk(3)
    eq_total = eq_bad = 0
    for n in range(1, 5):
        names = ["a", "b", "c", "d"][:n]
        menu = eq_constraint_menu(names)
        for size in range(4):
            for combo in itertools.combinations(menu, size):
                inst = Instance(eqs, tuple(names), relations, tuple(Constraint(r, s) for r, s in combo))
                eq_total += 1
                if (find_certificate(inst) is not None) != brute_force_equality(inst):
                    eq_bad += 1
    rng = random.Random(1)
    pt_total = pt_bad = 0
    for _ in range(1000):
        inst = point_random_instance(rng)
        pt_total += 1
        if (find_certificate(inst) is not None) != brute_force_order(inst):
            pt_bad += 1
    elapsed = time.perf_counter() - start
    detail = f"eq {eq_total} instances, {eq_bad} disagreements; point {pt_total} instances, {pt_bad} disagreements"
    return report(1, "oracle cross-validation", eq_bad == 0 and pt_bad == 0, detail, elapsed, 60)


# ---------------------------------------------------------------------------
# 2. certificates decode and unsat enumeration is empty


def random_instance(rng: random.Random, scheme_name: str) -> Instance:
    scheme = load_scheme(scheme_name)
    n = rng.randint(2, 4)
    names = [f"v{i}" for i in range(n)]
    relations = dict(all_unions(scheme))
    if scheme_name == "eq":
        relations["delta"] = delta_relation(scheme)
        relations["R3"] = build_rk(3)
    if scheme_name == "point":
        lt, gt = scheme.index("<"), scheme.index(">")
        relations["between"] = make_dnf(scheme, 3, [[(0, 1, lt), (1, 2, lt)], [(0, 1, gt), (1, 2, gt)]])
    menu = sorted(relations)
    constraints = []
    for _ in range(rng.randint(1, 2 * n)):
        rel = rng.choice(menu)
        scope = tuple(rng.choice(names) for _ in range(relations[rel].arity))
        constraints.append(Constraint(rel, scope))
    return Instance.build(scheme, names, relations, constraints)


def criterion_2() -> bool:
    start = time.perf_counter()
    rng = random.Random(2)
    schemes = ["rcc5", "point", "eq", "finite:2"]
    sat = unsat = 0
    bad_sat = bad_unsat = naive_checked = 0
    attempts = 0
    while (sat < 500 or unsat < 500) and attempts < 50_000:
        inst = random_instance(rng, schemes[attempts % len(schemes)])
        attempts += 1
        cert = find_certificate(inst)
        if cert is not None and sat < 500:
            sat += 1
            if not cert.satisfies(inst):
                bad_sat += 1
        elif cert is None and unsat < 500:
            unsat += 1
            if enumerate_certificates(inst):
                bad_unsat += 1
            if len(inst.variables) <= 3:
                naive_checked += 1
                if naive_certificates(inst):
                    bad_unsat += 1
    ok = sat == 500 and unsat == 500 and bad_sat == 0 and bad_unsat == 0
    detail = (
        f"{sat} sat ({bad_sat} failed re-check), {unsat} unsat ({bad_unsat} nonempty enumerations, "
        f"{naive_checked} also checked naively)"
    )
    return report(2, "certificate decoding", ok, detail, time.perf_counter() - start, 300)


# ---------------------------------------------------------------------------
# 3. RCC5 simplification map


def criterion_3() -> bool:
    start = time.perf_counter()
    rcc5 = load_scheme("rcc5")
    smap = compute_simpmap(rcc5_theta(), basic_relations(rcc5), rcc5)
    checked = bad = 0
    for name, rel in sorted(rcc5_theta().items()):
        for b in range(rcc5.m):
            key = key_from_parts(name, (0, 1), [(0, 1, b)])
            formula = smap.entry(key, rel)
            expected = ((rcc5.basics[b], 0, 1),) if rel.mask >> b & 1 else UNSAT
            checked += 1
            if formula != expected or not smap.verify_entry(key):
                bad += 1
    detail = f"{checked} reduced keys, {bad} not UNSAT-or-basic"
    return report(3, "rcc5 simplification map", checked == 155 and bad == 0, detail, time.perf_counter() - start, 60)


# ---------------------------------------------------------------------------
# 4. the R_3 gadget


def criterion_4() -> bool:
    start = time.perf_counter()
    eqs = load_scheme("eq")
    r3 = build_rk(3)
    targets = basic_relations(eqs)
    # (a) no positive binary formula without a fixed pair
    part_a = not candidate_space_has_equivalent(eqs, key_from_parts("R3", (0, 1, 2), ()), r3, targets)
    # (b) every single fixed pair
    names = ["x1", "x2", "x3"]
    inst = Instance.build(eqs, names, {"R3": r3}, [("R3", tuple(names))])
    c = inst.constraints[0]
    smap = rk_map()
    part_b = True
    cases = 0
    for (s, t), b in itertools.product(itertools.combinations(range(3), 2), range(eqs.m)):
        alpha = PairAssignment.of(eqs, {(names[s], names[t]): b})
        out = smap.lookup(inst, c, alpha)
        cases += 1
        if out is None or not equivalent(reduce_constraint(inst, c, alpha), out):
            part_b = False
    # (c) the displayed equivalence
    alpha = PairAssignment.of(eqs, {("x1", "x2"): "="})
    shown = binary_instance(eqs, names, [("=", "x1", "x3"), ("=", "x2", "x3")])
    part_c = equivalent(reduce_constraint(inst, c, alpha), shown)
    ok = part_a and part_b and part_c
    detail = f"(a) no equivalent without a pair: {part_a}; (b) {cases} fixed pairs equivalent: {part_b}; (c) {part_c}"
    return report(4, "R_3 gadget", ok, detail, time.perf_counter() - start, 60)


# ---------------------------------------------------------------------------
# 5. backdoor evaluation


def criterion_5() -> bool:
    from shortcut_csp.simpmap import rcc5_basic_map

    start = time.perf_counter()
    smap = rcc5_basic_map()
    count = invalid = disagree = over = over_skip = 0
    for seed in range(200):
        n = 3 + seed % 4
        size = min(1 + seed % 3, n * (n - 1) // 2)
        inst, door = generate_planted("rcc5", n, DoorSpec("backdoor", size=size), seed)
        count += 1
        if not validate_backdoor(inst, door, smap)[0]:
            invalid += 1
            continue
        truth = is_satisfiable(inst)
        plain = bd_evaluate(inst, door, smap)
        skip = bd_evaluate(inst, door, smap, skip_trivial=True)
        disagree += (plain.satisfiable != truth) + (skip.satisfiable != truth)
        over += plain.branches > 5**door.size
        over_skip += skip.branches > 4**door.size
    ok = count == 200 and invalid == 0 and disagree == 0 and over == 0 and over_skip == 0
    detail = (
        f"{count} instances, {invalid} invalid doors, {disagree} disagreements, "
        f"{over} over 5^|B|, {over_skip} over 4^|B| with the flag"
    )
    return report(5, "backdoor evaluation", ok, detail, time.perf_counter() - start, 600)


# ---------------------------------------------------------------------------
# 6. backdoor detection on hitting-set reductions


def criterion_6() -> bool:
    start = time.perf_counter()
    smap = rk_map()
    total = mismatch = over = 0
    for u in range(1, 6):
        universe = "abcde"[:u]
        subsets = [frozenset(s) for r in range(1, u + 1) for s in itertools.combinations(universe, r)]
        for size in range(5):
            for family in itertools.combinations(subsets, size):
                hs = HittingSetInstance.of(universe, family)
                inst, _ = hitting_set_reduction(hs)
                res = minimum_backdoor(inst, smap)
                total += 1
                if not res.found or res.backdoor.size != min_hitting_set(hs):
                    mismatch += 1
                if res.nodes > res.bound:
                    over += 1
    detail = f"{total} hitting-set instances, {mismatch} size mismatches, {over} node-bound violations"
    return report(6, "backdoor detection", mismatch == 0 and over == 0, detail, time.perf_counter() - start, 600)


# ---------------------------------------------------------------------------
# 7. branching maps


def criterion_7() -> bool:
    start = time.perf_counter()
    omega2 = omega(2)
    for name in sorted(rcc5_theta()):
        omega2.entry((2, ((name, (0, 1)),)))
    factor2 = omega2.branching_factor
    omega3 = omega(3)
    for key in triangle_keys(rcc5_theta()):
        omega3.entry(key)
    factor3 = omega3.branching_factor
    failures = sum(1 for m in (omega2, omega3) for key in list(m.memo) if not m.verify_entry(key))
    entries = len(omega2.memo) + len(omega3.memo)
    ok = factor2 == 2 and factor3 <= 7 and failures == 0
    detail = f"radius-2 factor {factor2}; radius-3 factor {factor3} over 31^3 triangles; {entries} entries, {failures} Sol failures"
    return report(7, "branching maps", ok, detail, time.perf_counter() - start, 900)


# ---------------------------------------------------------------------------
# 8. sidedoor evaluation


def criterion_8() -> bool:
    start = time.perf_counter()
    omega3 = omega(3)
    gamma = set(rcc5_gamma_prime())
    fam_bad = fam_max = 0
    for seed in range(50):
        inst, door = sidedoor_two_family(6, seed)
        res = sd_evaluate(inst, door, omega3, debug=True)
        fam_max = max(fam_max, res.leaves)
        if res.satisfiable != is_satisfiable(inst) or res.leaves > 49:
            fam_bad += 1
    count = invalid = disagree = over = 0
    for seed in range(200):
        n = (3, 6, 9)[seed % 3]
        density = (0.3, 0.6, 0.9)[seed // 3 % 3]
        inst, door = generate_planted("rcc5", n, DoorSpec("sidedoor", radius=3, density=density), 1000 + seed)
        count += 1
        if not validate_sidedoor(inst, door, gamma)[0]:
            invalid += 1
            continue
        res = sd_evaluate(inst, door, omega3, debug=True)
        disagree += res.satisfiable != is_satisfiable(inst)
        over += res.leaves > res.factor ** door.size
    ok = fam_bad == 0 and count == 200 and invalid == 0 and disagree == 0 and over == 0
    detail = (
        f"n=6 family: 50 instances, max {fam_max} leaves, {fam_bad} failures; "
        f"{count} planted: {invalid} invalid, {disagree} disagreements, {over} over c^|S| (c={omega3.branching_factor})"
    )
    return report(8, "sidedoor evaluation", ok, detail, time.perf_counter() - start, 600)


# ---------------------------------------------------------------------------
# 9. sidedoor detection on edge-partition reductions


def criterion_9() -> bool:
    start = time.perf_counter()
    gamma = set(rcc5_gamma_prime())
    total = mismatch = family_checked = 0
    for n in range(7):
        for g in all_graphs(n):
            if len(g.edges) % 3:
                continue
            inst, r, k = edge_partition_reduction(g)
            res = sd_detect(inst, r, k, gamma)
            total += 1
            expected = triangle_partition_exists(g)
            if res.found != expected:
                mismatch += 1
            if res.found and not validate_sidedoor(inst, res.sidedoor, gamma)[0]:
                mismatch += 1
            if n <= 5 and k <= 2:
                family_checked += 1
                if brute_force_sidedoor_exists(inst, r, k, gamma) != res.found:
                    mismatch += 1
    k3 = sd_detect(*_reduce_complete(3), gamma)
    k4 = sd_detect(*_reduce_complete(4), gamma)
    examples = k3.found and k3.sidedoor.size == 1 and not k4.found
    ok = mismatch == 0 and examples
    detail = (
        f"{total} graphs, {mismatch} mismatches ({family_checked} also against all subset families); "
        f"K3 size {k3.sidedoor.size if k3.found else 'NONE'}, K4 at k=2 {'NONE' if not k4.found else 'FOUND'}"
    )
    return report(9, "sidedoor detection", ok, detail, time.perf_counter() - start, 300)


def _reduce_complete(n: int):
    from shortcut_csp.gadgets import Graph

    return edge_partition_reduction(Graph.complete(n))


# ---------------------------------------------------------------------------
# 10. CLI determinism


def cli_commands(tmp: Path) -> list[list[str]]:
    d = str(DATA)
    return [
        ["solve", f"{d}/betweenness.json", "--json"],
        ["solve", f"{d}/rcc5_small.json", "--strategy", "backdoor", "--door", f"{d}/rcc5_small.backdoor.json", "--map", "builtin:rcc5-basic", "--json", "--trace"],
        ["solve", f"{d}/sidedoor2_n6.json", "--strategy", "sidedoor", "--door", f"{d}/sidedoor2_n6.door.json", "--map", "builtin:omega3", "--json", "--trace"],
        ["detect", f"{d}/hitting_set.json", "--kind", "backdoor", "--k", "2", "--map", "builtin:rk", "--json", "--out", f"{tmp}/OUT"],
        ["detect", f"{d}/k3_edge_partition.json", "--kind", "sidedoor", "--k", "1", "--r", "3", "--targets", "builtin:gamma-prime", "--json", "--out", f"{tmp}/OUT"],
        ["compute-map", "--kind", "simp", "--source", "builtin:rcc5-theta", "--target", "builtin:rcc5-basics", "--json", "--out", f"{tmp}/OUT"],
        ["compute-map", "--kind", "simp", "--source", "builtin:delta", "--target", "builtin:eq-basics", "--json", "--out", f"{tmp}/OUT"],
        ["compute-map", "--kind", "branch", "--source", "builtin:rcc5-theta", "--target", "builtin:gamma-prime", "--r", "3", "--json", "--out", f"{tmp}/OUT"],
        ["gen", "planted", "--n", "6", "--seed", "5", "--json", "--out", f"{tmp}/OUT"],
        ["gen", "planted", "--n", "6", "--kind", "sidedoor", "--seed", "5", "--json", "--out", f"{tmp}/OUT"],
        ["gen", "hitting-set", "--universe", "a,b,c", "--family", "a,b;b,c", "--k", "1", "--json", "--out", f"{tmp}/OUT"],
        ["gen", "edge-partition", "--complete", "6", "--json", "--out", f"{tmp}/OUT"],
        ["gen", "rk", "--k", "4", "--json", "--out", f"{tmp}/OUT"],
        ["bench", "--suite", "planted-backdoor", "--strategy", "backdoor", "--count", "12", "--seed", "7", "--json", "--out", f"{tmp}/OUT"],
        ["bench", "--suite", "planted-backdoor", "--strategy", "sidedoor", "--count", "12", "--seed", "7", "--json", "--out", f"{tmp}/OUT"],
        ["bench", "--suite", "planted-sidedoor", "--strategy", "sidedoor", "--count", "12", "--seed", "7", "--json", "--out", f"{tmp}/OUT"],
    ]


def run_cli(argv: list[str], out_path: Path) -> tuple[int, bytes, bytes]:
    if out_path.exists():
        out_path.unlink()
    proc = subprocess.run([sys.executable, "-m", "shortcut_csp.cli", *argv], capture_output=True, timeout=600)
    return proc.returncode, proc.stdout, out_path.read_bytes() if out_path.exists() else b""


def criterion_10(tmp: Path) -> bool:
    start = time.perf_counter()
    commands = cli_commands(tmp)
    differing = []
    for argv in commands:
        outputs = []
        for jobs in ("1", "1", "4"):
            outputs.append(run_cli([*argv, "--jobs", jobs], tmp / "OUT"))
        if len(set(outputs)) != 1:
            differing.append(" ".join(argv[:2]))
    detail = f"{len(commands)} commands x 3 runs (jobs 1, 1, 4); {len(differing)} differ {differing if differing else ''}".strip()
    return report(10, "CLI determinism", not differing, detail, time.perf_counter() - start, 900)


# ---------------------------------------------------------------------------
# pytest entry points


def test_criterion_1_oracle_cross_validation():
    assert criterion_1()


def test_criterion_2_certificate_decoding():
    assert criterion_2()


def test_criterion_3_rcc5_simplification_map():
    assert criterion_3()


def test_criterion_4_rk_gadget():
    assert criterion_4()


def test_criterion_5_backdoor_evaluation():
    assert criterion_5()


def test_criterion_6_backdoor_detection():
    assert criterion_6()


def test_criterion_7_branching_maps():
    assert criterion_7()


def test_criterion_8_sidedoor_evaluation():
    assert criterion_8()


def test_criterion_9_sidedoor_detection():
    assert criterion_9()


def test_criterion_10_cli_determinism(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import tempfile

    results = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6(), criterion_7(), criterion_8(), criterion_9()]
    with tempfile.TemporaryDirectory() as tmp:
        results.append(criterion_10(Path(tmp)))
    sys.exit(0 if all(results) else 1)
