"""Backdoors end to end: the R_3 gadget, a hitting-set reduction and evaluation.

Run with ``python3 demos/backdoor_walkthrough.py``.
"""

from shortcut_csp.algebra import load_scheme
from shortcut_csp.backdoor import evaluate, minimum_backdoor, validate_backdoor
from shortcut_csp.gadgets import DoorSpec, HittingSetInstance, build_rk, generate_planted, hitting_set_reduction
from shortcut_csp.model import Instance, PairAssignment, binary_instance, reduce_constraint
from shortcut_csp.oracle import equivalent, is_satisfiable
from shortcut_csp.simpmap import rcc5_basic_map, rk_map


def gadget() -> None:
    eqs = load_scheme("eq")
    names = ["x1", "x2", "x3"]
    inst = Instance.build(eqs, names, {"R3": build_rk(3)}, [("R3", tuple(names))])
    alpha = PairAssignment.of(eqs, {("x1", "x2"): "="})
    reduced = reduce_constraint(inst, inst.constraints[0], alpha)
    shown = binary_instance(eqs, names, [("=", "x1", "x3"), ("=", "x2", "x3")])
    print("R3(x1,x2,x3) with x1 = x2 fixed is equivalent to x1 = x3, x2 = x3:", equivalent(reduced, shown))
    print("map output:", rk_map().lookup(inst, inst.constraints[0], alpha))


def hitting_set() -> None:
    hs = HittingSetInstance.of("abcd", [["a", "b"], ["b", "c"], ["c", "d"]])
    inst, _ = hitting_set_reduction(hs)
    res = minimum_backdoor(inst, rk_map())
    print(f"smallest backdoor: {res.backdoor.pairs} (size {res.backdoor.size}), {res.nodes} nodes, bound {res.bound}")


def planted() -> None:
    smap = rcc5_basic_map()
    inst, door = generate_planted("rcc5", 6, DoorSpec("backdoor", size=3), seed=11)
    print(f"planted rcc5 instance: {len(inst.constraints)} constraints, door {door.pairs}")
    print("valid backdoor:", validate_backdoor(inst, door, smap)[0])
    for flag in (False, True):
        res = evaluate(inst, door, smap, skip_trivial=flag)
        print(f"  skip_trivial={flag}: {res.answer} after {res.branches} branches")
    print("direct answer:", "SAT" if is_satisfiable(inst) else "UNSAT")


if __name__ == "__main__":
    gadget()
    hitting_set()
    planted()
