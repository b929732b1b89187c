"""Sidedoors end to end: the radius-3 branching map, evaluation and detection.

Run with ``python3 demos/sidedoor_walkthrough.py``.
"""

from shortcut_csp.branchmap import omega, rcc5_gamma_prime
from shortcut_csp.gadgets import Graph, edge_partition_reduction, sidedoor_two_family, triangle_partition_exists
from shortcut_csp.oracle import is_satisfiable
from shortcut_csp.sidedoor import detect, evaluate


def evaluation() -> None:
    omega3 = omega(3)
    inst, door = sidedoor_two_family(6, seed=3)
    res = evaluate(inst, door, omega3, trace=True)
    print(f"two windows {door.sets}: {res.answer}, {res.leaves} leaves (bound {res.bound})")
    print("direct answer:", "SAT" if is_satisfiable(inst) else "UNSAT")
    for line in res.trace[:5]:
        print("  ", line)


def detection() -> None:
    gamma = set(rcc5_gamma_prime())
    for n in (3, 4, 6):
        g = Graph.complete(n)
        if len(g.edges) % 3:
            continue
        inst, r, k = edge_partition_reduction(g)
        res = detect(inst, r, k, gamma)
        found = res.sidedoor.sets if res.found else "NONE"
        print(f"K{n}: triangle partition {triangle_partition_exists(g)}, sidedoor {found}")
    g = Graph.of("abcde", [("a", "b"), ("b", "c"), ("a", "c"), ("c", "d"), ("d", "e"), ("c", "e")])
    inst, r, k = edge_partition_reduction(g)
    print("bowtie graph sidedoor:", detect(inst, r, k, gamma).sidedoor.sets)


if __name__ == "__main__":
    evaluation()
    detection()
