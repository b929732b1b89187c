"""Instance factories: the R_k relations, two reductions, planted doors.

The reductions turn Hitting Set into backdoor detection and Edge Partition
into Triangles into sidedoor detection, so answers on either side can be
compared by brute force.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .algebra import DnfRel, PartitionScheme, UnionRel, all_unions, basic_relations, load_scheme, make_dnf
from .errors import BadEdgeCount, KTooSmall, SpecInfeasible, WrongScheme
from .model import Constraint, Instance


def build_rk(k: int, scheme: PartitionScheme | str | None = None) -> DnfRel:
    """R_k as ``(all arguments equal) or (all arguments pairwise distinct)``."""
    if k < 2:
        raise KTooSmall(f"R_k needs k >= 2, got {k}")
    scheme = load_scheme(scheme or "eq")
    if scheme.m != 2 or scheme.identity_index is None:
        raise WrongScheme(f"R_k is built over an equality scheme, not {scheme.name!r}")
    e = scheme.identity_index
    ne = 1 - e
    pairs = list(itertools.combinations(range(k), 2))
    return make_dnf(scheme, k, [[(i, j, e) for i, j in pairs], [(i, j, ne) for i, j in pairs]])


def rk_cnf_formula(k: int, scheme: PartitionScheme | str | None = None):
    """The literal CNF ``AND over pairs (x_i != x_j or x_l = x_m)``."""
    from .algebra import And, Atom, Not, Or

    scheme = load_scheme(scheme or "eq")
    eq_name = scheme.basics[scheme.identity_index]
    pairs = list(itertools.combinations(range(k), 2))
    clauses = []
    for i, j in pairs:
        for l, m in pairs:
            clauses.append(Or(Not(Atom(i, j, eq_name)), Atom(l, m, eq_name)))
    return And(*clauses)


# ---------------------------------------------------------------------------
# hitting set


@dataclass(frozen=True)
class HittingSetInstance:
    universe: tuple[str, ...]
    family: tuple[frozenset, ...]
    k: int = 0

    def __post_init__(self) -> None:
        uni = set(self.universe)
        for f in self.family:
            if not f:
                raise ValueError("family members must be nonempty")
            if not set(f) <= uni:
                raise ValueError(f"family member {sorted(f)} is not inside the universe")

    @classmethod
    def of(cls, universe: Iterable[str], family: Iterable[Iterable[str]], k: int = 0) -> "HittingSetInstance":
        return cls(tuple(universe), tuple(frozenset(f) for f in family), k)

    def to_json(self) -> dict:
        return {"universe": list(self.universe), "family": [sorted(f) for f in self.family], "k": self.k}

    @classmethod
    def from_json(cls, doc: dict) -> "HittingSetInstance":
        return cls.of(doc["universe"], doc["family"], int(doc.get("k", 0)))


def min_hitting_set(hs: HittingSetInstance) -> int:
    """Size of a smallest hitting set, by brute force."""
    for size in range(len(hs.universe) + 1):
        for cand in itertools.combinations(hs.universe, size):
            chosen = set(cand)
            if all(chosen & f for f in hs.family):
                return size
    raise ValueError("no hitting set exists")


def _hub_name(universe: Sequence[str]) -> str:
    name = "n"
    while name in universe:
        name += "_"
    return name


def hitting_set_reduction(hs: HittingSetInstance, with_delta: bool = False) -> tuple[Instance, int]:
    """One ``R_{|F|+1}`` constraint over ``F ∪ {n}`` per family member.

    With ``with_delta`` the relation table also registers delta, giving the
    extended language; no delta constraint is added.
    """
    scheme = load_scheme("eq")
    hub = _hub_name(hs.universe)
    relations = {}
    if with_delta:
        from .simpmap import delta_relation

        relations["delta"] = delta_relation(scheme)
    constraints = []
    for f in hs.family:
        arity = len(f) + 1
        name = f"R{arity}"
        relations.setdefault(name, build_rk(arity, scheme))
        constraints.append(Constraint(name, tuple(sorted(f)) + (hub,)))
    variables = tuple(hs.universe) + (hub,)
    return Instance(scheme, variables, relations, tuple(constraints)), hs.k


# ---------------------------------------------------------------------------
# edge partition into triangles


@dataclass(frozen=True)
class Graph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        seen = set()
        known = set(self.vertices)
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if u not in known or v not in known:
                raise ValueError(f"edge ({u}, {v}) uses an unknown vertex")
            key = frozenset((u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add(key)

    @classmethod
    def of(cls, vertices: Iterable[str], edges: Iterable[Sequence[str]]) -> "Graph":
        return cls(tuple(vertices), tuple(tuple(sorted(e)) for e in edges))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        vs = [f"v{i}" for i in range(n)]
        return cls.of(vs, itertools.combinations(vs, 2))

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, doc: dict) -> "Graph":
        return cls.of(doc["vertices"], doc["edges"])


EDGE_RELATION = "PP|PPi"
FILLER_RELATION = "PP"


def edge_partition_reduction(g: Graph) -> tuple[Instance, int, int]:
    """RCC5 instance with ``(PP|PPi)(x, y)`` per edge; returns ``(I, r=3, k=|E|/3)``.

    ``PP|PPi`` lies outside the tractable target fragment, while the
    registered filler ``PP`` lies inside it and is never used.
    """
    if len(g.edges) % 3:
        raise BadEdgeCount(f"{len(g.edges)} edges is not divisible by 3")
    scheme = load_scheme("rcc5")
    relations = {
        EDGE_RELATION: UnionRel(scheme, scheme.mask_of(EDGE_RELATION.split("|"))),
        FILLER_RELATION: UnionRel(scheme, scheme.mask_of([FILLER_RELATION])),
    }
    constraints = tuple(Constraint(EDGE_RELATION, e) for e in g.edges)
    return Instance(scheme, g.vertices, relations, constraints), 3, len(g.edges) // 3


def triangle_partition_exists(g: Graph) -> bool:
    """Exact cover of the edge set by edge-disjoint triangles, by backtracking."""
    if len(g.edges) % 3:
        return False
    adj = {v: set() for v in g.vertices}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    remaining = {frozenset(e) for e in g.edges}

    def solve() -> bool:
        if not remaining:
            return True
        edge = min(remaining, key=lambda e: sorted(e))
        u, v = sorted(edge)
        for w in sorted(adj[u] & adj[v]):
            tri = {edge, frozenset((u, w)), frozenset((v, w))}
            if tri <= remaining:
                remaining.difference_update(tri)
                if solve():
                    return True
                remaining.update(tri)
        return False

    return solve()


def all_graphs(n: int) -> Iterable[Graph]:
    """Every labeled simple graph on vertices ``v0..v{n-1}``."""
    vs = [f"v{i}" for i in range(n)]
    pairs = list(itertools.combinations(vs, 2))
    for mask in range(1 << len(pairs)):
        yield Graph.of(vs, [p for b, p in enumerate(pairs) if mask >> b & 1])


# ---------------------------------------------------------------------------
# planted doors


@dataclass(frozen=True)
class DoorSpec:
    """What to plant.

    ``kind`` is ``"backdoor"`` or ``"sidedoor"``.  ``door_menu`` lists the
    relations placed on door pairs; ``base_menu`` those placed, with
    probability ``density``, on every other pair.  Door pairs or sets may be
    fixed explicitly; otherwise ``size`` random pairs are drawn (backdoor)
    or consecutive triples are used (sidedoor).
    """

    kind: str
    door_menu: tuple[str, ...] = ()
    base_menu: tuple[str, ...] = ()
    density: float = 0.5
    size: int = 2
    pairs: tuple[tuple[int, int], ...] | None = None
    sets: tuple[tuple[int, ...], ...] | None = None
    radius: int = 3


def _var_names(n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"x{i:0{width}d}" for i in range(n)]


def default_menus(scheme: PartitionScheme, kind: str) -> tuple[list[str], list[str]]:
    if scheme.name == "rcc5" and kind == "sidedoor":
        from .branchmap import GAMMA_PRIME_EXCLUDED, rcc5_gamma_prime

        base = [n for n in sorted(rcc5_gamma_prime()) if n != "EMPTY"]
        return list(GAMMA_PRIME_EXCLUDED), base
    basics = list(basic_relations(scheme))
    unions = [n for n, r in all_unions(scheme).items() if bin(r.mask).count("1") > 1]
    return unions, basics


def generate_planted(
    scheme: PartitionScheme | str, n: int, spec: DoorSpec, seed: int
) -> tuple[Instance, object]:
    """Random binary instance with a planted backdoor or sidedoor.

    Returns the instance and the planted door (a Backdoor or Sidedoor).
    """
    from .backdoor import Backdoor
    from .sidedoor import Sidedoor

    scheme = load_scheme(scheme)
    rng = random.Random(seed)
    names = _var_names(n)
    door_menu, base_menu = default_menus(scheme, spec.kind)
    door_menu = list(spec.door_menu) or door_menu
    base_menu = list(spec.base_menu) or base_menu
    unions = all_unions(scheme, include_empty=True)
    for name in door_menu + base_menu:
        if name not in unions:
            raise SpecInfeasible(f"relation {name!r} is not a union of {scheme.name} basics")
    if not door_menu:
        raise SpecInfeasible("door menu is empty")
    all_pairs = list(itertools.combinations(range(n), 2))

    if spec.kind == "backdoor":
        if spec.pairs is not None:
            door_pairs = sorted(tuple(sorted(p)) for p in spec.pairs)
            if any(not (0 <= i < n and 0 <= j < n) or i == j for i, j in door_pairs):
                raise SpecInfeasible("door pair out of range")
        else:
            if spec.size > len(all_pairs):
                raise SpecInfeasible(f"cannot plant {spec.size} pairs on {n} variables")
            door_pairs = sorted(rng.sample(all_pairs, spec.size))
        inside = set(door_pairs)
        door = Backdoor.of((names[i], names[j]) for i, j in door_pairs)
    elif spec.kind == "sidedoor":
        if spec.sets is not None:
            sets = [tuple(sorted(s)) for s in spec.sets]
        else:
            if n % spec.radius:
                raise SpecInfeasible(f"n = {n} is not divisible by the radius {spec.radius}")
            sets = [tuple(range(i, i + spec.radius)) for i in range(0, n, spec.radius)]
        for s in sets:
            if len(s) > spec.radius or any(not 0 <= v < n for v in s):
                raise SpecInfeasible(f"bad sidedoor set {s}")
        inside = {p for s in sets for p in itertools.combinations(s, 2)}
        door = Sidedoor.of(spec.radius, [[names[v] for v in s] for s in sets])
    else:
        raise SpecInfeasible(f"unknown door kind {spec.kind!r}")

    relations = {}
    constraints = []
    for i, j in all_pairs:
        if (i, j) in inside:
            name = rng.choice(door_menu)
        elif base_menu and rng.random() < spec.density:
            name = rng.choice(base_menu)
        else:
            continue
        relations[name] = unions[name]
        constraints.append(Constraint(name, (names[i], names[j])))
    return Instance(scheme, tuple(names), relations, tuple(constraints)), door


def sidedoor_two_family(n: int, seed: int, density: float = 0.5) -> tuple[Instance, object]:
    """Triangles ``x_{3k}, x_{3k+1}, x_{3k+2}`` carry relations outside the
    tractable fragment, all other pairs relations inside it."""
    return generate_planted("rcc5", n, DoorSpec("sidedoor", density=density, radius=3), seed)
