"""Branching maps: small source instances split into target-language branches.

A branching map with radius ``r`` sends every instance on at most ``r``
variables to a list of target-language instances on the same variables
whose solution sets cover the original exactly.  Maps are synthesized
lazily from positive DNF definitions of the non-target relations: one
non-target constraint at a time is replaced by each clause of its
definition, and branches the oracle refutes are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .algebra import (
    And,
    Atom,
    Not,
    Or,
    PartitionScheme,
    Relation,
    UnionRel,
    all_unions,
    basic_relations,
    eliminate_negation,
    load_scheme,
)
from .errors import (
    MissingDefinition,
    NegationInDefinition,
    ParseError,
    RadiusExceeded,
    RadiusTooSmall,
    UnknownRelation,
)
from .model import Constraint, Instance
from .oracle import certificate_set, is_satisfiable

DefAtom = tuple[str, int, int]
Definitions = dict[str, list[list[DefAtom]]]
SlotConstraint = tuple[str, tuple[int, ...]]
Key = tuple[int, tuple[SlotConstraint, ...]]


def _has_negation(formula) -> bool:
    if isinstance(formula, Not):
        return True
    if isinstance(formula, (And, Or)):
        return any(_has_negation(a) for a in formula.args)
    return False


def parse_definitions(doc: Mapping, targets: Mapping[str, Relation]) -> Definitions:
    """Definition file contents to clause lists, rejecting negated atoms."""
    defs: Definitions = {}
    for name, clauses in doc.items():
        if not isinstance(clauses, list):
            raise ParseError("expected a list of clauses", name)
        parsed = []
        for clause in clauses:
            atoms = []
            for atom in clause:
                if isinstance(atom, Mapping) and "not" in atom:
                    raise NegationInDefinition(f"definition of {name!r} contains a negated atom")
                t, i, j = atom
                t = str(t)
                if t not in targets:
                    if t.startswith(("¬", "~", "not ")) or (t.startswith("!") and t != "!="):
                        raise NegationInDefinition(f"definition of {name!r} uses negated atom {t!r}")
                    raise UnknownRelation(f"definition of {name!r} uses unknown target {t!r}")
                atoms.append((t, int(i), int(j)))
            parsed.append(atoms)
        defs[name] = parsed
    return defs


@dataclass
class BranchingMap:
    """Lazily synthesized branching map from ``source`` to ``targets``."""

    scheme: PartitionScheme
    radius: int
    source: dict[str, Relation]
    targets: dict[str, Relation]
    definitions: Definitions
    provenance: str = "synthesized"
    memo: dict[Key, list[tuple[SlotConstraint, ...]]] = field(default_factory=dict)

    @property
    def branching_factor(self) -> int:
        """Largest post-pruning branch list over the keys visited so far."""
        return max((len(v) for v in self.memo.values()), default=1)

    def is_target(self, name: str) -> bool:
        return name in self.targets

    # -- key handling

    def _key(self, local: Instance) -> tuple[Key, list[str]]:
        names = sorted(local.variables)
        slot = {v: i for i, v in enumerate(names)}
        items = set()
        for c in local.constraints:
            if c.rel not in self.targets and c.rel not in self.definitions:
                raise MissingDefinition(f"no definition for non-target relation {c.rel!r}")
            items.add((c.rel, tuple(slot[v] for v in c.scope)))
        return (len(names), tuple(sorted(items))), names

    def _relation(self, name: str) -> Relation:
        rel = self.targets.get(name)
        if rel is None:
            rel = self.source[name]
        return rel

    def key_instance(self, key: Key) -> Instance:
        n, items = key
        names = [f"x{i + 1}" for i in range(n)]
        relations = {rel: self._relation(rel) for rel, _ in items}
        constraints = tuple(Constraint(rel, tuple(names[s] for s in slots)) for rel, slots in items)
        return Instance(self.scheme, tuple(names), relations, constraints)

    def _branch_instance(self, n: int, branch: Sequence[SlotConstraint], names: Sequence[str]) -> Instance:
        relations = {rel: self.targets[rel] for rel, _ in branch}
        constraints = tuple(Constraint(rel, tuple(names[s] for s in slots)) for rel, slots in branch)
        return Instance(self.scheme, tuple(names), relations, constraints)

    # -- synthesis

    def _diagonal(self, rel: str, s: int, t: int):
        """Truth value of a target atom on one variable: True, False or None (keep)."""
        target = self.targets[rel]
        ident = self.scheme.identity_index
        if s != t or ident is None or not isinstance(target, UnionRel):
            return None
        return bool(target.mask >> ident & 1)

    def _expand(self, key: Key) -> list[tuple[SlotConstraint, ...]]:
        n, items = key
        done: list[tuple[SlotConstraint, ...]] = []
        stack: list[tuple[list[SlotConstraint], frozenset]] = [
            (list(items), frozenset())
        ]
        # depth-first so that branch order follows clause order
        while stack:
            pending, fixed = stack.pop()
            idx = next((i for i, (rel, _) in enumerate(pending) if rel not in self.targets), None)
            if idx is None:
                branch = frozenset(pending) | fixed
                done.append(tuple(sorted(branch)))
                continue
            rel, slots = pending[idx]
            rest = pending[:idx] + pending[idx + 1 :]
            children = []
            for clause in self.definitions[rel]:
                atoms = []
                alive = True
                for t, i, j in clause:
                    s, u = slots[i], slots[j]
                    truth = self._diagonal(t, s, u)
                    if truth is True:
                        continue
                    if truth is False:
                        alive = False
                        break
                    atoms.append((t, (s, u)))
                if alive:
                    children.append((rest + atoms, fixed))
            stack.extend(reversed(children))
        out: list[tuple[SlotConstraint, ...]] = []
        seen = set()
        names = [f"x{i + 1}" for i in range(n)]
        for branch in done:
            if branch in seen:
                continue
            seen.add(branch)
            if is_satisfiable(self._branch_instance(n, branch, names)):
                out.append(branch)
        return out

    def entry(self, key: Key) -> list[tuple[SlotConstraint, ...]]:
        if key not in self.memo:
            self.memo[key] = self._expand(key)
        return self.memo[key]

    def apply(self, local: Instance) -> list[Instance]:
        """Branches for a local instance on at most ``radius`` variables."""
        if len(local.variables) > self.radius:
            raise RadiusExceeded(f"{len(local.variables)} variables exceed radius {self.radius}")
        key, names = self._key(local)
        return [self._branch_instance(key[0], b, names) for b in self.entry(key)]

    def verify_entry(self, key: Key) -> bool:
        """Certificates of the key equal the union over its branches."""
        inst = self.key_instance(key)
        names = list(inst.variables)
        goal = certificate_set(inst)
        union: set = set()
        for b in self.entry(key):
            union |= certificate_set(self._branch_instance(key[0], b, names))
        return goal == union

    def dump(self) -> dict:
        """The memo table, with branches written as atom lists."""
        rows = []
        for key in sorted(self.memo):
            n, items = key
            rows.append(
                {
                    "variables": n,
                    "key": [[rel, list(slots)] for rel, slots in items],
                    "branches": [[[rel, list(slots)] for rel, slots in b] for b in self.memo[key]],
                }
            )
        return {
            "radius": self.radius,
            "scheme": self.scheme.name,
            "provenance": self.provenance,
            "branching_factor": self.branching_factor,
            "entries": rows,
        }


def synthesize(
    source: Mapping[str, Relation],
    targets: Mapping[str, Relation],
    radius: int,
    definitions: Mapping,
    scheme: PartitionScheme | str | None = None,
) -> BranchingMap:
    """Branching map from positive DNF definitions of the non-target relations."""
    if scheme is None:
        scheme = next(iter(targets.values())).scheme
    scheme = load_scheme(scheme)
    arity = max((r.arity for n, r in source.items() if n not in targets), default=0)
    if arity > radius:
        raise RadiusTooSmall(f"relation arity {arity} exceeds radius {radius}")
    defs: Definitions = {}
    for name, d in definitions.items():
        if isinstance(d, (Atom, Not, And, Or)):
            if _has_negation(d):
                raise NegationInDefinition(f"definition of {name!r} contains negation")
            dnf = eliminate_negation(d, scheme)
            defs[name] = [[(scheme.basics[b], i, j) for i, j, b in c] for c in dnf.clause_atoms()]
        else:
            defs.update(parse_definitions({name: d}, targets))
    for name in source:
        if name not in targets and name not in defs:
            raise MissingDefinition(f"no definition for non-target relation {name!r}")
    for name, clauses in defs.items():
        for clause in clauses:
            for t, _, _ in clause:
                if not isinstance(targets[t], UnionRel):
                    raise ParseError(f"definition atoms must use binary targets, got {t!r}", name)
    merged = dict(targets)
    for name, rel in source.items():
        merged.setdefault(name, rel)
    return BranchingMap(scheme, radius, merged, dict(targets), defs)


def synthesize_from_backdoor_triple(
    source: Mapping[str, Relation],
    targets: Mapping[str, Relation],
    scheme: PartitionScheme | str,
    radius: int,
) -> BranchingMap:
    """Branching map from S ∪ basics to T ∪ basics via JEPD definitions.

    Every source relation is already a positive DNF over basic atoms, so
    each clause becomes one branch.
    """
    scheme = load_scheme(scheme)
    arity = max((r.arity for r in source.values()), default=0)
    if radius < max(2, arity):
        raise RadiusTooSmall(f"radius {radius} is below max(2, {arity})")
    full_targets: dict[str, Relation] = dict(targets)
    for name, rel in basic_relations(scheme).items():
        full_targets.setdefault(name, rel)
    defs: Definitions = {}
    for name, rel in source.items():
        if name in full_targets:
            continue
        dnf = rel.as_dnf() if isinstance(rel, UnionRel) else eliminate_negation(rel, scheme)
        defs[name] = [[(scheme.basics[b], i, j) for i, j, b in clause] for clause in dnf.clause_atoms()]
    src = dict(source)
    return synthesize(src, full_targets, radius, defs, scheme)


def load_definitions(path: Union[str, Path], targets: Mapping[str, Relation]) -> Definitions:
    return parse_definitions(json.loads(Path(path).read_text()), targets)


# ---------------------------------------------------------------------------
# RCC5 built-ins

GAMMA_PRIME_EXCLUDED = ("PP|PPi", "DR|PP|PPi", "PP|PPi|EQ", "DR|PP|PPi|EQ")
LAMBDA = "DR|PO|PPi|EQ"


def rcc5_theta() -> dict[str, UnionRel]:
    """All 31 nonempty unions of RCC5 basics."""
    return all_unions(load_scheme("rcc5"))


def rcc5_gamma_prime() -> dict[str, UnionRel]:
    """The tractable fragment: unions minus the four excluded ones, plus EMPTY."""
    rels = all_unions(load_scheme("rcc5"), include_empty=True)
    for name in GAMMA_PRIME_EXCLUDED:
        del rels[name]
    return rels


def rcc5_split_definitions() -> Definitions:
    """``R = (R ∩ PP) ∨ (R ∩ λ)`` for every union outside the fragment."""
    scheme = load_scheme("rcc5")
    pp = scheme.mask_of(["PP"])
    lam = scheme.mask_of(LAMBDA.split("|"))
    defs: Definitions = {}
    for name in GAMMA_PRIME_EXCLUDED:
        mask = scheme.mask_of(name.split("|"))
        defs[name] = [
            [(scheme.union_name(mask & pp), 0, 1)],
            [(scheme.union_name(mask & lam), 0, 1)],
        ]
    return defs


def omega(radius: int) -> BranchingMap:
    """The RCC5 maps Ω₂ (radius 2) and Ω₃ (radius 3)."""
    bm = synthesize(rcc5_theta(), rcc5_gamma_prime(), radius, rcc5_split_definitions(), "rcc5")
    bm.provenance = "built-in"
    return bm


def delta_branch_map() -> BranchingMap:
    """Radius-3 map from ``{delta}`` to ``{=, !=}``."""
    from .simpmap import delta_relation

    scheme = load_scheme("eq")
    targets = basic_relations(scheme)
    bm = synthesize_from_backdoor_triple({"delta": delta_relation(scheme)}, targets, scheme, 3)
    bm.provenance = "built-in"
    return bm


BUILTIN_BRANCH_MAPS = ("omega2", "omega3", "delta")


def builtin_branch_map(name: str) -> BranchingMap:
    if name == "omega2":
        return omega(2)
    if name == "omega3":
        return omega(3)
    if name == "delta":
        return delta_branch_map()
    raise KeyError(f"unknown built-in branching map {name!r}; choose from {', '.join(BUILTIN_BRANCH_MAPS)}")


def triangle_keys(relations: Iterable[str]) -> list[Key]:
    """Fully constrained triangle keys ``R12(x1,x2), R23(x2,x3), R13(x1,x3)``."""
    rels = sorted(relations)
    out = []
    for r12 in rels:
        for r23 in rels:
            for r13 in rels:
                items = {(r12, (0, 1)), (r23, (1, 2)), (r13, (0, 2))}
                out.append((3, tuple(sorted(items))))
    return out
