"""Simplification maps: reduced constraints rewritten into a target language.

A *reduced constraint* is a constraint ``R(x1..xk)`` together with the
basic relations that a pair assignment alpha fixes between its scope
variables.  Its semantics depend only on the relation, on which scope
positions repeat, and on the alpha values between the distinct positions
(the *slots*), so a :class:`ReducedKey` records exactly that.

A map entry is one of

* a tuple of target atoms ``(T, i, j)`` over slots (an empty tuple is the
  trivially true formula),
* :data:`UNSAT` when the reduced constraint has no solution, or
* ``None`` when no conjunction of target atoms is equivalent.
"""

from __future__ import annotations

import itertools
import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .algebra import (
    DEFAULT_ARITY_CAP,
    DnfRel,
    PartitionScheme,
    Relation,
    UnionRel,
    all_unions,
    basic_relations,
    load_scheme,
    popcount,
    relation_from_json,
)
from .errors import (
    ArityCapExceeded,
    InconsistentAlphaDiagonal,
    MissingRelationFamily,
    NonBinaryTarget,
    ParseError,
)
from .model import Constraint, Instance, PairAssignment
from .oracle import certificate_set, enumerate_certificates

UNSAT = "UNSAT"
Formula = Union[tuple, str, None]
CACHE_ENV = "SHORTCUT_CSP_CACHE"


@dataclass(frozen=True)
class ReducedKey:
    rel: str
    arity: int
    pattern: tuple[int, ...]  # restricted growth string over scope positions
    fragment: tuple[tuple[int, int, int], ...]  # (slot s, slot t, basic), s < t

    @property
    def slots(self) -> int:
        return max(self.pattern, default=-1) + 1

    def text(self, scheme: PartitionScheme) -> str:
        pat = ".".join(str(p) for p in self.pattern)
        frag = ",".join(f"{s}-{t}:{scheme.basics[b]}" for s, t, b in self.fragment) or "-"
        return f"{self.rel}/{pat}/{frag}"

    @classmethod
    def parse(cls, text: str, scheme: PartitionScheme) -> "ReducedKey":
        try:
            rel, pat, frag = text.rsplit("/", 2)
            pattern = tuple(int(p) for p in pat.split("."))
            fragment = []
            if frag != "-":
                for part in frag.split(","):
                    st, name = part.split(":", 1)
                    s, t = st.split("-")
                    fragment.append((int(s), int(t), scheme.index(name)))
        except (ValueError, KeyError) as exc:
            raise ParseError(f"bad key {text!r}: {exc}", "key") from None
        return cls(rel, len(pattern), pattern, tuple(sorted(fragment)))


def slot_names(n: int) -> list[str]:
    return [f"s{i:02d}" for i in range(n)]


def make_key(rel_name: str, scope: Sequence[str], alpha: PairAssignment) -> tuple[ReducedKey, list[str]]:
    """Canonical key of ``rel_name(scope)`` under alpha, plus the slot variables."""
    scheme = alpha.scheme
    slot_of: dict[str, int] = {}
    pattern = []
    for v in scope:
        pattern.append(slot_of.setdefault(v, len(slot_of)))
    slot_vars = list(slot_of)
    for v in slot_vars:
        b = alpha.get(v, v)
        if b is not None and not scheme.identity_mask >> b & 1:
            raise InconsistentAlphaDiagonal(f"alpha({v}, {v}) = {scheme.basics[b]}")
    fragment = []
    for s, t in itertools.combinations(range(len(slot_vars)), 2):
        b = alpha.get(slot_vars[s], slot_vars[t])
        if b is not None:
            fragment.append((s, t, b))
    return ReducedKey(rel_name, len(scope), tuple(pattern), tuple(fragment)), slot_vars


def reduced_instance(scheme: PartitionScheme, key: ReducedKey, rel: Relation) -> Instance:
    """The reduced constraint of ``key`` over slot variables."""
    names = slot_names(key.slots)
    relations: dict[str, Relation] = {key.rel: rel}
    constraints = [Constraint(key.rel, tuple(names[p] for p in key.pattern))]
    for s, t, b in key.fragment:
        tag = f"alpha:{scheme.basics[b]}"
        relations[tag] = UnionRel(scheme, 1 << b)
        constraints.append(Constraint(tag, (names[s], names[t])))
    return Instance(scheme, tuple(names), relations, tuple(constraints))


def instantiate(
    formula: Formula,
    scheme: PartitionScheme,
    targets: Mapping[str, Relation],
    variables: Sequence[str],
) -> Instance | None:
    """Write a stored formula over concrete variables; None stays undefined."""
    if formula is None:
        return None
    if formula == UNSAT:
        empty = UnionRel(scheme, 0)
        v = variables[0]
        return Instance(scheme, tuple(variables), {"EMPTY": empty}, (Constraint("EMPTY", (v, v)),))
    relations: dict[str, Relation] = {}
    constraints = []
    for name, i, j in formula:
        relations[name] = targets[name]
        constraints.append(Constraint(name, (variables[i], variables[j])))
    return Instance(scheme, tuple(variables), relations, tuple(constraints))


def formula_to_json(formula: Formula):
    if formula is None or formula == UNSAT:
        return formula
    return [[name, i, j] for name, i, j in formula]


def formula_from_json(doc) -> Formula:
    if doc == UNSAT:
        return UNSAT
    if doc is None:
        return None
    return tuple((str(name), int(i), int(j)) for name, i, j in doc)


# ---------------------------------------------------------------------------
# synthesis


def _patterns(k: int) -> list[tuple[int, ...]]:
    out = []

    def rec(prefix: list[int], top: int) -> None:
        if len(prefix) == k:
            out.append(tuple(prefix))
            return
        for v in range(top + 2):
            rec(prefix + [v], max(top, v))

    rec([], -1)
    return out


def enumerate_keys(name: str, rel: Relation, scheme: PartitionScheme) -> list[ReducedKey]:
    """Every reduced key of one relation, in deterministic order."""
    keys = []
    for pattern in _patterns(rel.arity):
        d = max(pattern) + 1
        pairs = list(itertools.combinations(range(d), 2))
        for values in itertools.product([None] + list(range(scheme.m)), repeat=len(pairs)):
            frag = tuple((s, t, b) for (s, t), b in zip(pairs, values) if b is not None)
            keys.append(ReducedKey(name, rel.arity, pattern, frag))
    return keys


def _candidate_pairs(scheme: PartitionScheme, d: int) -> list[tuple[int, int]]:
    pairs = list(itertools.combinations(range(d), 2))
    if scheme.identity_index is None:
        pairs = [(s, s) for s in range(d)] + pairs
    return pairs


def _oriented_targets(scheme: PartitionScheme, targets: Mapping[str, UnionRel], diagonal: bool):
    """Each target usable on one pair: (mask, atom-maker).

    Forward orientations come first so ties resolve to ``T(s, t)``.
    """
    names = sorted(targets)
    if diagonal:
        return [(targets[n].mask & scheme.identity_mask, (n, False)) for n in names]
    forward = [(targets[n].mask, (n, False)) for n in names]
    flipped = [(scheme.converse_mask(targets[n].mask), (n, True)) for n in names]
    return forward + flipped


def _atom(s: int, t: int, how: tuple[str, bool]) -> tuple[str, int, int]:
    name, flipped = how
    return (name, t, s) if flipped else (name, s, t)


def _minimal_witness(options, projection: int, full: int) -> tuple[int, list]:
    """Smallest intersection of target masks covering ``projection``."""
    chosen = [(mask, how) for mask, how in options if mask & projection == projection]
    eff = full
    for mask, _ in chosen:
        eff &= mask
    if eff == full:
        return full, []
    # single atom hitting the minimum, else greedy pruning
    for mask, how in chosen:
        if mask == eff:
            return eff, [how]
    kept = list(chosen)
    for item in list(kept):
        rest = [x for x in kept if x is not item]
        m = full
        for mask, _ in rest:
            m &= mask
        if m == eff:
            kept = rest
    return eff, [how for _, how in kept]


def _projections(certs, scheme: PartitionScheme, names: list[str], pairs) -> dict:
    proj = {p: 0 for p in pairs}
    for cert in certs:
        lookup = cert.basic_of()
        for s, t in pairs:
            proj[(s, t)] |= 1 << lookup(names[s], names[t])
    return proj


def _formula_certs(formula, scheme, targets, names, cap):
    inst = instantiate(formula, scheme, targets, names)
    return certificate_set(inst, cap)


def synthesize_entry(
    scheme: PartitionScheme,
    key: ReducedKey,
    rel: Relation,
    targets: Mapping[str, UnionRel],
    exhaustive: bool = False,
    cap: int | None = None,
) -> Formula:
    """Compute one map entry by certificate comparison.

    The default route picks, per slot pair, the tightest intersection of
    target relations containing the pair's projection; a conjunction of
    binary target atoms is equivalent to the reduced constraint iff this
    particular one is.  ``exhaustive=True`` instead tries every combination
    of per-pair intersections and returns the first equivalent one.
    """
    local = reduced_instance(scheme, key, rel)
    names = list(local.variables)
    certs = enumerate_certificates(local, cap)
    if not certs:
        return UNSAT
    goal = frozenset(c.entries for c in certs)
    pairs = _candidate_pairs(scheme, len(names))
    if exhaustive:
        return _exhaustive_entry(scheme, pairs, targets, names, goal, cap)
    proj = _projections(certs, scheme, names, pairs)
    atoms = []
    for s, t in pairs:
        options = _oriented_targets(scheme, targets, s == t)
        full = scheme.identity_mask if s == t else scheme.full_mask
        _, witness = _minimal_witness(options, proj[(s, t)], full)
        atoms.extend(_atom(s, t, how) for how in witness)
    formula = tuple(atoms)
    if _formula_certs(formula, scheme, targets, names, cap) != goal:
        return None
    # drop atoms implied by the rest
    for atom in reversed(formula):
        trial = tuple(a for a in formula if a != atom)
        if _formula_certs(trial, scheme, targets, names, cap) == goal:
            formula = trial
    return formula


def _intersection_closure(options, full: int) -> list[tuple[int, tuple]]:
    """All masks reachable by intersecting target masks, with witnesses."""
    reached: dict[int, tuple] = {full: ()}
    frontier = [full]
    while frontier:
        nxt = []
        for base in frontier:
            for mask, how in options:
                m = base & mask
                if m not in reached:
                    reached[m] = reached[base] + (how,)
                    nxt.append(m)
        frontier = nxt
    return sorted(reached.items(), key=lambda kv: (len(kv[1]), -popcount(kv[0]), kv[0]))


def _exhaustive_entry(scheme, pairs, targets, names, goal, cap) -> Formula:
    per_pair = []
    for s, t in pairs:
        full = scheme.identity_mask if s == t else scheme.full_mask
        options = _oriented_targets(scheme, targets, s == t)
        per_pair.append([(s, t, how) for _, how in _intersection_closure(options, full)])
    for combo in itertools.product(*per_pair):
        formula = tuple(_atom(s, t, h) for s, t, hows in combo for h in hows)
        if _formula_certs(formula, scheme, targets, names, cap) == goal:
            return formula
    return None


def exhaustive_candidates(
    scheme: PartitionScheme, slots: int, targets: Mapping[str, UnionRel]
) -> Iterable[tuple]:
    """Every formula of the binary-atom candidate space over ``slots`` slots."""
    per_pair = []
    for s, t in _candidate_pairs(scheme, slots):
        full = scheme.identity_mask if s == t else scheme.full_mask
        options = _oriented_targets(scheme, targets, s == t)
        per_pair.append([(s, t, how) for _, how in _intersection_closure(options, full)])
    for combo in itertools.product(*per_pair):
        yield tuple(_atom(s, t, h) for s, t, hows in combo for h in hows)


# ---------------------------------------------------------------------------
# maps


class SimplificationMap:
    """Common interface: ``covers`` a relation and ``lookup`` a constraint."""

    scheme: PartitionScheme
    provenance: str = "computed"

    def covers(self, name: str, rel: Relation) -> bool:
        raise NotImplementedError

    def entry(self, key: ReducedKey, rel: Relation) -> Formula:
        raise NotImplementedError

    def target_relations(self) -> Mapping[str, Relation]:
        raise NotImplementedError

    def lookup(self, instance: Instance, c: Constraint, alpha: PairAssignment) -> Instance | None:
        """Local target instance equivalent to ``c`` reduced by alpha, or None."""
        rel = instance.relation(c)
        if not self.covers(c.rel, rel):
            raise MissingRelationFamily(f"map does not cover relation {c.rel!r}")
        key, slot_vars = make_key(c.rel, c.scope, alpha)
        formula = self.entry(key, rel)
        return instantiate(formula, self.scheme, self.target_relations(), slot_vars)

    def lookup_formula(self, instance: Instance, c: Constraint, alpha: PairAssignment) -> Formula:
        rel = instance.relation(c)
        if not self.covers(c.rel, rel):
            raise MissingRelationFamily(f"map does not cover relation {c.rel!r}")
        key, _ = make_key(c.rel, c.scope, alpha)
        return self.entry(key, rel)


@dataclass
class TableSimpMap(SimplificationMap):
    """Map for a finite source language, computed eagerly or on demand."""

    scheme: PartitionScheme
    source: dict[str, Relation]
    targets: dict[str, UnionRel]
    entries: dict[ReducedKey, Formula] = field(default_factory=dict)
    complete: bool = False
    provenance: str = "computed"
    cap: int = DEFAULT_ARITY_CAP

    def covers(self, name: str, rel: Relation) -> bool:
        known = self.source.get(name)
        return known is not None and known.signature() == rel.signature()

    def target_relations(self) -> Mapping[str, Relation]:
        return self.targets

    def entry(self, key: ReducedKey, rel: Relation) -> Formula:
        if key in self.entries:
            return self.entries[key]
        if self.complete:
            return None
        formula = synthesize_entry(self.scheme, key, self.source[key.rel], self.targets)
        self.entries[key] = formula
        return formula

    def fill(self) -> "TableSimpMap":
        for name in sorted(self.source):
            for key in enumerate_keys(name, self.source[name], self.scheme):
                self.entry(key, self.source[name])
        self.complete = True
        return self

    def defined_keys(self) -> list[ReducedKey]:
        return [k for k, f in self.entries.items() if f is not None]

    # persistence

    def to_json(self) -> dict:
        items = sorted(
            ((k.text(self.scheme), f) for k, f in self.entries.items() if f is not None),
            key=lambda kv: kv[0],
        )
        return {
            "header": {
                "S": {n: self.source[n].to_json() for n in sorted(self.source)},
                "T": {n: self.targets[n].to_json() for n in sorted(self.targets)},
                "scheme": self.scheme.name,
                "cap": self.cap,
                "provenance": self.provenance,
                "complete": self.complete,
            },
            "entries": [{"key": k, "formula": formula_to_json(f)} for k, f in items],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, doc: Mapping, verify: int = 100, seed: int = 0) -> "TableSimpMap":
        try:
            header = doc["header"]
            scheme = load_scheme(header["scheme"])
            source = {n: relation_from_json(scheme, r) for n, r in header["S"].items()}
            targets = {n: relation_from_json(scheme, r) for n, r in header["T"].items()}
            entries = {
                ReducedKey.parse(e["key"], scheme): formula_from_json(e["formula"]) for e in doc["entries"]
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed map file: {exc}") from None
        for n, t in targets.items():
            if not isinstance(t, UnionRel):
                raise NonBinaryTarget(f"target {n!r} is not binary")
        smap = cls(
            scheme,
            source,
            targets,
            entries,
            complete=bool(header.get("complete", False)),
            provenance=header.get("provenance", "computed"),
            cap=int(header.get("cap", DEFAULT_ARITY_CAP)),
        )
        if verify:
            smap.verify_sample(verify, seed)
        return smap

    @classmethod
    def load(cls, path: Union[str, Path], verify: int = 100) -> "TableSimpMap":
        return cls.from_json(json.loads(Path(path).read_text()), verify=verify)

    def verify_entry(self, key: ReducedKey) -> bool:
        formula = self.entries.get(key)
        rel = self.source[key.rel]
        local = reduced_instance(self.scheme, key, rel)
        goal = certificate_set(local)
        if formula is None:
            return True
        if formula == UNSAT:
            return not goal
        return _formula_certs(formula, self.scheme, self.targets, list(local.variables), None) == goal

    def verify_sample(self, count: int = 100, seed: int = 0) -> None:
        keys = sorted(self.defined_keys(), key=lambda k: k.text(self.scheme))
        rng = random.Random(seed)
        sample = keys if len(keys) <= count else rng.sample(keys, count)
        for key in sample:
            if not self.verify_entry(key):
                raise ParseError(f"map entry {key.text(self.scheme)} fails the equivalence check", "entries")


def compute_simpmap(
    source: Mapping[str, Relation],
    targets: Mapping[str, Relation],
    scheme: PartitionScheme | str,
    cap: int = DEFAULT_ARITY_CAP,
    lazy: bool = False,
) -> TableSimpMap:
    """Simplification map from ``source`` to the binary ``targets``.

    Target relations are also treated as source relations, so constraints
    already in the target language map to themselves.
    """
    scheme = load_scheme(scheme)
    for name, rel in targets.items():
        if not isinstance(rel, UnionRel):
            raise NonBinaryTarget(f"target {name!r} has arity {rel.arity}; supply a map file instead")
    for name, rel in source.items():
        if rel.arity > cap:
            raise ArityCapExceeded(f"relation {name!r} has arity {rel.arity} > cap {cap}")
    merged = dict(source)
    for name, rel in targets.items():
        merged.setdefault(name, rel)
    smap = TableSimpMap(scheme, merged, dict(targets), cap=cap)
    return smap if lazy else smap.fill()


# ---------------------------------------------------------------------------
# the R_k family


def rk_arity(rel: Relation) -> int | None:
    """k when ``rel`` is the R_k gadget relation, else None."""
    if not isinstance(rel, DnfRel) or rel.arity < 2:
        return None
    from .gadgets import build_rk

    try:
        ref = build_rk(rel.arity, rel.scheme)
    except Exception:
        return None
    return rel.arity if ref.signature() == rel.signature() else None


@dataclass
class RkSimpMap(SimplificationMap):
    """Polynomial-time map for the R_k relations.

    Repeated scope variables count as identity pairs.  With only identity
    pairs fixed the relation collapses to an equality chain, with only
    non-identity pairs it becomes all-pairs disequality, and a mix is
    unsatisfiable.  With nothing fixed the entry is undefined.
    """

    scheme: PartitionScheme
    provenance: str = "built-in"

    def __post_init__(self) -> None:
        ident = self.scheme.identity_index
        if ident is None:
            raise MissingRelationFamily("the R_k map needs a scheme with a single identity basic")
        self.eq_name = self.scheme.basics[ident]
        self.neq_mask = self.scheme.full_mask & ~self.scheme.identity_mask
        self.neq_name = self.scheme.union_name(self.neq_mask)
        self._targets: dict[str, Relation] = {
            self.eq_name: UnionRel(self.scheme, self.scheme.identity_mask),
            self.neq_name: UnionRel(self.scheme, self.neq_mask),
        }
        for name, rel in basic_relations(self.scheme).items():
            self._targets.setdefault(name, rel)
        self._plain = TableSimpMap(self.scheme, dict(self._targets), dict(self._targets))
        self._rk_cache: dict[str, int | None] = {}

    def _k(self, rel: Relation) -> int | None:
        sig = rel.signature()
        if sig not in self._rk_cache:
            self._rk_cache[sig] = rk_arity(rel)
        return self._rk_cache[sig]

    def covers(self, name: str, rel: Relation) -> bool:
        return self._k(rel) is not None or self._plain.covers(name, rel)

    def target_relations(self) -> Mapping[str, Relation]:
        return self._targets

    def entry(self, key: ReducedKey, rel: Relation) -> Formula:
        if self._k(rel) is None:
            return self._plain.entry(key, rel)
        return rk_formula(self.scheme, key, self.eq_name, self.neq_name)


def rk_formula(scheme: PartitionScheme, key: ReducedKey, eq_name: str, neq_name: str) -> Formula:
    ident = scheme.identity_index
    d = key.slots
    repeated = d < len(key.pattern)
    has_id = repeated or any(b == ident for _, _, b in key.fragment)
    has_other = any(b != ident for _, _, b in key.fragment)
    if has_id and has_other:
        return UNSAT
    if has_id:
        return tuple((eq_name, 0, t) for t in range(1, d))
    if has_other:
        atoms = [(neq_name, s, t) for s, t in itertools.combinations(range(d), 2)]
        # basics finer than plain disequality stay as atoms
        atoms.extend(
            (scheme.basics[b], s, t) for s, t, b in key.fragment if scheme.names_of(1 << b) != [neq_name]
        )
        return tuple(atoms)
    return None


@dataclass
class CombinedSimpMap(SimplificationMap):
    """First member map that covers a relation answers for it."""

    maps: list[SimplificationMap]
    provenance: str = "built-in"

    def __post_init__(self) -> None:
        self.scheme = self.maps[0].scheme
        merged: dict[str, Relation] = {}
        for m in self.maps:
            merged.update(m.target_relations())
        self._targets = merged

    def _owner(self, name: str, rel: Relation) -> SimplificationMap | None:
        for m in self.maps:
            if m.covers(name, rel):
                return m
        return None

    def covers(self, name: str, rel: Relation) -> bool:
        return self._owner(name, rel) is not None

    def target_relations(self) -> Mapping[str, Relation]:
        return self._targets

    def entry(self, key: ReducedKey, rel: Relation) -> Formula:
        owner = self._owner(key.rel, rel)
        if owner is None:
            raise MissingRelationFamily(f"no member map covers {key.rel!r}")
        return owner.entry(key, rel)


# ---------------------------------------------------------------------------
# built-in maps


def delta_relation(scheme: PartitionScheme | None = None) -> DnfRel:
    """``(x = y and x != z) or (x != y and y = z)`` over the eq scheme."""
    from .algebra import make_dnf

    scheme = load_scheme(scheme or "eq")
    e, ne = scheme.index("="), scheme.index("!=")
    return make_dnf(scheme, 3, [[(0, 1, e), (0, 2, ne)], [(0, 1, ne), (1, 2, e)]])


def rcc5_basic_map() -> TableSimpMap:
    """Map from every union of RCC5 basics to the basics themselves."""
    scheme = load_scheme("rcc5")
    cached = _cache_load("rcc5-basic")
    if cached is not None:
        return cached
    smap = compute_simpmap(all_unions(scheme), basic_relations(scheme), scheme)
    smap.provenance = "built-in"
    _cache_store("rcc5-basic", smap)
    return smap


def delta_map() -> TableSimpMap:
    """Map from ``{delta, =, !=}`` to ``{=, !=}`` over the eq scheme."""
    scheme = load_scheme("eq")
    cached = _cache_load("delta")
    if cached is not None:
        return cached
    targets = basic_relations(scheme)
    smap = compute_simpmap({"delta": delta_relation(scheme)}, targets, scheme)
    smap.provenance = "built-in"
    _cache_store("delta", smap)
    return smap


def rk_map(scheme: PartitionScheme | str = "eq") -> RkSimpMap:
    return RkSimpMap(load_scheme(scheme))


BUILTIN_MAPS = ("rcc5-basic", "delta", "rk", "rk+delta")


def builtin_map(name: str) -> SimplificationMap:
    if name == "rcc5-basic":
        return rcc5_basic_map()
    if name == "delta":
        return delta_map()
    if name == "rk":
        return rk_map()
    if name == "rk+delta":
        return CombinedSimpMap([rk_map(), delta_map()])
    raise KeyError(f"unknown built-in map {name!r}; choose from {', '.join(BUILTIN_MAPS)}")


def _cache_dir() -> Path | None:
    path = os.environ.get(CACHE_ENV)
    return Path(path) if path else None


def _cache_load(name: str) -> TableSimpMap | None:
    directory = _cache_dir()
    if directory is None:
        return None
    path = directory / f"{name}.map.json"
    if not path.exists():
        return None
    return TableSimpMap.load(path)


def _cache_store(name: str, smap: TableSimpMap) -> None:
    directory = _cache_dir()
    if directory is None:
        return
    directory.mkdir(parents=True, exist_ok=True)
    tmp = directory / f".{name}.map.json.{os.getpid()}"
    tmp.write_text(smap.dumps())
    tmp.replace(directory / f"{name}.map.json")


def candidate_space_has_equivalent(
    scheme: PartitionScheme, key: ReducedKey, rel: Relation, targets: Mapping[str, UnionRel]
) -> bool:
    """Exhaustively search every binary-atom formula for an equivalent one."""
    local = reduced_instance(scheme, key, rel)
    names = list(local.variables)
    goal = certificate_set(local)
    for formula in exhaustive_candidates(scheme, len(names), targets):
        if _formula_certs(formula, scheme, targets, names, None) == goal:
            return True
    return False


def key_from_parts(
    rel: str, pattern: Sequence[int], fragment: Iterable[tuple[int, int, int]]
) -> ReducedKey:
    return ReducedKey(rel, len(pattern), tuple(pattern), tuple(sorted(fragment)))


def effective_masks(formula: tuple, scheme: PartitionScheme, targets: Mapping[str, UnionRel]) -> dict:
    """Per oriented slot pair, the mask the formula's atoms impose."""
    out: dict[tuple[int, int], int] = {}
    for name, i, j in formula:
        mask = targets[name].mask
        if i > j:
            i, j, mask = j, i, scheme.converse_mask(mask)
        out[(i, j)] = out.get((i, j), scheme.full_mask) & mask
    return out

