"""Partition schemes and the relations built on top of them.

A partition scheme is a finite set of jointly exhaustive, pairwise disjoint
binary *basic* relations that contains equality and is closed under
converse.  Everything else in the package talks about relations as sets of
basics:

* :class:`UnionRel` is a binary relation given by a bit-set over the basics.
* :class:`DnfRel` is a k-ary relation given as a positive DNF whose atoms are
  basic relations between two argument positions.

Basic indices follow the order of ``PartitionScheme.basics``; bit ``b`` of a
mask stands for basic ``b``.
"""

from __future__ import annotations

import functools
import itertools
import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .errors import ArityCapExceeded, MalformedTable, UnknownScheme

DEFAULT_ARITY_CAP = 4

Atom3 = tuple[int, int, int]  # (position i, position j, basic index)
Clause = frozenset  # frozenset[Atom3]


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in increasing order."""
    b = 0
    while mask:
        if mask & 1:
            yield b
        mask >>= 1
        b += 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True, eq=False)
class PartitionScheme:
    """Basic relations with converse permutation and weak-composition table.

    ``identity_mask`` is the set of basics allowed on a diagonal pair
    ``(x, x)``.  For ordinary schemes it holds exactly one bit (the equality
    basic).  The ``finite:d`` schemes have one diagonal basic per domain value.
    """

    name: str
    basics: tuple[str, ...]
    identity_mask: int
    converse: tuple[int, ...]
    composition: tuple[tuple[int, ...], ...]
    aclosure_decides_basics: bool = True
    domain_tag: str = "custom"

    @property
    def m(self) -> int:
        return len(self.basics)

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    @property
    def identity_index(self) -> int | None:
        if popcount(self.identity_mask) == 1:
            return self.identity_mask.bit_length() - 1
        return None

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"{name!r} is not a basic relation of scheme {self.name!r}") from None

    @cached_property
    def _index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.basics)}

    def mask_of(self, names: Iterable[str]) -> int:
        mask = 0
        for n in names:
            mask |= 1 << self.index(n)
        return mask

    def names_of(self, mask: int) -> list[str]:
        return [self.basics[b] for b in bits(mask)]

    @cached_property
    def _converse_table(self) -> list[int]:
        table = [0] * (1 << self.m) if self.m <= 12 else None
        if table is None:
            return []
        for mask in range(1 << self.m):
            out = 0
            for b in bits(mask):
                out |= 1 << self.converse[b]
            table[mask] = out
        return table

    def converse_mask(self, mask: int) -> int:
        table = self._converse_table
        if table:
            return table[mask]
        out = 0
        for b in bits(mask):
            out |= 1 << self.converse[b]
        return out

    @cached_property
    def _compose_table(self) -> list[list[int]] | None:
        if self.m > 6:
            return None
        size = 1 << self.m
        table = [[0] * size for _ in range(size)]
        for a in range(1, size):
            for b in range(1, size):
                table[a][b] = self._compose_slow(a, b)
        return table

    def _compose_slow(self, a: int, b: int) -> int:
        out = 0
        for i in bits(a):
            row = self.composition[i]
            for j in bits(b):
                out |= row[j]
        return out

    @cached_property
    def _compose_memo(self) -> dict[tuple[int, int], int]:
        return {}

    def compose_mask(self, a: int, b: int) -> int:
        """Weak composition lifted to unions of basics."""
        table = self._compose_table
        if table is not None:
            return table[a][b]
        memo = self._compose_memo
        key = (a, b)
        out = memo.get(key)
        if out is None:
            out = memo[key] = self._compose_slow(a, b)
        return out

    def union_name(self, mask: int) -> str:
        """Canonical relation name for a union of basics."""
        if mask == 0:
            return "EMPTY"
        return "|".join(self.names_of(mask))

    def validate(self) -> None:
        """Check the partition-scheme table invariants.

        Raises :class:`MalformedTable` naming the first failing triple.
        """
        m = self.m
        if m < 1:
            raise MalformedTable("scheme has no basic relations")
        if len(set(self.basics)) != m:
            raise MalformedTable("basic relation names are not unique")
        if len(self.converse) != m or sorted(self.converse) != list(range(m)):
            raise MalformedTable("converse is not a permutation of the basics")
        if self.identity_mask == 0 or self.identity_mask > self.full_mask:
            raise MalformedTable("identity mask is empty or out of range")
        for b in range(m):
            if self.converse[self.converse[b]] != b:
                raise MalformedTable(f"converse is not an involution at {self.basics[b]}")
        if self.converse_mask(self.identity_mask) != self.identity_mask:
            raise MalformedTable("identity is not self-converse")
        if len(self.composition) != m or any(len(row) != m for row in self.composition):
            raise MalformedTable("composition table is not m x m")
        for b in range(m):
            one = 1 << b
            if self._compose_slow(self.identity_mask, one) != one:
                raise MalformedTable(f"identity law fails: (id, {self.basics[b]})")
            if self._compose_slow(one, self.identity_mask) != one:
                raise MalformedTable(f"identity law fails: ({self.basics[b]}, id)")
        for b1 in range(m):
            for b2 in range(m):
                lhs = self.composition[self.converse[b2]][self.converse[b1]]
                rhs = self.converse_mask(self.composition[b1][b2])
                if lhs != rhs:
                    raise MalformedTable(
                        "converse law fails for "
                        f"({self.basics[b1]}, {self.basics[b2]}): "
                        f"{self.names_of(lhs)} != {self.names_of(rhs)}"
                    )

    def to_json(self) -> dict:
        ident = self.names_of(self.identity_mask)
        return {
            "name": self.name,
            "domain_tag": self.domain_tag,
            "basics": list(self.basics),
            "identity": ident[0] if len(ident) == 1 else ident,
            "converse": {self.basics[b]: self.basics[c] for b, c in enumerate(self.converse)},
            "composition": {
                self.basics[a]: {
                    self.basics[b]: self.names_of(self.composition[a][b]) for b in range(self.m)
                }
                for a in range(self.m)
            },
            "aclosure_decides_basics": self.aclosure_decides_basics,
        }

    def __repr__(self) -> str:
        return f"PartitionScheme({self.name!r}, m={self.m})"


def scheme_from_dict(doc: dict, name: str | None = None) -> PartitionScheme:
    """Build and validate a scheme from the JSON table format."""
    try:
        basics = tuple(doc["basics"])
        index = {n: i for i, n in enumerate(basics)}
        ident = doc["identity"]
        ident_names = [ident] if isinstance(ident, str) else list(ident)
        identity_mask = 0
        for n in ident_names:
            identity_mask |= 1 << index[n]
        converse = tuple(index[doc["converse"][n]] for n in basics)
        comp_doc = doc["composition"]
        rows = []
        for a in basics:
            row = []
            for b in basics:
                if a not in comp_doc or b not in comp_doc[a]:
                    raise MalformedTable(f"composition entry ({a}, {b}) is missing")
                mask = 0
                for n in comp_doc[a][b]:
                    mask |= 1 << index[n]
                row.append(mask)
            rows.append(tuple(row))
        scheme = PartitionScheme(
            name=name or doc.get("name", "custom"),
            basics=basics,
            identity_mask=identity_mask,
            converse=converse,
            composition=tuple(rows),
            aclosure_decides_basics=bool(doc.get("aclosure_decides_basics", False)),
            domain_tag=doc.get("domain_tag", "custom"),
        )
    except KeyError as exc:
        raise MalformedTable(f"missing or unknown name in table: {exc}") from None
    scheme.validate()
    return scheme


def finite_scheme(d: int) -> PartitionScheme:
    """Singleton relations ``R_ij = {(i, j)}`` over the domain ``{1..d}``.

    Equality is the union of the diagonal basics ``R_ii``, kept as the
    identity mask.
    """
    if d < 1:
        raise UnknownScheme(f"finite:{d} needs d >= 1")
    pairs = [(i, j) for i in range(1, d + 1) for j in range(1, d + 1)]
    idx = {p: n for n, p in enumerate(pairs)}
    names = tuple(f"R{i}{j}" if d < 10 else f"R{i}_{j}" for i, j in pairs)
    converse = tuple(idx[(j, i)] for i, j in pairs)
    comp = tuple(
        tuple((1 << idx[(i, l)]) if j == k else 0 for (k, l) in pairs) for (i, j) in pairs
    )
    identity_mask = 0
    for i in range(1, d + 1):
        identity_mask |= 1 << idx[(i, i)]
    scheme = PartitionScheme(
        name=f"finite:{d}",
        basics=names,
        identity_mask=identity_mask,
        converse=converse,
        composition=comp,
        aclosure_decides_basics=True,
        domain_tag=f"finite({d})",
    )
    scheme.validate()
    return scheme


BUILTIN_SCHEMES = ("rcc5", "point", "eq")


@functools.lru_cache(maxsize=None)
def _builtin(name: str) -> PartitionScheme:
    text = resources.files("shortcut_csp").joinpath(f"schemes/{name}.json").read_text()
    return scheme_from_dict(json.loads(text), name=name)


def load_scheme(source: Union[str, Path, PartitionScheme]) -> PartitionScheme:
    """Resolve a scheme from a built-in name, ``finite:d``, or a table file."""
    if isinstance(source, PartitionScheme):
        return source
    text = str(source)
    if text in BUILTIN_SCHEMES:
        return _builtin(text)
    m = re.fullmatch(r"finite:(\d+)", text)
    if m:
        return _finite_cached(int(m.group(1)))
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        return scheme_from_dict(json.loads(path.read_text()))
    raise UnknownScheme(f"unknown scheme {text!r}")


@functools.lru_cache(maxsize=None)
def _finite_cached(d: int) -> PartitionScheme:
    return finite_scheme(d)


# ---------------------------------------------------------------------------
# relations


@dataclass(frozen=True)
class UnionRel:
    """Binary relation: a union of basic relations."""

    scheme: PartitionScheme = field(compare=False, repr=False)
    mask: int

    arity = 2

    def clause_atoms(self) -> tuple[tuple[Atom3, ...], ...]:
        return tuple(((0, 1, b),) for b in bits(self.mask))

    @property
    def name(self) -> str:
        return self.scheme.union_name(self.mask)

    def signature(self) -> str:
        return "u:" + self.name

    def to_json(self) -> dict:
        return {"arity": 2, "union": self.scheme.names_of(self.mask)}

    def holds(self, values: Sequence, basic_of) -> bool:
        return bool(self.mask >> basic_of(values[0], values[1]) & 1)

    def as_dnf(self) -> "DnfRel":
        return make_dnf(self.scheme, 2, [[a] for c in self.clause_atoms() for a in c])


@dataclass(frozen=True)
class DnfRel:
    """k-ary relation as a positive DNF over basic atoms.

    Clauses are frozensets of ``(i, j, b)`` with ``i <= j``; use
    :func:`make_dnf` to build normalized instances.  A relation with no
    clauses is unsatisfiable.
    """

    scheme: PartitionScheme = field(compare=False, repr=False)
    arity: int
    clauses: tuple[frozenset, ...]

    def clause_atoms(self) -> tuple[tuple[Atom3, ...], ...]:
        return tuple(tuple(sorted(c)) for c in self.clauses)

    def signature(self) -> str:
        parts = []
        for clause in self.clause_atoms():
            parts.append(
                "[" + ";".join(f"{i},{j},{self.scheme.basics[b]}" for i, j, b in clause) + "]"
            )
        return f"d{self.arity}:" + "|".join(parts)

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "dnf": [
                [[i, j, self.scheme.basics[b]] for i, j, b in clause]
                for clause in self.clause_atoms()
            ],
        }

    def holds(self, values: Sequence, basic_of) -> bool:
        for clause in self.clauses:
            if all(basic_of(values[i], values[j]) == b for i, j, b in clause):
                return True
        return False

    def as_union(self) -> UnionRel | None:
        """The equivalent :class:`UnionRel`, when the DNF is one."""
        if self.arity != 2:
            return None
        mask = 0
        for clause in self.clauses:
            if len(clause) != 1:
                return None
            (i, j, b), = clause
            if (i, j) != (0, 1):
                return None
            mask |= 1 << b
        return UnionRel(self.scheme, mask)


Relation = Union[UnionRel, DnfRel]


def _normalize_clause(scheme: PartitionScheme, atoms: Iterable[Atom3]) -> frozenset | None:
    """Orient atoms ``i <= j``; return None for a contradictory clause."""
    single_id = scheme.identity_index
    seen: dict[tuple[int, int], int] = {}
    out = set()
    for i, j, b in atoms:
        if i > j:
            i, j, b = j, i, scheme.converse[b]
        if i == j:
            if not scheme.identity_mask >> b & 1:
                return None
            if single_id is not None:
                continue
        prev = seen.get((i, j))
        if prev is not None and prev != b:
            return None
        seen[(i, j)] = b
        out.add((i, j, b))
    return frozenset(out)


def _clause_order(clause: frozenset) -> tuple:
    return (len(clause), sorted(clause))


def _minimize(clauses: Iterable[frozenset]) -> list[frozenset]:
    unique = sorted(set(clauses), key=_clause_order)
    kept: list[frozenset] = []
    for c in unique:
        if not any(k <= c for k in kept):
            kept.append(c)
    return kept


def make_dnf(scheme: PartitionScheme, arity: int, clauses: Iterable[Iterable[Atom3]]) -> DnfRel:
    """Normalize clauses: orient, drop contradictions, dedup, drop subsumed."""
    normalized = []
    for clause in clauses:
        atoms = list(clause)
        for i, j, _ in atoms:
            if not (0 <= i < arity and 0 <= j < arity):
                raise ValueError(f"atom position out of range for arity {arity}: {(i, j)}")
        nc = _normalize_clause(scheme, atoms)
        if nc is not None:
            normalized.append(nc)
    return DnfRel(scheme, arity, tuple(_minimize(normalized)))


def relation_from_json(scheme: PartitionScheme, doc: dict) -> Relation:
    arity = int(doc["arity"])
    if "union" in doc:
        if arity != 2:
            raise ValueError("union relations are binary")
        return UnionRel(scheme, scheme.mask_of(doc["union"]))
    if "dnf" in doc:
        clauses = [[(int(i), int(j), scheme.index(b)) for i, j, b in clause] for clause in doc["dnf"]]
        return make_dnf(scheme, arity, clauses)
    raise ValueError("relation needs a 'union' or 'dnf' field")


def basic_rel(scheme: PartitionScheme, name: str) -> UnionRel:
    return UnionRel(scheme, 1 << scheme.index(name))


def all_unions(scheme: PartitionScheme, include_empty: bool = False) -> dict[str, UnionRel]:
    """Every union of basics, keyed by canonical name."""
    start = 0 if include_empty else 1
    return {scheme.union_name(m): UnionRel(scheme, m) for m in range(start, 1 << scheme.m)}


def basic_relations(scheme: PartitionScheme) -> dict[str, UnionRel]:
    return {n: UnionRel(scheme, 1 << b) for b, n in enumerate(scheme.basics)}


# ---------------------------------------------------------------------------
# union algebra


def converse_rel(r: UnionRel) -> UnionRel:
    return UnionRel(r.scheme, r.scheme.converse_mask(r.mask))


def compose_union(a: UnionRel, b: UnionRel) -> UnionRel:
    if a.scheme is not b.scheme and a.scheme.name != b.scheme.name:
        raise ValueError("relations come from different schemes")
    return UnionRel(a.scheme, a.scheme.compose_mask(a.mask, b.mask))


def intersect(a: UnionRel, b: UnionRel) -> UnionRel:
    if a.scheme is not b.scheme and a.scheme.name != b.scheme.name:
        raise ValueError("relations come from different schemes")
    return UnionRel(a.scheme, a.mask & b.mask)


# ---------------------------------------------------------------------------
# quantifier-free formulas and negation elimination


@dataclass(frozen=True)
class Atom:
    """Basic relation ``basic`` between argument positions ``i`` and ``j``."""

    i: int
    j: int
    basic: str


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple

    def __init__(self, *args):
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Or:
    args: tuple

    def __init__(self, *args):
        object.__setattr__(self, "args", tuple(args))


Formula = Union[Atom, Not, And, Or]


def neq(i: int, j: int, scheme: PartitionScheme) -> Formula:
    """``x_i != x_j`` written with negation over the identity basics."""
    return Not(Or(*(Atom(i, j, n) for n in scheme.names_of(scheme.identity_mask))))


def eq(i: int, j: int, scheme: PartitionScheme) -> Formula:
    return Or(*(Atom(i, j, n) for n in scheme.names_of(scheme.identity_mask)))


def _positions(f: Formula) -> Iterator[int]:
    if isinstance(f, Atom):
        yield f.i
        yield f.j
    elif isinstance(f, Not):
        yield from _positions(f.arg)
    else:
        for a in f.args:
            yield from _positions(a)


def _nnf(f: Formula, scheme: PartitionScheme, negate: bool = False) -> Formula:
    if isinstance(f, Atom):
        if not negate:
            return f
        others = [n for n in scheme.basics if n != f.basic]
        return Or(*(Atom(f.i, f.j, n) for n in others))
    if isinstance(f, Not):
        return _nnf(f.arg, scheme, not negate)
    args = tuple(_nnf(a, scheme, negate) for a in f.args)
    if isinstance(f, And):
        return Or(*args) if negate else And(*args)
    return And(*args) if negate else Or(*args)


def _dnf_clauses(f: Formula, scheme: PartitionScheme) -> list[frozenset]:
    if isinstance(f, Atom):
        c = _normalize_clause(scheme, [(f.i, f.j, scheme.index(f.basic))])
        return [] if c is None else [c]
    if isinstance(f, Or):
        out: list[frozenset] = []
        for a in f.args:
            out.extend(_dnf_clauses(a, scheme))
        return _minimize(out)
    # And: fold the product, pruning contradictions at every step
    acc: list[frozenset] = [frozenset()]
    for a in f.args:
        alts = _dnf_clauses(a, scheme)
        nxt = []
        for c in acc:
            for alt in alts:
                merged = _normalize_clause(scheme, c | alt)
                if merged is not None:
                    nxt.append(merged)
        acc = _minimize(nxt)
        if not acc:
            break
    return acc


def eliminate_negation(
    formula: Formula | DnfRel,
    scheme: PartitionScheme,
    arity: int | None = None,
    cap: int = DEFAULT_ARITY_CAP,
) -> DnfRel:
    """Rewrite a quantifier-free formula over basic atoms as a positive DNF.

    Each negated atom becomes the disjunction of the remaining basics (the
    scheme is JEPD), and the result is multiplied out with contradictory and
    subsumed clauses removed.
    """
    if isinstance(formula, DnfRel):
        return make_dnf(scheme, formula.arity, formula.clauses)
    if arity is None:
        arity = max(_positions(formula), default=-1) + 1
    if arity > cap:
        raise ArityCapExceeded(f"arity {arity} exceeds cap {cap}")
    clauses = _dnf_clauses(_nnf(formula, scheme), scheme)
    return DnfRel(scheme, arity, tuple(clauses))


def dnf_product(scheme: PartitionScheme, arity: int, parts: Sequence[Sequence[Iterable[Atom3]]]) -> DnfRel:
    """Conjunction of DNFs given as clause lists, multiplied out."""
    acc: list[frozenset] = [frozenset()]
    for alts in parts:
        nalts = [c for c in (_normalize_clause(scheme, a) for a in alts) if c is not None]
        acc = _minimize(
            m for c in acc for alt in nalts if (m := _normalize_clause(scheme, c | alt)) is not None
        )
    return DnfRel(scheme, arity, tuple(acc))


def scope_pairs(k: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(k), 2))
