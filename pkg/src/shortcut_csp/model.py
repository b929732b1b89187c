"""CSP instances, partial pair assignments and the operators on them.

Variables are plain strings.  An :class:`Instance` carries its own relation
registry so that a constraint refers to a relation by name; the same
instance type is used for full problems, for local windows produced by
:func:`restrict`, and for the tiny instances built by
:func:`reduce_constraint`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .algebra import (
    DnfRel,
    PartitionScheme,
    Relation,
    UnionRel,
    load_scheme,
    relation_from_json,
)
from .errors import (
    ArityMismatch,
    InconsistentAlphaDiagonal,
    ParseError,
    RelationConflict,
    SchemeMismatch,
    ShortcutError,
    UnknownRelation,
    UnknownVariable,
)


@dataclass(frozen=True)
class Constraint:
    rel: str
    scope: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope", tuple(self.scope))

    def __str__(self) -> str:
        return f"{self.rel}({', '.join(self.scope)})"


@dataclass(frozen=True, eq=False)
class Instance:
    """A CSP instance ``(V, C)`` over a partition scheme.

    Use :meth:`build` to get a validated instance.  Constraint order is
    significant: detection and evaluation break ties by it.
    """

    scheme: PartitionScheme
    variables: tuple[str, ...]
    relations: Mapping[str, Relation]
    constraints: tuple[Constraint, ...]

    @classmethod
    def build(
        cls,
        scheme: PartitionScheme | str,
        variables: Iterable[str],
        relations: Mapping[str, Relation],
        constraints: Iterable[Constraint | tuple],
    ) -> "Instance":
        scheme = load_scheme(scheme)
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError("duplicate variable names")
        cons = tuple(c if isinstance(c, Constraint) else Constraint(c[0], tuple(c[1])) for c in constraints)
        inst = cls(scheme, variables, dict(relations), cons)
        inst.check()
        return inst

    def check(self) -> None:
        """Raise if a scope or relation reference is invalid."""
        known = self.var_index
        for c in self.constraints:
            rel = self.relations.get(c.rel)
            if rel is None:
                raise UnknownRelation(f"relation {c.rel!r} is not registered")
            if len(c.scope) != rel.arity:
                raise ArityMismatch(f"{c}: relation {c.rel!r} has arity {rel.arity}")
            for v in c.scope:
                if v not in known:
                    raise UnknownVariable(f"{c}: variable {v!r} is not declared")

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def relation(self, c: Constraint) -> Relation:
        return self.relations[c.rel]

    @property
    def max_arity(self) -> int:
        return max((self.relations[c.rel].arity for c in self.constraints), default=0)

    def with_constraints(self, constraints: Iterable[Constraint]) -> "Instance":
        return Instance(self.scheme, self.variables, self.relations, tuple(constraints))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.scheme.name == other.scheme.name
            and self.variables == other.variables
            and self.constraints == other.constraints
            and _registry_sig(self.relations) == _registry_sig(other.relations)
        )

    def __hash__(self) -> int:
        return hash((self.scheme.name, self.variables, self.constraints))

    def __repr__(self) -> str:
        body = ", ".join(str(c) for c in self.constraints)
        return f"Instance({self.scheme.name}, V={list(self.variables)}, C=[{body}])"


def _registry_sig(relations: Mapping[str, Relation]) -> dict[str, str]:
    return {name: rel.signature() for name, rel in relations.items()}


def pair_key(x: str, y: str) -> tuple[str, str]:
    return (x, y) if x <= y else (y, x)


@dataclass(frozen=True)
class PairAssignment:
    """Partial map alpha from variable pairs to basic indices.

    Entries are stored once per unordered pair with the lexicographically
    smaller variable first; the reverse orientation is read through the
    converse permutation.
    """

    scheme: PartitionScheme = field(compare=False, repr=False)
    entries: tuple[tuple[tuple[str, str], int], ...] = ()

    @classmethod
    def of(
        cls, scheme: PartitionScheme, mapping: Mapping[tuple[str, str], int | str] | Iterable = ()
    ) -> "PairAssignment":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        table: dict[tuple[str, str], int] = {}
        for (x, y), b in items:
            if isinstance(b, str):
                b = scheme.index(b)
            if x > y:
                x, y, b = y, x, scheme.converse[b]
            prev = table.get((x, y))
            if prev is not None and prev != b:
                raise ValueError(f"conflicting values for pair ({x}, {y})")
            table[(x, y)] = b
        return cls(scheme, tuple(sorted(table.items())))

    @cached_property
    def _table(self) -> dict[tuple[str, str], int]:
        return dict(self.entries)

    def get(self, x: str, y: str) -> int | None:
        if x <= y:
            return self._table.get((x, y))
        b = self._table.get((y, x))
        return None if b is None else self.scheme.converse[b]

    @property
    def domain(self) -> list[tuple[str, str]]:
        return [p for p, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[tuple[str, str], int]]:
        return iter(self.entries)

    def extend(self, x: str, y: str, b: int) -> "PairAssignment":
        return PairAssignment.of(self.scheme, list(self.entries) + [((x, y), b)])

    def render(self) -> str:
        return ",".join(f"{x}-{y}:{self.scheme.basics[b]}" for (x, y), b in self.entries)


def basic_relation_name(scheme: PartitionScheme, b: int, registry: Mapping[str, Relation]) -> tuple[str, UnionRel]:
    """Registry name for the single-basic relation ``b``, avoiding clashes."""
    rel = UnionRel(scheme, 1 << b)
    name = scheme.basics[b]
    existing = registry.get(name)
    if existing is None or existing.signature() == rel.signature():
        return name, rel
    return f"basic:{name}", rel


def reduce_constraint(instance: Instance, c: Constraint, alpha: PairAssignment) -> Instance:
    """``R(x1..xk)`` conjoined with the alpha atoms over its scope pairs.

    The result is a local instance whose variables are the distinct scope
    variables in order of first occurrence.
    """
    scheme = instance.scheme
    scope_vars = list(dict.fromkeys(c.scope))
    relations: dict[str, Relation] = {c.rel: instance.relation(c)}
    constraints = [c]
    for v in scope_vars:
        b = alpha.get(v, v)
        if b is not None and not scheme.identity_mask >> b & 1:
            raise InconsistentAlphaDiagonal(f"alpha({v}, {v}) = {scheme.basics[b]} is not an identity basic")
    for i, x in enumerate(scope_vars):
        for y in scope_vars[i + 1 :]:
            x0, y0 = pair_key(x, y)
            b = alpha.get(x0, y0)
            if b is None:
                continue
            name, rel = basic_relation_name(scheme, b, relations)
            relations[name] = rel
            constraints.append(Constraint(name, (x0, y0)))
    return Instance(scheme, tuple(scope_vars), relations, tuple(constraints))


def restrict(instance: Instance, subset: Iterable[str]) -> Instance:
    """``I[V']``: the constraints whose scope lies inside ``V'``."""
    keep = set(subset)
    unknown = keep - set(instance.variables)
    if unknown:
        raise UnknownVariable(f"variables not in instance: {sorted(unknown)}")
    variables = tuple(v for v in instance.variables if v in keep)
    constraints = tuple(c for c in instance.constraints if set(c.scope) <= keep)
    return Instance(instance.scheme, variables, instance.relations, constraints)


def merge_registries(*registries: Mapping[str, Relation]) -> dict[str, Relation]:
    merged: dict[str, Relation] = {}
    for reg in registries:
        for name, rel in reg.items():
            prev = merged.get(name)
            if prev is not None and prev.signature() != rel.signature():
                raise RelationConflict(f"relation {name!r} has two different definitions")
            merged[name] = rel
    return merged


def splice(instance: Instance, local: Instance) -> Instance:
    """``I ⊕ I'``: drop constraints covered by ``V'`` and append those of ``I'``."""
    if instance.scheme.name != local.scheme.name:
        raise SchemeMismatch(f"{instance.scheme.name} vs {local.scheme.name}")
    window = set(local.variables)
    unknown = window - set(instance.variables)
    if unknown:
        raise UnknownVariable(f"variables not in instance: {sorted(unknown)}")
    kept = [c for c in instance.constraints if not set(c.scope) <= window]
    relations = merge_registries(instance.relations, local.relations)
    return Instance(instance.scheme, instance.variables, relations, tuple(kept) + local.constraints)


def binary_instance(
    scheme: PartitionScheme | str,
    variables: Sequence[str],
    atoms: Iterable[tuple[str, str, str]],
) -> Instance:
    """Instance of union constraints given as ``(relation-name, x, y)``.

    Relation names are canonical union names such as ``"PP|EQ"`` and are
    registered on the fly.
    """
    scheme = load_scheme(scheme)
    relations: dict[str, Relation] = {}
    constraints = []
    for name, x, y in atoms:
        if name not in relations:
            mask = 0 if name == "EMPTY" else scheme.mask_of(name.split("|"))
            relations[name] = UnionRel(scheme, mask)
        constraints.append(Constraint(name, (x, y)))
    return Instance.build(scheme, variables, relations, constraints)


# ---------------------------------------------------------------------------
# file format


def _require(doc: Mapping, key: str, kind: type, where: str):
    if key not in doc:
        raise ParseError(f"missing key {key!r}", where or key)
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError(f"expected {kind.__name__}", f"{where}.{key}" if where else key)
    return value


def instance_from_dict(doc: Mapping) -> Instance:
    if not isinstance(doc, Mapping):
        raise ParseError("top level must be an object")
    try:
        scheme = load_scheme(_require(doc, "scheme", str, ""))
    except ShortcutError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), "scheme") from None
    rel_doc = _require(doc, "relations", dict, "")
    relations: dict[str, Relation] = {}
    for name, rdoc in rel_doc.items():
        where = f"relations.{name}"
        if not isinstance(rdoc, dict):
            raise ParseError("expected object", where)
        try:
            relations[name] = relation_from_json(scheme, rdoc)
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(str(exc), where) from None
    variables = _require(doc, "variables", list, "")
    if not all(isinstance(v, str) for v in variables):
        raise ParseError("variable names must be strings", "variables")
    if len(set(variables)) != len(variables):
        raise ParseError("duplicate variable names", "variables")
    declared = set(variables)
    constraints = []
    for n, cdoc in enumerate(_require(doc, "constraints", list, "")):
        where = f"constraints[{n}]"
        if not isinstance(cdoc, dict):
            raise ParseError("expected object", where)
        rel = _require(cdoc, "rel", str, where)
        scope = _require(cdoc, "scope", list, where)
        if rel not in relations:
            raise UnknownRelation(f"{where}: relation {rel!r} is not declared")
        if len(scope) != relations[rel].arity:
            raise ArityMismatch(f"{where}: scope length {len(scope)} != arity {relations[rel].arity}")
        for v in scope:
            if v not in declared:
                raise ParseError(f"undeclared variable {v!r}", f"{where}.scope")
        constraints.append(Constraint(rel, tuple(scope)))
    return Instance(scheme, tuple(variables), relations, tuple(constraints))


def instance_to_dict(instance: Instance) -> dict:
    return {
        "scheme": instance.scheme.name,
        "relations": {name: instance.relations[name].to_json() for name in sorted(instance.relations)},
        "variables": list(instance.variables),
        "constraints": [{"rel": c.rel, "scope": list(c.scope)} for c in instance.constraints],
    }


def parse_instance(source: Union[str, Path, Mapping]) -> Instance:
    """Read an instance from a path, a JSON string, or an already-parsed dict."""
    if isinstance(source, Mapping):
        return instance_from_dict(source)
    text = str(source)
    if not text.lstrip().startswith("{"):
        text = Path(text).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return instance_from_dict(doc)


def serialize_instance(instance: Instance) -> str:
    """Canonical JSON text (two-space indent, trailing newline)."""
    return json.dumps(instance_to_dict(instance), indent=2, ensure_ascii=False) + "\n"


def is_dnf(rel: Relation) -> bool:
    return isinstance(rel, DnfRel)
