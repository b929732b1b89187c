"""Backdoors: evaluation by branching over pair assignments, and detection.

A backdoor is a set B of variable pairs such that, for every consistent
assignment of basic relations to B, every constraint simplifies into the
target language.  Evaluation enumerates those assignments; detection runs
a bounded search tree that grows B one scope pair at a time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Iterable, Iterator, Sequence

from .algebra import PartitionScheme, UnionRel, bits, popcount
from .errors import NotABackdoor, UnknownVariable
from .model import Constraint, Instance, PairAssignment, merge_registries, pair_key
from .oracle import close_network, initial_network, is_satisfiable
from .simpmap import UNSAT, SimplificationMap, instantiate

TargetSolver = Callable[[Instance], bool]


@dataclass(frozen=True)
class Backdoor:
    pairs: tuple[tuple[str, str], ...]

    @classmethod
    def of(cls, pairs: Iterable[Sequence[str]]) -> "Backdoor":
        norm = set()
        for x, y in pairs:
            if x == y:
                raise ValueError(f"backdoor pair ({x}, {y}) is not a pair of distinct variables")
            norm.add(pair_key(x, y))
        return cls(tuple(sorted(norm)))

    @property
    def size(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def to_json(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs]}

    @classmethod
    def from_json(cls, doc: dict) -> "Backdoor":
        return cls.of(doc["pairs"])


def _check_pairs(instance: Instance, pairs: Iterable[tuple[str, str]]) -> None:
    known = instance.var_index
    for x, y in pairs:
        if x not in known or y not in known:
            raise UnknownVariable(f"backdoor pair ({x}, {y}) uses an undeclared variable")


class _AlphaEnumerator:
    """Consistent assignments to a list of pairs, via incremental a-closure."""

    def __init__(self, scheme: PartitionScheme, pairs: Sequence[tuple[str, str]], allowed=None):
        self.scheme = scheme
        self.pairs = list(pairs)
        names = sorted({v for p in self.pairs for v in p})
        self.pos = {v: i for i, v in enumerate(names)}
        self.n = len(names)
        self.allowed = allowed or {}
        self.pruned = 0

    def __iter__(self) -> Iterator[tuple[dict, bool]]:
        """Yield ``(assignment, complete)``; incomplete ones were pruned."""
        n = self.n
        net = initial_network(self.scheme, n)
        conv = self.scheme.converse_mask
        assignment: dict[tuple[str, str], int] = {}

        def rec(depth: int, cur: list[int]) -> Iterator[tuple[dict, bool]]:
            if depth == len(self.pairs):
                yield dict(assignment), True
                return
            x, y = self.pairs[depth]
            i, j = self.pos[x], self.pos[y]
            choices = self.allowed.get((x, y), self.scheme.full_mask)
            if choices is None:  # pair left unassigned
                yield from rec(depth + 1, cur)
                return
            for b in bits(choices):
                assignment[(x, y)] = b
                if not cur[i * n + j] >> b & 1:
                    self.pruned += 1
                    yield dict(assignment), False
                    del assignment[(x, y)]
                    continue
                child = list(cur)
                child[i * n + j] = 1 << b
                child[j * n + i] = conv(1 << b)
                if close_network(self.scheme, child, n, [(i, j)]):
                    yield from rec(depth + 1, child)
                else:
                    self.pruned += 1
                    yield dict(assignment), False
                del assignment[(x, y)]

        yield from rec(0, net)


def consistent_alphas(scheme: PartitionScheme, pairs: Sequence[tuple[str, str]]) -> Iterator[PairAssignment]:
    """Every consistent assignment of basics to ``pairs``."""
    for assignment, complete in _AlphaEnumerator(scheme, pairs):
        if complete:
            yield PairAssignment.of(scheme, assignment)


def _scope_pairs(c: Constraint) -> list[tuple[str, str]]:
    distinct = list(dict.fromkeys(c.scope))
    out = []
    for i, x in enumerate(distinct):
        for y in distinct[i + 1 :]:
            p = pair_key(x, y)
            if p not in out:
                out.append(p)
    return out


def first_violation(
    instance: Instance, pairs: Iterable[tuple[str, str]], smap: SimplificationMap
) -> tuple[PairAssignment, Constraint] | None:
    """First constraint (in input order) with a consistent alpha leaving Σ undefined.

    Only the alpha values on the constraint's own scope pairs matter, and
    every consistent fragment on them extends to a consistent assignment
    of the whole backdoor.
    """
    bset = set(pairs)
    for c in instance.constraints:
        relevant = [p for p in _scope_pairs(c) if p in bset]
        for alpha in consistent_alphas(instance.scheme, relevant):
            if smap.lookup_formula(instance, c, alpha) is None:
                return alpha, c
    return None


def validate_backdoor(
    instance: Instance, backdoor: Backdoor | Iterable[Sequence[str]], smap: SimplificationMap
) -> tuple[bool, tuple[PairAssignment, Constraint] | None]:
    """Check the backdoor definition; on failure return a witness (alpha, constraint)."""
    bd = backdoor if isinstance(backdoor, Backdoor) else Backdoor.of(backdoor)
    _check_pairs(instance, bd.pairs)
    witness = first_violation(instance, bd.pairs, smap)
    return witness is None, witness


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class EvalResult:
    satisfiable: bool
    branches: int  # complete consistent alphas handed to the target solver
    inconsistent: int  # partial alphas cut by a-closure
    bound: int
    witness: PairAssignment | None = None
    trace: list[str] = field(default_factory=list)

    @property
    def answer(self) -> str:
        return "SAT" if self.satisfiable else "UNSAT"


def _translate(
    instance: Instance, alpha: PairAssignment, smap: SimplificationMap
) -> Instance | None:
    """``I|alpha``; None when some constraint simplifies to UNSAT."""
    targets = smap.target_relations()
    constraints: list[Constraint] = []
    registries = []
    for c in instance.constraints:
        formula = smap.lookup_formula(instance, c, alpha)
        if formula is None:
            raise NotABackdoor(alpha.render(), str(c))
        if formula == UNSAT:
            return None
        local = instantiate(formula, instance.scheme, targets, list(dict.fromkeys(c.scope)))
        registries.append(local.relations)
        constraints.extend(local.constraints)
    relations = merge_registries(*registries) if registries else {}
    return Instance(instance.scheme, instance.variables, relations, tuple(dict.fromkeys(constraints)))


def _allowed_masks(instance: Instance, pairs: Sequence[tuple[str, str]]) -> dict:
    """Per backdoor pair, basics not excluded by union constraints on it.

    Pairs whose constraints are all trivial (or absent) and which appear in
    no wider constraint are left unassigned (value None).
    """
    scheme = instance.scheme
    masks = {p: scheme.full_mask for p in pairs}
    touched = set()
    for c in instance.constraints:
        rel = instance.relation(c)
        if isinstance(rel, UnionRel) and c.scope[0] != c.scope[1]:
            x, y = c.scope
            p = pair_key(x, y)
            if p in masks:
                mask = rel.mask if (x, y) == p else scheme.converse_mask(rel.mask)
                masks[p] &= mask
        else:
            touched.update(_scope_pairs(c))
    out = {}
    for p, mask in masks.items():
        if mask == scheme.full_mask and p not in touched:
            out[p] = None
        else:
            out[p] = mask
    return out


def evaluate(
    instance: Instance,
    backdoor: Backdoor | Iterable[Sequence[str]],
    smap: SimplificationMap,
    target_solver: TargetSolver | None = None,
    skip_trivial: bool = False,
    trace: bool = False,
) -> EvalResult:
    """Decide ``instance`` by branching over consistent alphas on the backdoor."""
    bd = backdoor if isinstance(backdoor, Backdoor) else Backdoor.of(backdoor)
    _check_pairs(instance, bd.pairs)
    solver = target_solver or is_satisfiable
    scheme = instance.scheme
    allowed = _allowed_masks(instance, bd.pairs) if skip_trivial else None
    if allowed is None:
        bound = scheme.m ** bd.size
    else:
        bound = 1
        for mask in allowed.values():
            bound *= 1 if mask is None else popcount(mask)
    enum = _AlphaEnumerator(scheme, bd.pairs, allowed)
    result = EvalResult(False, 0, 0, bound)
    for assignment, complete in enum:
        alpha = PairAssignment.of(scheme, assignment)
        if not complete:
            result.inconsistent += 1
            if trace:
                result.trace.append(f"alpha={alpha.render()} consistent=false result=UNSAT")
            continue
        result.branches += 1
        translated = _translate(instance, alpha, smap)
        sat = translated is not None and solver(translated)
        if trace:
            result.trace.append(f"alpha={alpha.render()} consistent=true result={'SAT' if sat else 'UNSAT'}")
        if sat:
            result.satisfiable = True
            result.witness = alpha
            break
    assert result.branches <= bound, f"branch count {result.branches} exceeds bound {bound}"
    return result


# ---------------------------------------------------------------------------
# detection


@dataclass
class DetectResult:
    backdoor: Backdoor | None
    nodes: int
    bound: int

    @property
    def found(self) -> bool:
        return self.backdoor is not None


def node_bound(max_arity: int, k: int) -> int:
    """Search-tree size bound ``C(a,2)^(k+1)`` with the base floored at 2."""
    return max(comb(max_arity, 2), 2) ** (k + 1)


def detect(instance: Instance, k: int, smap: SimplificationMap) -> DetectResult:
    """A backdoor of size at most ``k``, or None, by bounded search tree."""
    if k < 0:
        raise ValueError("k must be non-negative")
    bound = node_bound(instance.max_arity, k)
    nodes = 0

    def node(current: tuple[tuple[str, str], ...]) -> tuple[tuple[str, str], ...] | None:
        nonlocal nodes
        nodes += 1
        violation = first_violation(instance, current, smap)
        if violation is None:
            return current
        if len(current) >= k:
            return None
        _, c = violation
        for p in _scope_pairs(c):
            if p in current:
                continue
            found = node(current + (p,))
            if found is not None:
                return found
        return None

    found = node(())
    assert nodes <= bound, f"search tree used {nodes} nodes, bound {bound}"
    return DetectResult(Backdoor.of(found) if found is not None else None, nodes, bound)


def minimum_backdoor(instance: Instance, smap: SimplificationMap, limit: int | None = None) -> DetectResult:
    """Smallest backdoor found by running :func:`detect` with k = 0, 1, ..."""
    limit = len(instance.variables) ** 2 if limit is None else limit
    last = None
    for k in range(limit + 1):
        last = detect(instance, k, smap)
        if last.found:
            return last
    return last


def shrink(instance: Instance, backdoor: Backdoor, smap: SimplificationMap) -> Backdoor:
    """Greedily drop pairs while the remainder still validates."""
    pairs = list(backdoor.pairs)
    for p in list(pairs):
        trial = [q for q in pairs if q != p]
        if first_violation(instance, trial, smap) is None:
            pairs = trial
    return Backdoor.of(pairs)


def brute_force_backdoor_exists(instance: Instance, k: int, smap: SimplificationMap) -> Backdoor | None:
    """Try every set of at most ``k`` variable pairs, smallest first."""
    pairs = list(itertools.combinations(sorted(instance.variables), 2))
    for size in range(k + 1):
        for subset in itertools.combinations(pairs, size):
            if first_violation(instance, subset, smap) is None:
                return Backdoor.of(subset)
    return None
