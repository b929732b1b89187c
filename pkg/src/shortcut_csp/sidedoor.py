"""Sidedoors: covering non-target constraints by small variable windows.

Evaluation picks a window, branches over the branching map's output for
the restricted instance, splices each branch back in and recurses on the
remaining windows.  Detection enumerates families of windows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Collection, Iterable, Sequence, Union

from .branchmap import BranchingMap
from .errors import NotASidedoor, RadiusMismatch, UnknownVariable
from .model import Constraint, Instance, restrict, splice
from .oracle import is_satisfiable

TargetTest = Union[Collection[str], Callable[[str], bool]]


def _target_test(targets: TargetTest) -> Callable[[str], bool]:
    if callable(targets):
        return targets
    names = frozenset(targets)
    return names.__contains__


@dataclass(frozen=True)
class Sidedoor:
    radius: int
    sets: tuple[tuple[str, ...], ...]

    @classmethod
    def of(cls, radius: int, sets: Iterable[Iterable[str]]) -> "Sidedoor":
        return cls(radius, tuple(tuple(sorted(set(s))) for s in sets))

    @property
    def size(self) -> int:
        return len(self.sets)

    def to_json(self) -> dict:
        return {"radius": self.radius, "sets": [list(s) for s in self.sets]}

    @classmethod
    def from_json(cls, doc: dict) -> "Sidedoor":
        return cls.of(int(doc["radius"]), doc["sets"])


def validate_sidedoor(
    instance: Instance, sidedoor: Sidedoor, targets: TargetTest
) -> tuple[bool, Constraint | None]:
    """Both sidedoor conditions; on failure the first uncovered constraint."""
    in_target = _target_test(targets)
    known = instance.var_index
    for s in sidedoor.sets:
        if len(s) > sidedoor.radius:
            return False, None
        for v in s:
            if v not in known:
                raise UnknownVariable(f"sidedoor set uses undeclared variable {v!r}")
    windows = [set(s) for s in sidedoor.sets]
    for c in instance.constraints:
        if in_target(c.rel):
            continue
        scope = set(c.scope)
        if not any(scope <= w for w in windows):
            return False, c
    return True, None


@dataclass
class SidedoorResult:
    satisfiable: bool
    leaves: int
    nodes: int
    bound: int
    factor: int
    trace: list[str] = field(default_factory=list)

    @property
    def answer(self) -> str:
        return "SAT" if self.satisfiable else "UNSAT"


def _pad(window: Sequence[str], variables: Sequence[str], radius: int) -> list[str]:
    out = list(window)
    if len(out) >= radius:
        return out
    for v in sorted(variables):
        if len(out) >= radius:
            break
        if v not in out:
            out.append(v)
    return out


def evaluate(
    instance: Instance,
    sidedoor: Sidedoor,
    bmap: BranchingMap,
    target_solver: Callable[[Instance], bool] | None = None,
    trace: bool = False,
    debug: bool = False,
    exhaustive: bool = False,
) -> SidedoorResult:
    """Decide ``instance`` by recursive branch-and-splice over the sidedoor.

    The search stops at the first satisfiable leaf unless ``exhaustive``
    is set, in which case every branch is visited and counted.
    """
    if sidedoor.radius != bmap.radius:
        raise RadiusMismatch(f"sidedoor radius {sidedoor.radius} != map radius {bmap.radius}")
    ok, bad = validate_sidedoor(instance, sidedoor, bmap.is_target)
    if not ok:
        raise NotASidedoor(f"constraint {bad} is not covered" if bad else "a set exceeds the radius")
    solver = target_solver or is_satisfiable
    result = SidedoorResult(False, 0, 0, 0, 1)
    sets = list(sidedoor.sets)

    def run(current: Instance, depth: int) -> bool:
        result.nodes += 1
        if depth == len(sets):
            result.leaves += 1
            sat = solver(current)
            if trace:
                result.trace.append(f"depth={depth} leaf result={'SAT' if sat else 'UNSAT'}")
            return sat
        window = _pad(sets[depth], current.variables, sidedoor.radius)
        branches = bmap.apply(restrict(current, window))
        if trace and not branches:
            result.trace.append(f"depth={depth} set={','.join(window)} branches=0 result=UNSAT")
        found = False
        for idx, branch in enumerate(branches):
            spliced = splice(current, branch)
            if debug:
                rest = Sidedoor(sidedoor.radius, tuple(sets[depth + 1 :]))
                assert validate_sidedoor(spliced, rest, bmap.is_target)[0], "recursion invariant broken"
            sat = run(spliced, depth + 1)
            if trace:
                result.trace.append(
                    f"depth={depth} set={','.join(window)} branch={idx} result={'SAT' if sat else 'UNSAT'}"
                )
            if sat:
                found = True
                if not exhaustive:
                    break
        return found

    result.satisfiable = run(instance, 0)
    result.factor = bmap.branching_factor
    result.bound = result.factor ** len(sets)
    assert result.leaves <= result.bound, f"{result.leaves} leaves exceed bound {result.bound}"
    return result


# ---------------------------------------------------------------------------
# detection


@dataclass
class SidedoorDetectResult:
    sidedoor: Sidedoor | None
    families: int
    bound: int

    @property
    def found(self) -> bool:
        return self.sidedoor is not None


def family_bound(r: int, k: int) -> int:
    """``(rk)^(rk)`` with the base floored at 2."""
    return max(r * k, 2) ** (r * k)


def detect(instance: Instance, r: int, k: int, targets: TargetTest) -> SidedoorDetectResult:
    """A sidedoor with at most ``k`` sets of radius ``r``, or None."""
    in_target = _target_test(targets)
    rest = [c for c in instance.constraints if not in_target(c.rel)]
    used = sorted({v for c in rest for v in c.scope})
    bound = family_bound(r, k)
    if not rest:
        return SidedoorDetectResult(Sidedoor(r, ()), 1, bound)
    if len(used) > r * k:
        return SidedoorDetectResult(None, 0, bound)
    width = min(r, len(used))
    windows = list(itertools.combinations(used, width))
    scopes = [frozenset(c.scope) for c in rest]
    # bit i of cover[w] is set when window w contains the scope of rest[i]
    cover = [sum(1 << i for i, sc in enumerate(scopes) if sc <= set(w)) for w in windows]
    everything = (1 << len(scopes)) - 1
    families = 0
    for size in range(k + 1):
        for family in itertools.combinations(range(len(windows)), size):
            families += 1
            covered = 0
            for i in family:
                covered |= cover[i]
            if covered == everything:
                door = Sidedoor(r, tuple(windows[i] for i in family))
                return SidedoorDetectResult(door, families, bound)
    return SidedoorDetectResult(None, families, bound)


def brute_force_sidedoor_exists(instance: Instance, r: int, k: int, targets: TargetTest) -> bool:
    """Try every family of at most ``k`` subsets of V with size at most ``r``."""
    in_target = _target_test(targets)
    scopes = [frozenset(c.scope) for c in instance.constraints if not in_target(c.rel)]
    if not scopes:
        return True
    names = sorted(instance.variables)
    subsets = [frozenset(s) for w in range(1, r + 1) for s in itertools.combinations(names, w)]
    for size in range(1, k + 1):
        for family in itertools.combinations(subsets, size):
            if all(any(sc <= w for w in family) for sc in scopes):
                return True
    return False
