"""Ground truth: complete certificates, algebraic closure and brute force.

A certificate assigns one basic relation to every pair of variables.  An
instance is satisfiable exactly when some consistent certificate implies
all of its constraints, and two instances over the same variables are
equivalent exactly when their certificate sets coincide.  Consistency of
a fully basic network is decided by algebraic closure, which is complete
for every shipped scheme.

Networks are flat ``n * n`` lists of masks indexed by the positions of the
variables in sorted order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .algebra import DnfRel, PartitionScheme, UnionRel, bits, popcount
from .errors import CapExceeded, OracleUnavailable, VariableSetMismatch, WrongScheme
from .model import Constraint, Instance

BasicChecker = Callable[[PartitionScheme, list[int], int], bool]


def default_cap(scheme: PartitionScheme) -> int:
    """Largest |V| for exhaustive certificate enumeration."""
    if scheme.m <= 3:
        return 7
    if scheme.m == 4:
        return 6
    if scheme.m == 5:
        return 5
    return 4


# ---------------------------------------------------------------------------
# algebraic closure


def initial_network(scheme: PartitionScheme, n: int) -> list[int]:
    net = [scheme.full_mask] * (n * n)
    for i in range(n):
        net[i * n + i] = scheme.identity_mask
    return net


def close_network(
    scheme: PartitionScheme, net: list[int], n: int, dirty: Iterable[tuple[int, int]] | None = None
) -> bool:
    """Refine ``net`` in place to its algebraic closure.

    Returns False when some mask empties.  ``dirty`` lists the pairs
    whose masks changed; by default every pair is processed.
    """
    compose = scheme.compose_mask
    conv = scheme.converse_mask
    if dirty is None:
        queue = [(i, j) for i in range(n) for j in range(i, n)]
    else:
        queue = [(min(i, j), max(i, j)) for i, j in dirty]
    if any(net[i * n + j] == 0 for i, j in queue):
        return False
    pending = set(queue)
    while queue:
        i, j = queue.pop()
        pending.discard((i, j))
        r_ij = net[i * n + j]
        for k in range(n):
            # (i, k) through j
            old = net[i * n + k]
            new = old & compose(r_ij, net[j * n + k])
            if new != old:
                if not new:
                    return False
                net[i * n + k] = new
                net[k * n + i] = conv(new)
                key = (i, k) if i <= k else (k, i)
                if key not in pending:
                    pending.add(key)
                    queue.append(key)
                r_ij = net[i * n + j]
            # (k, j) through i
            old = net[k * n + j]
            new = old & compose(net[k * n + i], r_ij)
            if new != old:
                if not new:
                    return False
                net[k * n + j] = new
                net[j * n + k] = conv(new)
                key = (k, j) if k <= j else (j, k)
                if key not in pending:
                    pending.add(key)
                    queue.append(key)
                r_ij = net[i * n + j]
    return True


def aclosure(
    scheme: PartitionScheme, variables: Sequence[str], network: Mapping[tuple[str, str], int]
) -> dict[tuple[str, str], int] | None:
    """Algebraic closure of a named network; None means INCONSISTENT.

    ``network`` maps ordered variable pairs to masks; the result lists every
    pair ``(x, y)`` with ``x < y`` in sorted order.
    """
    names = sorted(variables)
    pos = {v: i for i, v in enumerate(names)}
    n = len(names)
    net = initial_network(scheme, n)
    for (x, y), mask in network.items():
        i, j = pos[x], pos[y]
        net[i * n + j] &= mask
        net[j * n + i] &= scheme.converse_mask(mask)
    if not close_network(scheme, net, n):
        return None
    return {(names[i], names[j]): net[i * n + j] for i in range(n) for j in range(i + 1, n)}


# ---------------------------------------------------------------------------
# compiled instances


@dataclass
class _Compiled:
    scheme: PartitionScheme
    names: list[str]
    n: int
    net: list[int] | None  # None: trivially unsatisfiable
    clauses: list[list[tuple[tuple[int, int], ...]]]  # per DNF constraint, atoms (flat pair, basic)


def _compile(instance: Instance) -> _Compiled:
    scheme = instance.scheme
    names = sorted(instance.variables)
    pos = {v: i for i, v in enumerate(names)}
    n = len(names)
    net = initial_network(scheme, n)
    conv = scheme.converse_mask
    dnfs: list[list[tuple[tuple[int, int], ...]]] = []
    ok = True
    for c in instance.constraints:
        rel = instance.relation(c)
        idx = [pos[v] for v in c.scope]
        if isinstance(rel, UnionRel):
            i, j = idx
            net[i * n + j] &= rel.mask
            net[j * n + i] &= conv(rel.mask)
            if net[i * n + j] == 0:
                ok = False
            continue
        clauses = set()
        trivially_true = False
        for clause in rel.clauses:
            atoms = []
            dead = False
            for a, b, basic in clause:
                i, j = idx[a], idx[b]
                if i > j:
                    i, j, basic = j, i, scheme.converse[basic]
                if i == j and scheme.identity_index is not None:
                    if basic != scheme.identity_index:
                        dead = True
                        break
                    continue
                atoms.append((i * n + j, basic))
            if dead:
                continue
            if not atoms:
                trivially_true = True
                break
            pairs = {}
            for p, basic in atoms:
                if pairs.setdefault(p, basic) != basic:
                    dead = True
                    break
            if not dead:
                clauses.add(tuple(sorted(pairs.items())))
        if trivially_true:
            continue
        if not clauses:
            ok = False
            continue
        dnfs.append(sorted(clauses, key=lambda cl: (len(cl), cl)))
    return _Compiled(scheme, names, n, net if ok else None, dnfs)


def _propagate(comp: _Compiled, net: list[int], dirty: Iterable[tuple[int, int]] | None) -> bool:
    """A-closure interleaved with DNF viability and projection."""
    scheme = comp.scheme
    n = comp.n
    conv = scheme.converse_mask
    if not close_network(scheme, net, n, dirty):
        return False
    while True:
        changed: list[tuple[int, int]] = []
        for clauses in comp.clauses:
            viable = [cl for cl in clauses if all(net[p] >> b & 1 for p, b in cl)]
            if not viable:
                return False
            # pairs constrained by every viable clause can be narrowed
            common = None
            for cl in viable:
                ps = {p: b for p, b in cl}
                if common is None:
                    common = {p: 1 << b for p, b in ps.items()}
                else:
                    common = {p: m | (1 << ps[p]) for p, m in common.items() if p in ps}
                if not common:
                    break
            for p, mask in (common or {}).items():
                old = net[p]
                new = old & mask
                if new != old:
                    i, j = divmod(p, n)
                    net[p] = new
                    net[j * n + i] = conv(new)
                    changed.append((i, j))
        if not changed:
            return True
        if not close_network(scheme, net, n, changed):
            return False


def _pair_order(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


def _search(
    comp: _Compiled, checker: BasicChecker | None, limit: int | None
) -> Iterator[list[int]]:
    scheme = comp.scheme
    if comp.net is None:
        return
    if not scheme.aclosure_decides_basics and checker is None:
        raise OracleUnavailable(f"scheme {scheme.name!r} needs a concrete consistency checker")
    n = comp.n
    net = list(comp.net)
    if not _propagate(comp, net, None):
        return
    order = _pair_order(n)
    conv = scheme.converse_mask
    found = 0
    stack = [net]
    # depth-first, children in basic order: push in reverse
    while stack:
        cur = stack.pop()
        pick = None
        for i, j in order:
            if cur[i * n + j] & (cur[i * n + j] - 1):
                pick = (i, j)
                break
        if pick is None:
            if checker is not None and not checker(scheme, cur, n):
                continue
            yield cur
            found += 1
            if limit is not None and found >= limit:
                return
            continue
        i, j = pick
        children = []
        for b in bits(cur[i * n + j]):
            child = list(cur)
            child[i * n + j] = 1 << b
            child[j * n + i] = conv(1 << b)
            if _propagate(comp, child, [(i, j)]):
                children.append(child)
        stack.extend(reversed(children))


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Certificate:
    """Complete basic assignment over the sorted variables."""

    scheme: PartitionScheme = field(compare=False, repr=False)
    variables: tuple[str, ...]
    entries: tuple[int, ...]  # upper triangle incl. diagonal, row-major

    @classmethod
    def from_network(cls, scheme: PartitionScheme, names: Sequence[str], net: list[int]) -> "Certificate":
        n = len(names)
        entries = tuple(net[i * n + j].bit_length() - 1 for i, j in _pair_order(n))
        return cls(scheme, tuple(names), entries)

    def _pos(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def get(self, x: str, y: str) -> int:
        pos = self._pos()
        i, j = pos[x], pos[y]
        n = len(self.variables)
        swap = i > j
        if swap:
            i, j = j, i
        k = i * n - i * (i - 1) // 2 + (j - i)
        b = self.entries[k]
        return self.scheme.converse[b] if swap else b

    def basic_of(self) -> Callable[[str, str], int]:
        pos = self._pos()
        n = len(self.variables)
        entries = self.entries
        conv = self.scheme.converse

        def lookup(x: str, y: str) -> int:
            i, j = pos[x], pos[y]
            if i > j:
                return conv[entries[j * n - j * (j - 1) // 2 + (i - j)]]
            return entries[i * n - i * (i - 1) // 2 + (j - i)]

        return lookup

    def satisfies(self, instance: Instance) -> bool:
        """Decode and re-check every constraint of ``instance``."""
        lookup = self.basic_of()
        return all(instance.relation(c).holds(c.scope, lookup) for c in instance.constraints)

    def pairs(self) -> dict[tuple[str, str], int]:
        out = {}
        show_diag = self.scheme.identity_index is None
        for (i, j), b in zip(_pair_order(len(self.variables)), self.entries):
            if i == j and not show_diag:
                continue
            out[(self.variables[i], self.variables[j])] = b
        return out

    def to_json(self) -> dict:
        return {"pairs": {f"{x},{y}": self.scheme.basics[b] for (x, y), b in self.pairs().items()}}

    def as_instance(self) -> Instance:
        """The certificate written as a basic-constraint instance."""
        relations = {}
        constraints = []
        for (x, y), b in self.pairs().items():
            name = self.scheme.basics[b]
            relations[name] = UnionRel(self.scheme, 1 << b)
            constraints.append(Constraint(name, (x, y)))
        return Instance(self.scheme, self.variables, relations, tuple(constraints))


def find_certificate(instance: Instance, checker: BasicChecker | None = None) -> Certificate | None:
    """A complete certificate implying ``instance``, or None if unsatisfiable."""
    comp = _compile(instance)
    for net in _search(comp, checker, 1):
        return Certificate.from_network(instance.scheme, comp.names, net)
    return None


def is_satisfiable(instance: Instance) -> bool:
    return find_certificate(instance) is not None


def enumerate_certificates(
    instance: Instance, cap: int | None = None, checker: BasicChecker | None = None
) -> list[Certificate]:
    """All certificates implying ``instance``, in deterministic search order."""
    cap = default_cap(instance.scheme) if cap is None else cap
    if len(instance.variables) > cap:
        raise CapExceeded(f"|V| = {len(instance.variables)} exceeds enumeration cap {cap}")
    comp = _compile(instance)
    return [Certificate.from_network(instance.scheme, comp.names, net) for net in _search(comp, checker, None)]


def certificate_set(instance: Instance, cap: int | None = None) -> frozenset[tuple[int, ...]]:
    return frozenset(c.entries for c in enumerate_certificates(instance, cap))


def equivalent(a: Instance, b: Instance, cap: int | None = None) -> bool:
    """True iff both instances have the same complete certificates."""
    if set(a.variables) != set(b.variables):
        raise VariableSetMismatch(f"{sorted(a.variables)} vs {sorted(b.variables)}")
    if a.scheme.name != b.scheme.name:
        raise WrongScheme(f"{a.scheme.name} vs {b.scheme.name}")
    return certificate_set(a, cap) == certificate_set(b, cap)


def naive_certificates(instance: Instance) -> list[Certificate]:
    """Filter every complete basic assignment; independent of the search."""
    scheme = instance.scheme
    names = sorted(instance.variables)
    n = len(names)
    order = _pair_order(n)
    choices = []
    for i, j in order:
        choices.append(list(bits(scheme.identity_mask)) if i == j else list(range(scheme.m)))
    out = []
    for combo in itertools.product(*choices):
        net = [0] * (n * n)
        for (i, j), b in zip(order, combo):
            net[i * n + j] = 1 << b
            net[j * n + i] = 1 << scheme.converse[b]
        if not close_network(scheme, net, n):
            continue
        if any(popcount(net[p]) != 1 for p in range(n * n)):
            continue
        cert = Certificate(scheme, tuple(names), tuple(combo))
        if cert.satisfies(instance):
            out.append(cert)
    return out


# ---------------------------------------------------------------------------
# target solvers


def aclosure_solver(instance: Instance) -> bool:
    """Decide an instance of binary union constraints by a-closure alone.

    Complete only for languages where algebraic closure decides
    satisfiability (basic relations of the shipped schemes, ``{=, !=}``,
    and the tractable RCC5 fragment used as a sidedoor target).
    """
    comp = _compile(instance)
    if comp.clauses:
        raise ValueError("aclosure_solver only handles binary union constraints")
    if comp.net is None:
        return False
    return close_network(instance.scheme, list(comp.net), comp.n)


# ---------------------------------------------------------------------------
# concrete brute force


def _set_partitions(n: int) -> Iterator[list[int]]:
    """Restricted growth strings of length n."""
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(k: int, top: int) -> Iterator[list[int]]:
        if k == n:
            yield list(labels)
            return
        for v in range(top + 2):
            labels[k] = v
            yield from rec(k + 1, max(top, v))

    labels[0] = 0
    yield from rec(1, 0)


def _holds_everywhere(instance: Instance, values: Mapping[str, int], basic_of: Callable[[int, int], int]) -> bool:
    def lookup(x: str, y: str) -> int:
        return basic_of(values[x], values[y])

    return all(instance.relation(c).holds(c.scope, lookup) for c in instance.constraints)


def brute_force_equality(instance: Instance) -> bool:
    """Satisfiability over an equality language by trying every set partition."""
    scheme = instance.scheme
    if scheme.name != "eq":
        raise WrongScheme(f"expected scheme 'eq', got {scheme.name!r}")
    names = list(instance.variables)
    if len(names) > 8:
        raise CapExceeded("brute_force_equality supports at most 8 variables")
    eq_b, ne_b = scheme.index("="), scheme.index("!=")

    def basic_of(a: int, b: int) -> int:
        return eq_b if a == b else ne_b

    for labels in _set_partitions(len(names)):
        if _holds_everywhere(instance, dict(zip(names, labels)), basic_of):
            return True
    return False


def brute_force_order(instance: Instance) -> bool:
    """Satisfiability over the point scheme by trying every weak order."""
    scheme = instance.scheme
    if scheme.name != "point":
        raise WrongScheme(f"expected scheme 'point', got {scheme.name!r}")
    names = list(instance.variables)
    if len(names) > 7:
        raise CapExceeded("brute_force_order supports at most 7 variables")
    eq_b, lt_b, gt_b = scheme.index("="), scheme.index("<"), scheme.index(">")

    def basic_of(a: int, b: int) -> int:
        return eq_b if a == b else (lt_b if a < b else gt_b)

    for labels in _set_partitions(len(names)):
        blocks = max(labels, default=-1) + 1
        for perm in itertools.permutations(range(blocks)):
            values = {v: perm[lab] for v, lab in zip(names, labels)}
            if _holds_everywhere(instance, values, basic_of):
                return True
    return False


def brute_force_finite(instance: Instance) -> bool:
    """Satisfiability over a ``finite:d`` scheme by trying every assignment."""
    scheme = instance.scheme
    if not scheme.name.startswith("finite:"):
        raise WrongScheme(f"expected a finite:d scheme, got {scheme.name!r}")
    d = int(scheme.name.split(":")[1])
    names = list(instance.variables)

    def basic_of(a: int, b: int) -> int:
        return (a - 1) * d + (b - 1)

    for combo in itertools.product(range(1, d + 1), repeat=len(names)):
        if _holds_everywhere(instance, dict(zip(names, combo)), basic_of):
            return True
    return False


def is_dnf_instance(instance: Instance) -> bool:
    return any(isinstance(instance.relation(c), DnfRel) for c in instance.constraints)
