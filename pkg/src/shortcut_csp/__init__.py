"""Backdoors and sidedoors for constraint satisfaction over partition schemes.

The modules build on each other bottom-up:

* :mod:`~shortcut_csp.algebra`: partition schemes and relations
* :mod:`~shortcut_csp.model`: instances, pair assignments, restriction and splice
* :mod:`~shortcut_csp.oracle`: certificate search, algebraic closure, brute force
* :mod:`~shortcut_csp.simpmap`: simplification maps
* :mod:`~shortcut_csp.backdoor`: backdoor evaluation and detection
* :mod:`~shortcut_csp.branchmap`: branching maps
* :mod:`~shortcut_csp.sidedoor`: sidedoor evaluation and detection
* :mod:`~shortcut_csp.gadgets`: reductions and planted instance generators
"""

from .algebra import (
    DnfRel,
    PartitionScheme,
    UnionRel,
    compose_union,
    converse_rel,
    eliminate_negation,
    intersect,
    load_scheme,
)
from .errors import ShortcutError
from .model import Constraint, Instance, PairAssignment, parse_instance, restrict, serialize_instance, splice
from .oracle import Certificate, enumerate_certificates, equivalent, find_certificate, is_satisfiable

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "Constraint",
    "DnfRel",
    "Instance",
    "PairAssignment",
    "PartitionScheme",
    "ShortcutError",
    "UnionRel",
    "compose_union",
    "converse_rel",
    "eliminate_negation",
    "enumerate_certificates",
    "equivalent",
    "find_certificate",
    "intersect",
    "is_satisfiable",
    "load_scheme",
    "parse_instance",
    "restrict",
    "serialize_instance",
    "splice",
]
