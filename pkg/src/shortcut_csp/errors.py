"""Exception hierarchy shared by every module.

All errors derive from :class:`ShortcutError` so callers (and the CLI) can
catch the whole family at once.
"""

from __future__ import annotations


class ShortcutError(Exception):
    """Base class for all library errors."""


# algebra
class UnknownScheme(ShortcutError):
    pass


class MalformedTable(ShortcutError):
    pass


class ArityCapExceeded(ShortcutError):
    pass


# model
class ParseError(ShortcutError):
    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class UnknownRelation(ShortcutError):
    pass


class ArityMismatch(ShortcutError):
    pass


class UnknownVariable(ShortcutError):
    pass


class SchemeMismatch(ShortcutError):
    pass


class RelationConflict(ShortcutError):
    pass


class InconsistentAlphaDiagonal(ShortcutError):
    pass


# oracle
class OracleUnavailable(ShortcutError):
    pass


class CapExceeded(ShortcutError):
    pass


class VariableSetMismatch(ShortcutError):
    pass


class WrongScheme(ShortcutError):
    pass


# simpmap
class NonBinaryTarget(ShortcutError):
    pass


class MissingRelationFamily(ShortcutError):
    pass


# backdoor
class NotABackdoor(ShortcutError):
    def __init__(self, alpha, constraint):
        self.alpha = alpha
        self.constraint = constraint
        super().__init__(f"simplification undefined for {constraint} under alpha={alpha}")


# branchmap
class RadiusTooSmall(ShortcutError):
    pass


class NegationInDefinition(ShortcutError):
    pass


class MissingDefinition(ShortcutError):
    pass


class RadiusExceeded(ShortcutError):
    pass


# sidedoor
class NotASidedoor(ShortcutError):
    pass


class RadiusMismatch(ShortcutError):
    pass


# gadgets
class KTooSmall(ShortcutError):
    pass


class BadEdgeCount(ShortcutError):
    pass


class SpecInfeasible(ShortcutError):
    pass
