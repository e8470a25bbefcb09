"""Exception hierarchy shared by all klafate modules."""


class KlafateError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(KlafateError, ValueError):
    """An argument violates a documented precondition."""


class NotFoundError(KlafateError, LookupError):
    """A referenced label, fault or identifier does not exist."""


class RuleSyntaxError(KlafateError):
    """Rule text could not be parsed.

    Carries the 1-based position of the offending token and the set of
    token kinds that would have been accepted there.
    """

    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        detail = f"{message} at line {line}, column {column}"
        if self.expected:
            detail += " (expected: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class UnknownOperatorError(RuleSyntaxError):
    """An operator-like character sequence is not part of the rule language."""


class UnresolvedNameError(KlafateError):
    """An identifier does not resolve to a declared variable or threshold."""

    def __init__(self, name, context=""):
        self.name = name
        message = f"unresolved name {name!r}"
        if context:
            message += f" ({context})"
        super().__init__(message)


class TypeMismatchError(KlafateError):
    """An expression mixes boolean and real positions incompatibly."""


class EvaluationError(KlafateError):
    """Expression evaluation failed, typically a variable missing from the snapshot."""

    def __init__(self, message, name=None):
        self.name = name
        super().__init__(message)


class CapacityError(KlafateError):
    """An exhaustive analysis would exceed its enumeration bound."""


class WorkbookError(KlafateError):
    """A workbook file is structurally or semantically invalid."""

    def __init__(self, message, file=None, row=None):
        self.file = file
        self.row = row
        where = ""
        if file is not None:
            where = f" [{file}" + (f", row {row}" if row is not None else "") + "]"
        super().__init__(message + where)


class LinkError(WorkbookError):
    """A cross-template reference (e.g. component to system FM) does not resolve."""


class ExclusivityError(WorkbookError):
    """Two rules can fire for the same assignment; the witness is attached."""

    def __init__(self, message, labels=(), witness=None, file=None, row=None):
        self.labels = tuple(labels)
        self.witness = dict(witness or {})
        super().__init__(message, file=file, row=row)


class ConfigurationError(KlafateError):
    """The engine is wired inconsistently (e.g. missing weight for a frame label)."""


class ProtocolError(KlafateError):
    """A user event arrived that is illegal in the current session phase."""


class UndefinedStatisticError(KlafateError):
    """A statistic is mathematically undefined for the given input."""
