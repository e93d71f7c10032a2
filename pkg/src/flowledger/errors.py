"""Exception types shared across the package."""

from __future__ import annotations


class FlowledgerError(Exception):
    """Base class for every error raised by this package."""


# --- BPMN parsing / validation ---

class XmlSyntax(FlowledgerError):
    pass


class UnsupportedElement(FlowledgerError):
    def __init__(self, element: str, where: str = ""):
        self.element = element
        suffix = f" in {where}" if where else ""
        super().__init__(f"unsupported BPMN element <{element}>{suffix}")


class DanglingReference(FlowledgerError):
    pass


class GuardSyntax(FlowledgerError):
    """Guard expression parse failure; ``offset`` is a 1-based byte position."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class MissingField(FlowledgerError):
    pass


class TypeMismatch(FlowledgerError):
    pass


class InvalidModel(FlowledgerError):
    """Raised when an operation requires a validated model but diagnostics exist."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0].message if self.diagnostics else "invalid model"
        super().__init__(f"model has {len(self.diagnostics)} diagnostic(s): {first}")


# --- compilation ---

class Irreducible(FlowledgerError):
    pass


# --- ledger ---

class BadSignature(FlowledgerError):
    pass


class BadNonce(FlowledgerError):
    pass


class Rejected(FlowledgerError):
    pass


# --- docstore ---

class TooLarge(FlowledgerError):
    pass


class UnknownCid(FlowledgerError):
    pass


# --- engine ---

class DuplicateProgram(FlowledgerError):
    pass


class UnknownProgram(FlowledgerError):
    pass


class MissingActor(FlowledgerError):
    pass


class UnknownInstance(FlowledgerError):
    pass


class GuardFault(FlowledgerError):
    pass


class BadToken(FlowledgerError):
    pass


class WrongActor(FlowledgerError):
    pass


class OutputMismatch(FlowledgerError):
    pass


class UnknownScope(FlowledgerError):
    pass


class ScopeNotActive(FlowledgerError):
    pass


class NotRunning(FlowledgerError):
    pass


class CorruptState(FlowledgerError):
    """Replayed chain does not reproduce the persisted chain."""


# --- bridge ---

class DuplicatePattern(FlowledgerError):
    pass


class BadUrl(FlowledgerError):
    pass
