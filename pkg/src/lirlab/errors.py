"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can print
``error: <Code>: <message>`` and tests can match on it.
"""

from __future__ import annotations


class LirlabError(Exception):
    """Base class for all domain errors."""

    code = "Error"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return super().__str__() or self.code


class EmptyText(LirlabError):
    code = "EmptyText"


class DimMismatch(LirlabError):
    code = "DimMismatch"


class ParseError(LirlabError):
    code = "ParseError"

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class DuplicateDocId(LirlabError):
    code = "DuplicateDocId"


class EmptyCorpus(LirlabError):
    code = "EmptyCorpus"


class UnknownDocId(LirlabError):
    code = "UnknownDocId"


class EmptyVocab(LirlabError):
    code = "EmptyVocab"


class UnnormalizedTarget(LirlabError):
    code = "UnnormalizedTarget"


class EmptyQuery(LirlabError):
    code = "EmptyQuery"


class MissingGold(LirlabError):
    code = "MissingGold"


class TooFewSuggestions(LirlabError):
    code = "TooFewSuggestions"


class EmptyInput(LirlabError):
    code = "EmptyInput"
