#!/usr/bin/env python3
"""
Error types for Residex
Every error carries the process exit code the CLI maps it to
"""


class ResidexError(Exception):
    """Base class for all Residex errors"""
    exit_code = 1


class ValidationError(ResidexError):
    """Input or artifact failed validation (exit code 1)"""
    exit_code = 1


class IoFailure(ResidexError):
    """Reading or writing an artifact failed at the OS level (exit code 2)"""
    exit_code = 2


# io
class MalformedHeader(ValidationError):
    pass


class MalformedInput(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NonUnitNorm(ValidationError):
    pass


class TruncatedFile(ValidationError):
    pass


class MalformedLine(ValidationError):
    """A TSV line could not be parsed; line numbers start at 1"""

    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        message = f"malformed line {line_no}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


# codec
class InsufficientSample(ValidationError):
    pass


class CorruptCode(ValidationError):
    pass


# indexer
class EmptyCorpus(ValidationError):
    pass


class MalformedIndex(ValidationError):
    """An index file is missing or violates an invariant"""

    def __init__(self, file: str, invariant: str):
        self.file = file
        self.invariant = invariant
        super().__init__(f"{file}: {invariant}")


# searcher
class InvalidParams(ValidationError):
    pass


# eval / analysis
class EmptyIntersection(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass
