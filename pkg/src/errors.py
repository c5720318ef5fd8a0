"""
Exception types for the benchmark harness
"""

from typing import Optional


class HarnessError(Exception):
    """Base class for every error raised by the harness."""


# Dataset

class DatasetNotFound(HarnessError, FileNotFoundError):
    pass


class ParseError(HarnessError, ValueError):
    def __init__(self, message: str, record_index: Optional[int] = None):
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)
        self.record_index = record_index


class SchemaError(HarnessError, ValueError):
    def __init__(self, message: str, record_id: Optional[str] = None):
        if record_id is not None:
            message = f"record {record_id!r}: {message}"
        super().__init__(message)
        self.record_id = record_id


class InsufficientCell(HarnessError, ValueError):
    def __init__(self, cell, population: int, required: int):
        fact_count, question_type = cell
        super().__init__(
            f"cell (fact_count={fact_count}, question_type={question_type}) "
            f"has {population} candidates, {required} required"
        )
        self.cell = cell
        self.population = population
        self.required = required


# Perturbation

class InvalidFactCount(HarnessError, ValueError):
    pass


class NoIrrelevantSentence(HarnessError, ValueError):
    pass


class MissingLexicon(HarnessError, ValueError):
    pass


class MissingPrefix(HarnessError, ValueError):
    pass


class ReplayMismatch(HarnessError, ValueError):
    pass


# Generation

class EmptyLogits(HarnessError, ValueError):
    pass


class NonFiniteLogit(HarnessError, ValueError):
    pass


class ConfigError(HarnessError, ValueError):
    pass


class InvalidConfig(ConfigError):
    pass


class BackendError(HarnessError):
    def __init__(self, message: str, status: Optional[int] = None, attempts: int = 0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class CacheCorruption(HarnessError):
    pass


# Reference processing

class EmptyField(HarnessError, ValueError):
    pass


class EmptyGeneration(HarnessError, ValueError):
    pass


# Metrics

class EmptyEmbeddings(HarnessError, ValueError):
    pass


class DimensionMismatch(HarnessError, ValueError):
    pass


class EmptyText(HarnessError, ValueError):
    pass


# Statistics

class TooFewRuns(HarnessError, ValueError):
    pass


class ZeroMean(HarnessError, ValueError):
    pass


class EmptyGroup(HarnessError, ValueError):
    pass


class MixedKeys(HarnessError, ValueError):
    pass


class NonBaselineEntry(HarnessError, ValueError):
    pass


class NoComparablePairs(HarnessError, ValueError):
    pass


# Reporting and orchestration

class MissingSeries(HarnessError, ValueError):
    pass


class ReportIOError(HarnessError, OSError):
    pass


class ManifestMismatch(HarnessError):
    pass
