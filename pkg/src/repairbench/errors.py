"""Exception types shared across the toolkit."""

from __future__ import annotations


class RepairBenchError(Exception):
    """Base class for all toolkit errors."""


class PathNotFound(RepairBenchError):
    pass


class NoUnitsFound(RepairBenchError):
    pass


class UnknownNode(RepairBenchError):
    pass


class TooFewRecords(RepairBenchError):
    pass


class NonConvergence(RepairBenchError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class BaselineFailed(RepairBenchError):
    def __init__(self, message: str, failing: list[str] | None = None, reason: str = "failures"):
        super().__init__(message)
        self.failing = failing or []
        self.reason = reason


class RunnerCrash(RepairBenchError):
    pass


class UnsupportedTarget(RepairBenchError):
    pass


class ClientFailure(RepairBenchError):
    pass


class NoValidCorruption(RepairBenchError):
    pass


class NotEnoughCandidates(RepairBenchError):
    pass


class SnapshotFailure(RepairBenchError):
    pass


class BudgetExhausted(RepairBenchError):
    pass


class AttemptsExhausted(RepairBenchError):
    pass


class PathOutsideSandbox(RepairBenchError):
    pass


class InvalidPattern(RepairBenchError):
    pass


class NotFound(RepairBenchError):
    pass


class UnknownUnit(RepairBenchError):
    pass


class UnparseableBody(RepairBenchError):
    pass


class DegenerateOutcomes(RepairBenchError):
    pass


class Separation(RepairBenchError):
    pass


class RankDeficient(RepairBenchError):
    pass


class ZeroVariance(RepairBenchError):
    pass


class UnknownAgent(RepairBenchError):
    pass


class NoResults(RepairBenchError):
    pass


class NoTasksGenerated(RepairBenchError):
    pass


class WrongMode(RepairBenchError):
    pass
