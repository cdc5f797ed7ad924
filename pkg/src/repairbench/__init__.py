"""Benchmark toolkit for function-repair tasks on real Python repositories."""

__version__ = "0.1.0"
