"""Higher-level summaries built from the vector and statistics helpers."""

from .statistics import mean, stdev, zscores
from .vectors import distance, normalize


def summarize(values):
    return {
        "mean": mean(values),
        "stdev": stdev(values),
        "low": min(values),
        "high": max(values),
    }


def outliers(values, limit=2.0):
    """Values whose standard score exceeds ``limit`` in magnitude."""
    return [v for v, z in zip(values, zscores(values)) if abs(z) > limit]


def drift(a, b):
    """Euclidean gap per coordinate between two equal-length series."""
    return distance(a, b) / len(a)


def profile(vector):
    return summarize(normalize(vector))
