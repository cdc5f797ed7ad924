"""Plain-list vector helpers."""


def add(a, b):
    return [x + y for x, y in zip(a, b)]


def subtract(a, b):
    return [x - y for x, y in zip(a, b)]


def dot(a, b):
    """Inner product of two equal-length vectors."""
    return sum(x * y for x, y in zip(a, b))


def norm(v):
    return dot(v, v) ** 0.5


def normalize(v):
    """Scale ``v`` to unit length; zero vectors are rejected."""
    n = norm(v)
    if n == 0:
        raise ValueError("cannot normalize a zero vector")
    return [x / n for x in v]


def distance(a, b):
    gap = subtract(a, b)
    return dot(gap, gap) ** 0.5
