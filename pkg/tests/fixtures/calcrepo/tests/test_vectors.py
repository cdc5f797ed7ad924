import pytest

from calckit.vectors import add, distance, dot, norm, normalize, subtract


def test_add_pairs():
    assert add([1, 2], [3, 4]) == [4, 6]


def test_add_empty():
    assert add([], []) == []


def test_add_floats():
    assert add([1.5], [2.5]) == [4.0]


def test_add_negatives():
    assert add([-1, 2], [1, -2]) == [0, 0]


def test_add_zeros():
    assert add([0, 0, 0], [0, 0, 0]) == [0, 0, 0]


def test_subtract_pairs():
    assert subtract([3, 4], [1, 1]) == [2, 3]


def test_subtract_goes_negative():
    assert subtract([1], [2]) == [-1]


def test_dot_basic():
    assert dot([1, 2], [3, 4]) == 11


def test_dot_orthogonal():
    assert dot([1, 0], [0, 1]) == 0


def test_dot_empty():
    assert dot([], []) == 0


def test_norm_345():
    assert norm([3, 4]) == 5.0


def test_norm_zero():
    assert norm([0, 0]) == 0.0


def test_norm_unit():
    assert norm([1]) == 1.0


def test_normalize_345():
    assert normalize([3, 4]) == pytest.approx([0.6, 0.8])


def test_normalize_rejects_zero():
    with pytest.raises(ValueError):
        normalize([0, 0, 0])


def test_normalize_has_unit_norm():
    assert norm(normalize([2, 5, 1])) == pytest.approx(1.0)


def test_distance_345():
    assert distance([0, 0], [3, 4]) == 5.0


def test_distance_self_is_zero():
    assert distance([7, 1], [7, 1]) == 0.0


def test_distance_single_axis():
    assert distance([1], [4]) == 3.0
