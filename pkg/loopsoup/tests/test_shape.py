# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

import numpy as np
from pytest import mark, raises
from numpy.testing import assert_array_equal
from hypothesis import given, settings, strategies as st
from loopsoup import shape
from loopsoup.utils import ParameterError

settings.load_profile("loopsoup")


@given(st.integers(1, 24))
def test_unit_square_faces(n):
    faces = shape.Square(1.0).faces(1.0 / n)
    assert len(faces) == n * n
    assert faces == shape.square_faces(n)


@given(st.floats(0.1, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_square_limits(side, x, y):
    s = shape.Square(side, (x, y))
    assert_array_equal(s.limits(), [[x, x + side], [y, y + side]])
    assert s.contains(s.center)[0]
    assert not s.contains([x - 1, y])[0]


@given(st.floats(0.2, 3.0), st.sampled_from([0.05, 0.1, 0.25]))
def test_disk_faces_inside(radius, mesh):
    d = shape.Disk(radius)
    for i, j in d.faces(mesh):
        corners = mesh * np.array([[i, j], [i + 1, j], [i, j + 1], [i + 1, j + 1]])
        assert np.all(np.hypot(corners[:, 0], corners[:, 1]) < radius)


@mark.parametrize("mesh, count", [(1.0, 0), (0.5, 4), (0.25, 32)])
def test_unit_disk_face_count(mesh, count):
    assert len(shape.Disk(1.0).faces(mesh)) == count


def test_disk_is_open():
    d = shape.Disk(1.0)
    assert not d.contains([1.0, 0.0])[0]
    assert d.contains([0.999, 0.0])[0]


@mark.parametrize("params", [
    {"shape": "square", "n": 0},
    {"shape": "disk", "radius": 0.1, "mesh": 0.5},
    {"shape": "triangle"},
])
def test_shape_from_dict_invalid(params):
    with raises(ParameterError):
        shape.shape_from_dict(params)


def test_shape_from_dict():
    s, mesh = shape.shape_from_dict({"shape": "square", "n": 8, "mesh": 0.125})
    assert isinstance(s, shape.Square)
    assert s.side == 1.0
    assert mesh == 0.125
    s, mesh = shape.shape_from_dict({"shape": "faces", "list": [[0, 0], [1, 0]]})
    assert s.faces() == [(0, 0), (1, 0)]
    assert mesh == 1.0


@mark.parametrize("n, count", [(1, 1), (2, 3), (3, 9), (4, 28), (5, 91), (6, 307)])
def test_fixed_polyomino_counts(n, count):
    assert len(shape.fixed_polyominoes(n)) == count


def test_fixed_polyominoes_normalized():
    for faces in shape.fixed_polyominoes(4):
        arr = np.array(faces)
        assert_array_equal(arr.min(axis=0), [0, 0])
        assert list(faces) == sorted(faces)


@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_random_polyomino_is_connected(size, seed):
    faces = shape.random_polyomino(np.random.default_rng(seed), size)
    assert len(set(faces)) == size
    assert list(faces) == sorted(faces)
    assert_array_equal(np.array(faces).min(axis=0), [0, 0])
    reached, stack = {faces[0]}, [faces[0]]
    while stack:
        i, j = stack.pop()
        for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if nb in faces and nb not in reached:
                reached.add(nb)
                stack.append(nb)
    assert len(reached) == size


def test_random_polyomino_invalid():
    with raises(ParameterError):
        shape.random_polyomino(np.random.default_rng(0), 0)
