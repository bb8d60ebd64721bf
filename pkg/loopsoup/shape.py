# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Continuum shapes and their discretization into unions of lattice faces."""

import numpy as np
from abc import ABC, abstractmethod
from typing import Iterable, List, Sequence, Tuple
from .utils import ParameterError

__all__ = [
    "AbstractShape",
    "Square",
    "Disk",
    "FaceList",
    "shape_from_dict",
    "square_faces",
    "fixed_polyominoes",
    "random_polyomino",
]

Face = Tuple[int, int]


class AbstractShape(ABC):
    """Abstract two-dimensional shape.

    A shape is discretized at mesh ``a`` by keeping the faces of ``aZ^2`` whose
    four corners lie inside the shape, i.e. the largest discrete domain contained
    in it.
    """

    name = "shape"

    def __init__(self, pos=None):
        self.pos = np.zeros(2) if pos is None else np.array(pos, dtype=float)

    @abstractmethod
    def limits(self) -> np.ndarray:
        """Returns the limits of the shape as a (2, 2) array of [min, max] rows."""
        pass

    @abstractmethod
    def contains(self, points, tol=0.0) -> np.ndarray:
        """Checks if the given points are strictly inside the shape."""
        pass

    def faces(self, mesh: float) -> List[Face]:
        """Returns the faces of ``mesh * Z^2`` that lie inside the shape.

        Parameters
        ----------
        mesh : float
            The lattice spacing ``a``.

        Returns
        -------
        faces : list of (int, int)
            Lower-left corner indices of the faces, sorted lexicographically.
        """
        if mesh <= 0:
            raise ParameterError(f"mesh must be positive, got {mesh}")
        lims = self.limits()
        lo = np.floor(lims[:, 0] / mesh).astype(int) - 1
        hi = np.ceil(lims[:, 1] / mesh).astype(int) + 1
        ii, jj = np.meshgrid(np.arange(lo[0], hi[0]), np.arange(lo[1], hi[1]))
        ii, jj = ii.ravel(), jj.ravel()
        mask = np.ones(len(ii), dtype=bool)
        for di in (0, 1):
            for dj in (0, 1):
                corners = mesh * np.stack([ii + di, jj + dj], axis=1)
                mask &= self.contains(corners)
        faces = sorted(zip(ii[mask].tolist(), jj[mask].tolist()))
        return faces

    def todict(self) -> dict:
        return {"shape": self.name}

    def __repr__(self):
        return self.__class__.__name__


class Square(AbstractShape):
    """Axis aligned square ``[x0, x0 + side] x [y0, y0 + side]``.

    Corners on the boundary count as inside, so ``Square(1.0).faces(1/n)`` gives
    the full ``n x n`` block of faces.

    Examples
    --------
    >>> s = Square(1.0)
    >>> len(s.faces(0.25))
    16
    """

    name = "square"

    def __init__(self, side=1.0, pos=None):
        super().__init__(pos)
        if side <= 0:
            raise ParameterError(f"square side must be positive, got {side}")
        self.side = float(side)

    @property
    def center(self) -> np.ndarray:
        return self.pos + self.side / 2

    def limits(self):
        return np.array([self.pos, self.pos + self.side]).T

    def contains(self, points, tol=1e-9):
        points = np.atleast_2d(points)
        mask = np.logical_and(
            self.pos - tol <= points, points <= self.pos + self.side + tol
        )
        return np.all(mask, axis=1)

    def todict(self):
        return {"shape": self.name, "side": self.side, "pos": self.pos.tolist()}


class Disk(AbstractShape):
    """Open disk of the given radius. Faces need all corners at distance < radius.

    Examples
    --------
    >>> d = Disk(1.0)
    >>> len(d.faces(1.0))
    0
    >>> len(d.faces(0.5))
    4
    """

    name = "disk"

    def __init__(self, radius=1.0, pos=None):
        super().__init__(pos)
        if radius <= 0:
            raise ParameterError(f"disk radius must be positive, got {radius}")
        self.radius = float(radius)

    @property
    def center(self) -> np.ndarray:
        return self.pos

    def limits(self):
        rad = np.full(2, self.radius)
        lims = self.pos + np.array([-rad, +rad])
        return lims.T

    def contains(self, points, tol=0.0):
        points = np.atleast_2d(points)
        dists = np.sqrt(np.sum(np.square(points - self.pos), axis=1))
        return dists < self.radius + tol

    def todict(self):
        return {"shape": self.name, "radius": self.radius, "pos": self.pos.tolist()}


class FaceList(AbstractShape):
    """Explicit list of integer face indices. The mesh only scales coordinates."""

    name = "faces"

    def __init__(self, faces: Iterable[Sequence[int]]):
        super().__init__()
        self.face_list = sorted({(int(f[0]), int(f[1])) for f in faces})

    def limits(self):
        if not self.face_list:
            return np.zeros((2, 2))
        arr = np.array(self.face_list)
        return np.array([arr.min(axis=0), arr.max(axis=0) + 1]).T

    def contains(self, points, tol=0.0):  # pragma: no cover
        raise NotImplementedError("FaceList has no continuum interior")

    def faces(self, mesh: float = 1.0) -> List[Face]:
        return list(self.face_list)

    def todict(self):
        return {"shape": self.name, "list": [list(f) for f in self.face_list]}


def shape_from_dict(params: dict) -> Tuple[AbstractShape, float]:
    """Parses a JSON domain document into a shape and a mesh size.

    Accepted documents are ``{"shape": "square", "n": 8, "mesh": 0.125}``,
    ``{"shape": "disk", "radius": 1.0, "mesh": 0.0078125}`` and
    ``{"shape": "faces", "list": [[0, 0], ...]}``. A square given by ``n``
    spans ``n * mesh`` in each direction.

    Returns
    -------
    shape : AbstractShape
    mesh : float
    """
    kind = params.get("shape")
    mesh = float(params.get("mesh", 1.0))
    if kind == "square":
        if "n" in params:
            n = int(params["n"])
            if n < 1:
                raise ParameterError(f"square needs n >= 1, got {n}")
            side = n * mesh
        else:
            side = float(params.get("side", 1.0))
        return Square(side, params.get("pos")), mesh
    elif kind == "disk":
        radius = float(params.get("radius", 1.0))
        if radius < mesh:
            raise ParameterError(
                f"disk radius {radius} smaller than mesh {mesh}",
                "a disk needs radius >= mesh to contain a face",
            )
        return Disk(radius, params.get("pos")), mesh
    elif kind == "faces":
        return FaceList(params.get("list", [])), mesh
    raise ParameterError(
        f"unknown shape '{kind}'", "use one of 'square', 'disk' or 'faces'"
    )


def square_faces(n: int) -> List[Face]:
    """Faces of the ``n x n`` block with lower-left face ``(0, 0)``."""
    return [(i, j) for i in range(n) for j in range(n)]


def fixed_polyominoes(max_faces: int) -> List[Tuple[Face, ...]]:
    """All connected face sets with at most ``max_faces`` faces, up to translation.

    Every set is normalized so that its smallest coordinates are zero and
    returned sorted. Rotations and reflections count as different sets.

    Examples
    --------
    >>> [len(fixed_polyominoes(n)) for n in (1, 2, 3)]
    [1, 3, 9]
    """
    if max_faces < 1:
        return list()
    level = {((0, 0),)}
    out = sorted(level)
    for _ in range(max_faces - 1):
        grown = set()
        for faces in level:
            present = set(faces)
            for i, j in faces:
                for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
                    if nb in present:
                        continue
                    new = present | {nb}
                    x0 = min(f[0] for f in new)
                    y0 = min(f[1] for f in new)
                    grown.add(tuple(sorted((x - x0, y - y0) for x, y in new)))
        level = grown
        out.extend(sorted(level))
    return out


def random_polyomino(rng: np.random.Generator, size: int) -> Tuple[Face, ...]:
    """Connected face set of ``size`` faces grown from ``(0, 0)``.

    Each step adds a face chosen uniformly among the free neighbors of the
    current set (counted with multiplicity). The result is normalized like
    :func:`fixed_polyominoes`.
    """
    if size < 1:
        raise ParameterError(f"polyomino size must be positive, got {size}")
    faces = {(0, 0)}
    while len(faces) < size:
        rim = [
            nb
            for i, j in sorted(faces)
            for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1))
            if nb not in faces
        ]
        faces.add(rim[int(rng.integers(len(rim)))])
    x0 = min(f[0] for f in faces)
    y0 = min(f[1] for f in faces)
    return tuple(sorted((x - x0, y - y0) for x, y in faces))
