# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Discrete domains, their dual graphs, defect lines and transition matrices."""

import json
import hashlib
import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union
import numpy as np
from scipy.sparse import csr_matrix, identity
from .shape import AbstractShape, FaceList, shape_from_dict
from .utils import (
    DefectLineError,
    DisconnectedDomainError,
    DomainError,
    EmptyDomainError,
    NumericalError,
    ParameterError,
)

__all__ = [
    "OUTER",
    "DiscreteDomain",
    "DualGraph",
    "DefectLine",
    "TransitionMatrix",
    "build_domain",
    "build_transition_matrix",
    "defect_line",
    "spectral_radius",
]

logger = logging.getLogger(__name__)

Face = Tuple[int, int]
Vertex = Tuple[int, int]
Edge = Tuple[Vertex, Vertex]

OUTER = "outer"

# Face sides in the order east, north, west, south. Each entry holds the
# offsets of the two edge endpoints relative to the lower-left corner and the
# outward direction of the side.
_SIDES = (
    ((1, 0), (1, 1), (1, 0)),
    ((0, 1), (1, 1), (0, 1)),
    ((0, 0), (0, 1), (-1, 0)),
    ((0, 0), (1, 0), (0, -1)),
)
_MOVES = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}


def face_sides(face: Face) -> List[Tuple[Edge, Tuple[int, int]]]:
    """Returns the four sides of a face with their outward directions."""
    i, j = face
    sides = list()
    for (dx0, dy0), (dx1, dy1), direction in _SIDES:
        edge = ((i + dx0, j + dy0), (i + dx1, j + dy1))
        sides.append((edge, direction))
    return sides


def edge_faces(edge: Edge) -> Tuple[Face, Face]:
    """Returns the two lattice faces on either side of a primal edge."""
    (x0, y0), (x1, y1) = edge
    if y0 == y1:
        return (x0, y0), (x0, y0 - 1)
    return (x0, y0), (x0 - 1, y0)


def _connected_components(faces: Sequence[Face]) -> List[List[Face]]:
    remaining = set(faces)
    components = list()
    for start in sorted(faces):
        if start not in remaining:
            continue
        remaining.discard(start)
        comp = [start]
        queue = deque([start])
        while queue:
            i, j = queue.popleft()
            for di, dj in _MOVES.values():
                nb = (i + di, j + dj)
                if nb in remaining:
                    remaining.discard(nb)
                    comp.append(nb)
                    queue.append(nb)
        components.append(sorted(comp))
    return components


class DiscreteDomain:
    """Finite edge-connected union of faces of the mesh-``a`` square lattice.

    Faces, vertices and edges are stored in integer lattice coordinates and are
    scaled by ``mesh`` only when physical positions are requested. The primal
    edges are exactly the sides of the faces, vertices are their corners.

    Parameters
    ----------
    faces : Iterable of (int, int)
        Lower-left corner indices of the faces.
    mesh : float, optional
        The lattice spacing ``a``. The default is ``1``.
    shape : AbstractShape, optional
        The continuum shape the domain was discretized from, if any.

    Examples
    --------
    >>> dom = DiscreteDomain([(0, 0), (1, 0), (0, 1), (1, 1)])
    >>> dom
    DiscreteDomain(faces: 4, vertices: 9, edges: 12, mesh: 1.0)
    """

    def __init__(
        self,
        faces: Iterable[Sequence[int]],
        mesh: float = 1.0,
        shape: Optional[AbstractShape] = None,
    ):
        faces = sorted({(int(f[0]), int(f[1])) for f in faces})
        if not faces:
            raise EmptyDomainError()
        if mesh <= 0:
            raise ParameterError(f"mesh must be positive, got {mesh}")
        components = _connected_components(faces)
        if len(components) > 1:
            raise DisconnectedDomainError(components)

        edges = set()
        for face in faces:
            for edge, _ in face_sides(face):
                edges.add(edge)
        vertices = sorted({v for e in edges for v in e})
        vindex = {v: k for k, v in enumerate(vertices)}
        edges = sorted(edges)

        self.mesh = float(mesh)
        self.shape = shape
        self._faces = tuple(faces)
        self._vertices = tuple(vertices)
        self._edges = tuple(edges)
        self._face_index = {f: k for k, f in enumerate(faces)}
        self._vertex_index = vindex
        self._edge_index = {e: k for k, e in enumerate(edges)}

        boundary = set()
        for x, y in vertices:
            for dx, dy in _MOVES.values():
                nb = (x + dx, y + dy)
                if nb not in vindex:
                    boundary.add(nb)
        self._boundary = tuple(sorted(boundary))

        pairs = np.array([[vindex[u], vindex[v]] for u, v in edges], dtype=np.int64)
        pairs.flags.writeable = False
        self._pairs = pairs
        self._dual = None
        self._key = None
        logger.debug(
            "Built domain with %d faces, %d vertices, %d edges (mesh %s)",
            len(faces), len(vertices), len(edges), mesh,
        )

    # ----------------------------------------------------------------------------------

    @classmethod
    def from_shape(cls, shape: AbstractShape, mesh: float) -> "DiscreteDomain":
        """Largest discrete domain at the given mesh contained in a continuum shape."""
        return cls(shape.faces(mesh), mesh, shape=shape)

    @property
    def faces(self) -> Tuple[Face, ...]:
        return self._faces

    @property
    def vertices(self) -> Tuple[Vertex, ...]:
        return self._vertices

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def boundary_vertices(self) -> Tuple[Vertex, ...]:
        """Lattice vertices at graph distance one outside the domain."""
        return self._boundary

    @property
    def num_faces(self) -> int:
        return len(self._faces)

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    @property
    def euler_characteristic(self) -> int:
        """``F - E + V``, equal to one for simply connected domains."""
        return self.num_faces - self.num_edges + self.num_vertices

    @property
    def edge_pairs(self) -> np.ndarray:
        """(E, 2) array of vertex indices of the edges with ``u < v``."""
        return self._pairs

    @property
    def key(self) -> str:
        """Hash of the face set and mesh, used as cache key."""
        if self._key is None:
            data = json.dumps({"mesh": self.mesh, "faces": self._faces})
            self._key = hashlib.md5(data.encode("utf-8")).hexdigest()
        return self._key

    def face_index(self, face: Sequence[int]) -> int:
        try:
            return self._face_index[(int(face[0]), int(face[1]))]
        except KeyError:
            raise DomainError(f"face {tuple(face)} is not part of the domain") from None

    def vertex_index(self, vertex: Sequence[int]) -> int:
        try:
            return self._vertex_index[(int(vertex[0]), int(vertex[1]))]
        except KeyError:
            msg = f"vertex {tuple(vertex)} is not part of the domain"
            raise DomainError(msg) from None

    def edge_index(self, edge: Edge) -> Optional[int]:
        """Index of a primal edge given by its endpoints, ``None`` if it is missing."""
        u, v = (tuple(edge[0]), tuple(edge[1]))
        if v < u:
            u, v = v, u
        return self._edge_index.get((u, v))

    def has_face(self, face: Sequence[int]) -> bool:
        return (int(face[0]), int(face[1])) in self._face_index

    def has_vertex(self, vertex: Sequence[int]) -> bool:
        return (int(vertex[0]), int(vertex[1])) in self._vertex_index

    def face_array(self) -> np.ndarray:
        return np.array(self._faces, dtype=np.int64)

    def vertex_array(self) -> np.ndarray:
        return np.array(self._vertices, dtype=np.int64)

    def face_centers(self) -> np.ndarray:
        """Physical positions of the face centres."""
        return self.mesh * (self.face_array() + 0.5)

    def positions(self) -> np.ndarray:
        """Physical positions of the vertices."""
        return self.mesh * self.vertex_array()

    def limits(self) -> np.ndarray:
        """Physical limits as a (2, 2) array of [min, max] rows."""
        pos = self.positions()
        return np.array([np.min(pos, axis=0), np.max(pos, axis=0)]).T

    def diameter(self) -> float:
        """L-infinity diameter of the domain in physical units."""
        lims = self.limits()
        return float(np.max(lims[:, 1] - lims[:, 0]))

    def closest_face(self, point: Sequence[float]) -> Face:
        """Face whose centre is closest to a physical point.

        Ties are broken by the lexicographically smallest face index.
        """
        centers = self.face_centers()
        dists = np.hypot(centers[:, 0] - point[0], centers[:, 1] - point[1])
        best = np.min(dists)
        idx = int(np.flatnonzero(dists <= best + 1e-12 * max(1.0, best))[0])
        return self._faces[idx]

    def neighbor_pairs(self, unique: bool = False) -> np.ndarray:
        """Returns all ordered pairs of vertices joined by a primal edge.

        Parameters
        ----------
        unique : bool, optional
            If True, only pairs with ``i < j`` are returned. The default is False.

        Returns
        -------
        pairs : (N, 2) np.ndarray
        """
        if unique:
            return self._pairs
        return np.concatenate([self._pairs, self._pairs[:, ::-1]], axis=0)

    def adjacency_matrix(self) -> csr_matrix:
        """Sparse adjacency matrix of the primal graph."""
        rows, cols = self.neighbor_pairs().T
        data = np.ones(len(rows), dtype=np.int8)
        n = self.num_vertices
        return csr_matrix((data, (rows, cols)), shape=(n, n))

    def neighbor_table(self) -> np.ndarray:
        """(V, 4) table of neighbour vertex indices, padded with ``V``."""
        n = self.num_vertices
        table = np.full((n, 4), n, dtype=np.int64)
        counts = np.zeros(n, dtype=np.int64)
        for u, v in self.neighbor_pairs():
            table[u, counts[u]] = v
            counts[u] += 1
        return table

    def interior_vertices(self) -> np.ndarray:
        """Indices of the vertices whose four incident faces belong to the domain."""
        out = list()
        for k, (x, y) in enumerate(self._vertices):
            incident = ((x, y), (x - 1, y), (x, y - 1), (x - 1, y - 1))
            if all(f in self._face_index for f in incident):
                out.append(k)
        return np.array(out, dtype=np.int64)

    def vertex_faces(self) -> List[List[int]]:
        """Indices of the faces incident to every vertex."""
        out = list()
        for x, y in self._vertices:
            incident = ((x, y), (x - 1, y), (x, y - 1), (x - 1, y - 1))
            out.append([self._face_index[f] for f in incident if f in self._face_index])
        return out

    def issubdomain(self, other: "DiscreteDomain") -> bool:
        """Checks if this domain is contained in ``other``."""
        return set(self._faces) <= set(other.faces)

    def subdomain(self, faces: Iterable[Sequence[int]]) -> "DiscreteDomain":
        """Builds a domain from a subset of the faces at the same mesh."""
        faces = [tuple(f) for f in faces]
        missing = [f for f in faces if not self.has_face(f)]
        if missing:
            raise DomainError(f"faces {missing[:4]} are not part of the domain")
        return DiscreteDomain(faces, self.mesh)

    def dual(self) -> "DualGraph":
        """DualGraph : The dual graph of the domain."""
        if self._dual is None:
            self._dual = DualGraph(self)
        return self._dual

    def todict(self) -> dict:
        """Creates a dictionary describing the domain."""
        if self.shape is not None and not isinstance(self.shape, FaceList):
            d = self.shape.todict()
        else:
            d = {"shape": "faces", "list": [list(f) for f in self._faces]}
        d["mesh"] = self.mesh
        return d

    def __hash__(self):
        return int(self.key, 16)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDomain):
            return NotImplemented
        return self.key == other.key

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(faces: {self.num_faces}, "
            f"vertices: {self.num_vertices}, edges: {self.num_edges}, "
            f"mesh: {self.mesh})"
        )


class DualGraph:
    """Planar dual of a discrete domain.

    The dual vertices are the faces of the domain, indexed like
    ``domain.faces``, plus a single merged outer vertex with index
    ``num_faces``. There is exactly one dual edge per primal edge, stored in the
    same order as ``domain.edges``.
    """

    def __init__(self, domain: DiscreteDomain):
        self.domain = domain
        self.outer = domain.num_faces
        ends = np.empty((domain.num_edges, 2), dtype=np.int64)
        adjacency = [list() for _ in range(domain.num_faces + 1)]
        for k, edge in enumerate(domain.edges):
            f0, f1 = edge_faces(edge)
            a = domain._face_index.get(f0, self.outer)
            b = domain._face_index.get(f1, self.outer)
            ends[k] = a, b
            adjacency[a].append((b, k))
            adjacency[b].append((a, k))
        ends.flags.writeable = False
        self._ends = ends
        self._adjacency = adjacency

    @property
    def num_vertices(self) -> int:
        return self.outer + 1

    @property
    def dual_edges(self) -> np.ndarray:
        """(E, 2) array of dual endpoints; row ``k`` crosses primal edge ``k``."""
        return self._ends

    def neighbors(self, vertex: int) -> List[Tuple[int, int]]:
        """``(dual vertex, primal edge index)`` pairs adjacent to a dual vertex."""
        return list(self._adjacency[vertex])

    def outer_edges(self) -> np.ndarray:
        """Indices of the primal edges on the outer boundary of the domain."""
        return np.flatnonzero(np.any(self._ends == self.outer, axis=1))

    def distances(self) -> np.ndarray:
        """Graph distances of all dual vertices to the outer vertex."""
        dist = np.full(self.num_vertices, -1, dtype=np.int64)
        dist[self.outer] = 0
        queue = deque([self.outer])
        while queue:
            v = queue.popleft()
            for w, _ in self._adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def __repr__(self):
        name = self.__class__.__name__
        return f"{name}(vertices: {self.num_vertices}, edges: {len(self._ends)})"


@dataclass(frozen=True)
class DefectLine:
    """Simple dual path from a marked face to the outer vertex.

    Attributes
    ----------
    face : (int, int)
        The marked face.
    path : tuple of (int, int)
        The faces visited by the path, starting at ``face``. The path ends at
        the outer vertex after the last face.
    crossed_edges : tuple of Edge
        The primal edges crossed by the path, one per dual step.
    directions : tuple of (int, int)
        Direction of each dual step. A primal step ``s`` along a crossed edge
        counts as a positive crossing when ``d x s = +1``, which makes the signed
        crossing count equal to the winding number around ``face``.
    """

    face: Face
    path: Tuple[Face, ...]
    crossed_edges: Tuple[Edge, ...]
    directions: Tuple[Tuple[int, int], ...]

    @property
    def dual_path(self) -> tuple:
        return self.path + (OUTER,)

    def __len__(self):
        return len(self.crossed_edges)

    def validate(self, domain: DiscreteDomain) -> None:
        """Checks that the path is a simple path of the domain's dual graph.

        Raises
        ------
        DefectLineError
        """
        if not self.path or self.path[0] != self.face:
            raise DefectLineError(f"defect line does not start at face {self.face}")
        if len(set(self.path)) != len(self.path):
            raise DefectLineError("defect line is not a simple path")
        if len(set(self.crossed_edges)) != len(self.crossed_edges):
            raise DefectLineError("defect line crosses an edge twice")
        if len(self.crossed_edges) != len(self.path):
            raise DefectLineError("defect line must cross one edge per dual step")
        targets = list(self.path[1:]) + [OUTER]
        for face, edge, target in zip(self.path, self.crossed_edges, targets):
            if not domain.has_face(face):
                raise DefectLineError(
                    f"defect line leaves the dual graph at face {face}",
                    "defect lines must run through faces of the domain",
                )
            if domain.edge_index(edge) is None:
                raise DefectLineError(f"crossed edge {edge} is not a domain edge")
            f0, f1 = edge_faces(edge)
            other = f1 if f0 == face else f0
            if face not in (f0, f1):
                raise DefectLineError(f"edge {edge} is not a side of face {face}")
            if target == OUTER:
                if domain.has_face(other):
                    raise DefectLineError(
                        f"defect line ends at interior edge {edge}",
                        "the last step must cross a boundary edge",
                    )
            elif other != target:
                raise DefectLineError(f"faces {face} and {target} do not share {edge}")

    def edge_indices(self, domain: DiscreteDomain) -> np.ndarray:
        indices = [domain.edge_index(e) for e in self.crossed_edges]
        return np.array(indices, dtype=np.int64)

    def orientations(self) -> np.ndarray:
        """Sign of the step from the lower to the higher end of each crossed edge."""
        signs = list()
        for ((x0, y0), (x1, y1)), (dx, dy) in zip(self.crossed_edges, self.directions):
            sx, sy = x1 - x0, y1 - y0
            signs.append(dx * sy - dy * sx)
        return np.array(signs, dtype=np.int64)

    def todict(self) -> dict:
        return {
            "face": list(self.face),
            "path": [list(f) for f in self.path],
            "crossed_edges": [[list(u), list(v)] for u, v in self.crossed_edges],
        }


def _line_from_faces(domain: DiscreteDomain, path: Sequence[Face]) -> DefectLine:
    """Defect line through consecutive faces, leaving through the last one."""
    edges, directions = list(), list()
    for k, face in enumerate(path):
        sides = face_sides(face)
        if k + 1 < len(path):
            nxt = path[k + 1]
            step = (nxt[0] - face[0], nxt[1] - face[1])
            edge = next(e for e, d in sides if d == step)
        else:
            # leave through the first side (E, N, W, S) that borders the outside
            edge, step = next(
                (e, d)
                for e, d in sides
                if not domain.has_face((face[0] + d[0], face[1] + d[1]))
            )
        edges.append(edge)
        directions.append(step)
    return DefectLine(path[0], tuple(path), tuple(edges), tuple(directions))


def _straight_east(domain: DiscreteDomain, face: Face) -> DefectLine:
    i, j = face
    path = [face]
    while domain.has_face((i + 1, j)):
        i += 1
        path.append((i, j))
    edges, directions = list(), list()
    for fi, fj in path:
        edges.append(((fi + 1, fj), (fi + 1, fj + 1)))
        directions.append((1, 0))
    return DefectLine(face, tuple(path), tuple(edges), tuple(directions))


def _shortest(domain: DiscreteDomain, face: Face) -> DefectLine:
    dual = domain.dual()
    start = domain.face_index(face)
    parent = {start: None}
    queue = deque([start])
    end = None
    while queue:
        v = queue.popleft()
        if v == dual.outer:
            end = v
            break
        # deterministic exploration order: sides are stored E, N, W, S per face
        f = domain.faces[v]
        for _, d in face_sides(f):
            nb = (f[0] + d[0], f[1] + d[1])
            w = domain._face_index.get(nb, dual.outer)
            if w not in parent:
                parent[w] = v
                queue.append(w)
    # walk back from the outer vertex
    chain = list()
    v = parent[end]
    while v is not None:
        chain.append(domain.faces[v])
        v = parent[v]
    return _line_from_faces(domain, chain[::-1])


def defect_line(
    domain: DiscreteDomain, face: Sequence[int], strategy: str = "straight-east"
) -> DefectLine:
    """Draws a simple dual path from a face to the outer vertex.

    Parameters
    ----------
    domain : DiscreteDomain
    face : (int, int)
        The marked face, must belong to the domain.
    strategy : {"straight-east", "shortest"}, optional
        ``"straight-east"`` follows the horizontal ray east of the face until it
        leaves the domain, ``"shortest"`` is a breadth-first shortest path in the
        dual graph. The default is ``"straight-east"``.

    Returns
    -------
    line : DefectLine

    Examples
    --------
    >>> dom = build_domain({"shape": "square", "n": 3, "mesh": 1})
    >>> len(defect_line(dom, (1, 1)))
    2
    """
    face = (int(face[0]), int(face[1]))
    if not domain.has_face(face):
        raise DefectLineError(
            f"face {face} is not part of the domain", "marked faces must be interior"
        )
    if strategy == "straight-east":
        line = _straight_east(domain, face)
    elif strategy == "shortest":
        line = _shortest(domain, face)
    else:
        raise ParameterError(
            f"unknown defect line strategy '{strategy}'",
            "use 'straight-east' or 'shortest'",
        )
    return line


def build_domain(
    params: Union[dict, str, AbstractShape], mesh: float = None
) -> DiscreteDomain:
    """Builds a discrete domain from a shape descriptor.

    Parameters
    ----------
    params : dict or str or AbstractShape
        A JSON-like document (``{"shape": "square", "n": 8, "mesh": 0.125}``), a
        short string (``"square:8"``, ``"disk:1.0"``) or a shape instance.
        Short square strings describe the unit square, i.e. mesh ``1/n``.
    mesh : float, optional
        Overrides the mesh of the descriptor.

    Returns
    -------
    domain : DiscreteDomain
    """
    if isinstance(params, str):
        params = parse_domain_string(params)
    if isinstance(params, AbstractShape):
        return DiscreteDomain.from_shape(params, 1.0 if mesh is None else mesh)
    params = dict(params)
    if mesh is not None:
        params["mesh"] = mesh
    shape, mesh = shape_from_dict(params)
    return DiscreteDomain.from_shape(shape, mesh)


def parse_domain_string(text: str) -> dict:
    """Parses the short command line form ``kind:size`` of a domain descriptor."""
    kind, _, size = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "square":
            n = int(size or 1)
            return {"shape": "square", "n": n, "mesh": 1.0 / n}
        if kind == "disk":
            return {"shape": "disk", "radius": float(size or 1.0), "mesh": 1.0 / 16}
        if kind == "box":
            n = int(size or 1)
            return {"shape": "square", "n": n, "mesh": 1.0}
    except ValueError:
        raise ParameterError(f"invalid domain size in '{text}'") from None
    raise ParameterError(
        f"unknown domain '{text}'", "use 'square:<n>', 'box:<n>' or 'disk:<radius>'"
    )


class TransitionMatrix:
    """Sub-stochastic step matrix of the (massive) loop measure on a domain.

    Entries are ``1/(4+kappa)`` for every ordered pair of vertices joined by a
    primal edge, multiplied by ``-1`` on twisted edges or by a phase ``e^{+-i theta}``
    when complex phases are attached to the defect lines.
    """

    def __init__(
        self,
        domain: DiscreteDomain,
        matrix: csr_matrix,
        mass: float = 0.0,
        twist: Iterable[int] = (),
        phases: Optional[Tuple[float, ...]] = None,
    ):
        self.domain = domain
        self.matrix = matrix
        self.mass = float(mass)
        self.twist = frozenset(int(e) for e in twist)
        self.phases = phases

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def weight(self) -> float:
        """Magnitude ``1/(4+kappa)`` of the nonzero entries."""
        return 0.0 if np.isinf(self.mass) else 1.0 / (4.0 + self.mass)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix.data)

    @property
    def shape(self):
        return self.matrix.shape

    def abs(self) -> csr_matrix:
        return abs(self.matrix)

    def row_sums(self) -> np.ndarray:
        """Row sums of the absolute values."""
        return np.asarray(self.abs().sum(axis=1)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def one_minus(self):
        """Sparse ``I - P`` in CSC format."""
        eye = identity(self.dimension, dtype=self.matrix.dtype, format="csc")
        return (eye - self.matrix).tocsc()

    def spectral_radius(self, **kwargs) -> float:
        return spectral_radius(self, **kwargs)

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(dim: {self.dimension}, kappa: {self.mass}, "
            f"twisted edges: {len(self.twist)})"
        )


def build_transition_matrix(
    domain: DiscreteDomain,
    twist: Iterable[DefectLine] = (),
    mass: float = 0.0,
    phases: Optional[Sequence[float]] = None,
) -> TransitionMatrix:
    """Builds the (twisted) transition matrix of a domain.

    Parameters
    ----------
    domain : DiscreteDomain
    twist : Iterable of DefectLine, optional
        Defect lines whose crossed edges are sign flipped. An edge crossed by an
        even number of lines is not flipped.
    mass : float, optional
        The killing rate ``kappa >= 0``. The default is zero.
    phases : Sequence of float, optional
        If given, one angle ``beta_j`` per defect line. Instead of a sign flip the
        step across a crossed edge picks up ``exp(+-i beta_j)`` depending on the
        crossing orientation, which gives a Hermitian matrix.

    Returns
    -------
    matrix : TransitionMatrix
    """
    if np.isnan(mass) or mass < 0:
        raise ParameterError(f"mass must be non-negative, got {mass}")
    lines = list(twist)
    for line in lines:
        line.validate(domain)

    n = domain.num_vertices
    weight = 0.0 if np.isinf(mass) else 1.0 / (4.0 + mass)
    pairs = domain.edge_pairs
    values = np.full(len(pairs), weight, dtype=np.float64)

    flipped = set()
    for line in lines:
        flipped ^= set(line.edge_indices(domain).tolist())

    if phases is not None:
        phases = tuple(float(b) for b in phases)
        if len(phases) != len(lines):
            raise ParameterError(
                f"got {len(phases)} phases for {len(lines)} defect lines",
                "pass one angle per defect line",
            )
        theta = np.zeros(len(pairs))
        for line, beta in zip(lines, phases):
            np.add.at(theta, line.edge_indices(domain), beta * line.orientations())
        forward = values * np.exp(1j * theta)
        backward = np.conj(forward)
        dtype = np.complex128
    else:
        if flipped:
            values[sorted(flipped)] *= -1
        forward = backward = values
        dtype = np.float64

    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    data = np.concatenate([forward, backward]).astype(dtype)
    matrix = csr_matrix((data, (rows, cols)), shape=(n, n), dtype=dtype)
    if not np.all(np.isfinite(matrix.data)):
        raise NumericalError("transition matrix has non-finite entries")
    logger.debug(
        "Built transition matrix: dim=%d, kappa=%s, twisted edges=%d",
        n, mass, len(flipped),
    )
    return TransitionMatrix(domain, matrix, mass, flipped, phases)


def spectral_radius(
    matrix: Union[TransitionMatrix, csr_matrix, np.ndarray],
    tol: float = 1e-12,
    maxiter: int = 100_000,
) -> float:
    """Upper bound for the spectral radius of ``|P|`` by power iteration.

    The iteration runs on ``A = (I + |P|) / 2``, whose leading eigenvalue is
    ``(1 + rho) / 2``. For a positive iterate ``v`` the Collatz-Wielandt ratios
    ``(A v)_i / v_i`` enclose that eigenvalue, so their maximum is an upper
    bound at every step. The iteration stops once the enclosure is narrower
    than ``tol``.

    Returns
    -------
    rho : float
        Upper bound for the spectral radius of ``|P|``, and therefore of the
        (twisted) matrix itself.
    """
    mat = matrix.matrix if isinstance(matrix, TransitionMatrix) else matrix
    mat = np.abs(mat) if isinstance(mat, np.ndarray) else csr_matrix(abs(mat))
    n = mat.shape[0]
    if n == 0:
        return 0.0
    row_sum = float(np.max(np.asarray(mat.sum(axis=1))))
    vec = np.ones(n) / np.sqrt(n)
    upper, lower = 1.0, 0.0
    for _ in range(maxiter):
        new = 0.5 * (vec + mat @ vec)
        ratios = new / vec
        upper, lower = float(ratios.max()), float(ratios.min())
        if upper - lower < tol:
            break
        vec = new / np.linalg.norm(new)
    else:
        logger.warning(
            "Power iteration did not close the bound after %d steps (gap %.2g)",
            maxiter,
            upper - lower,
        )
    return max(min(2.0 * upper - 1.0, row_sum), 0.0)
