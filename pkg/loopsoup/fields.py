# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Observable fields of loop soups: windings, spins, winding fields and occupation.

Dual vertices are the faces of the domain. A loop lives on primal vertices, so
a face centre is never on the trace of a loop and winding numbers are always
well defined.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Set, TextIO, Tuple, Union
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from .lattice import DiscreteDomain, defect_line
from .utils import ParameterError

__all__ = [
    "WindingField",
    "SpinField",
    "CutoffWindingField",
    "OccupationField",
    "winding_number",
    "winding_number_by_angles",
    "loop_winding_field",
    "winding_field",
    "spin_field",
    "cutoff_winding_field",
    "visit_counts",
    "occupation_field",
    "edge_parities",
    "spin_from_parities",
    "loop_hull",
    "write_field_csv",
]

logger = logging.getLogger(__name__)

Face = Tuple[int, int]


@dataclass
class _FaceField:
    domain: DiscreteDomain = field(repr=False)
    values: np.ndarray

    def __getitem__(self, face):
        return self.values[self.domain.face_index(face)]

    def grid(self, fill=np.nan) -> np.ndarray:
        """Values on the bounding grid of the faces, ``grid[i - i0, j - j0]``."""
        faces = self.domain.face_array()
        lo = faces.min(axis=0)
        shape = tuple(faces.max(axis=0) - lo + 1)
        dtype = np.result_type(self.values.dtype, np.asarray(fill).dtype)
        out = np.full(shape, fill, dtype=dtype)
        out[faces[:, 0] - lo[0], faces[:, 1] - lo[1]] = self.values
        return out


class WindingField(_FaceField):
    """Total winding ``N(z)`` of the soup around every face."""


class SpinField(_FaceField):
    """Spin ``sigma(z) = (-1)^N(z)`` of every face."""


@dataclass
class CutoffWindingField(_FaceField):
    """Winding field ``exp(i beta N_delta(z))`` of the loops wider than ``delta``."""

    beta: float = np.pi
    delta: float = 0.0


class OccupationField(_FaceField):
    """Randomized local time ``T_x`` per primal vertex, ordered like the vertices."""

    def __getitem__(self, vertex):
        return self.values[self.domain.vertex_index(vertex)]


def winding_number(loop, face: Sequence[int]) -> int:
    """Winding number of a loop around the centre of a face.

    Counts the signed crossings of the horizontal ray running east from the
    face centre: a northward step on the vertical line ``x > i`` between
    heights ``j`` and ``j + 1`` counts ``+1``, a southward one ``-1``.

    Parameters
    ----------
    loop : LatticeLoop
    face : (int, int)

    Returns
    -------
    winding : int

    Examples
    --------
    >>> from loopsoup.sampler import LatticeLoop
    >>> winding_number(LatticeLoop((0, 0), "ENWS"), (0, 0))
    1
    """
    i, j = int(face[0]), int(face[1])
    box = loop.bbox()
    if not (box[0, 0] <= i < box[0, 1] and box[1, 0] <= j < box[1, 1]):
        return 0
    verts = loop.vertices()
    moves = loop.moves()
    vertical = moves[:, 0] == 0
    x = verts[:, 0]
    y_low = np.where(moves[:, 1] > 0, verts[:, 1], verts[:, 1] - 1)
    mask = vertical & (x > i) & (y_low == j)
    return int(np.sum(moves[mask, 1]))


def winding_number_by_angles(loop, point: Sequence[float]) -> int:
    """Winding number from the sum of angle increments along the loop polyline."""
    verts = loop.vertices().astype(float) - np.asarray(point, dtype=float)
    nxt = np.roll(verts, -1, axis=0)
    cross = verts[:, 0] * nxt[:, 1] - verts[:, 1] * nxt[:, 0]
    dot = np.sum(verts * nxt, axis=1)
    total = np.sum(np.arctan2(cross, dot))
    return int(np.rint(total / (2 * np.pi)))


def loop_winding_field(loop) -> Tuple[np.ndarray, np.ndarray]:
    """Winding numbers of a loop around all faces of its bounding box.

    Returns
    -------
    origin : (2, ) np.ndarray
        Index of the lower-left face of the box.
    windings : (W, H) np.ndarray
        ``windings[i, j]`` is the winding around face ``origin + (i, j)``.
    """
    box = loop.bbox()
    origin = box[:, 0]
    width, height = box[:, 1] - box[:, 0]
    diff = np.zeros((max(width, 1), max(height, 1)), dtype=np.int64)
    if width == 0 or height == 0:
        return origin, diff
    verts = loop.vertices()
    moves = loop.moves()
    vertical = moves[:, 0] == 0
    x = verts[vertical, 0] - origin[0]
    dy = moves[vertical, 1]
    y_low = np.where(dy > 0, verts[vertical, 1], verts[vertical, 1] - 1) - origin[1]
    # a crossing on the line x contributes to the faces i <= x - 1
    keep = x >= 1
    np.add.at(diff, (x[keep] - 1, y_low[keep]), dy[keep])
    windings = np.cumsum(diff[::-1], axis=0)[::-1]
    return origin, windings


def winding_field(soup) -> WindingField:
    """Total winding ``N(z) = sum_gamma N_gamma(z)`` of a soup around every face."""
    domain = soup.domain
    faces = domain.face_array()
    lo = faces.min(axis=0)
    hi = faces.max(axis=0)
    grid = np.zeros(tuple(hi - lo + 1), dtype=np.int64)
    for loop in soup.loops:
        origin, windings = loop_winding_field(loop)
        if not np.any(windings):
            continue
        i0, j0 = origin - lo
        w, h = windings.shape
        grid[i0 : i0 + w, j0 : j0 + h] += windings
    return WindingField(domain, grid[faces[:, 0] - lo[0], faces[:, 1] - lo[1]])


def spin_field(soup) -> SpinField:
    """Spin field ``sigma(z) = (-1)^N(z)`` of a soup."""
    windings = winding_field(soup).values
    spins = np.where(windings % 2 == 0, 1, -1).astype(np.int8)
    return SpinField(soup.domain, spins)


def cutoff_winding_field(soup, beta: float, delta: float = 0.0) -> CutoffWindingField:
    """Winding field ``V(z) = exp(i beta N_delta(z))`` with a diameter cutoff.

    Only loops whose L-infinity diameter in physical units exceeds ``delta``
    contribute to ``N_delta``.

    Parameters
    ----------
    soup : LoopSoup
    beta : float
        The angle, in ``[0, pi]``.
    delta : float, optional
        The cutoff. The default is zero, which keeps all loops.
    """
    if not 0 <= beta <= np.pi:
        raise ParameterError(f"beta must lie in [0, pi], got {beta}")
    if np.isnan(delta) or delta < 0:
        raise ParameterError(f"cutoff delta must be non-negative, got {delta}")
    mesh = soup.domain.mesh
    thinned = soup.filter(lambda loop: loop.diameter(mesh) > delta)
    windings = winding_field(thinned).values
    values = np.exp(1j * beta * windings)
    return CutoffWindingField(soup.domain, values, float(beta), float(delta))


def visit_counts(soup) -> np.ndarray:
    """Number of visits of the soup's loops to every vertex."""
    domain = soup.domain
    counts = np.zeros(domain.num_vertices, dtype=np.int64)
    for loop in soup.loops:
        for x, y in loop.vertices().tolist():
            counts[domain.vertex_index((x, y))] += 1
    return counts


def occupation_field(
    soup, seed: int = 0, replica: int = 0, rng=None
) -> OccupationField:
    """Occupation field ``T_x = Gamma(N_x, 1) + Gamma(lam, 1)``.

    Every visit contributes an independent mean-one exponential holding time.
    The second term accounts for the one-point loops of intensity ``lam`` at
    every vertex.
    """
    from .sampler import make_rng

    rng = make_rng(seed, replica) if rng is None else rng
    counts = visit_counts(soup)
    visits = np.where(counts > 0, rng.gamma(np.maximum(counts, 1), 1.0), 0.0)
    extra = rng.gamma(soup.lam, 1.0, size=len(counts)) if soup.lam > 0 else 0.0
    return OccupationField(soup.domain, visits + extra)


def edge_parities(soup) -> np.ndarray:
    """Parity of the number of unoriented traversals of every primal edge."""
    domain = soup.domain
    counts = np.zeros(domain.num_edges, dtype=np.int64)
    for loop in soup.loops:
        for edge in loop.edges():
            counts[domain.edge_index(edge)] += 1
    return (counts % 2).astype(np.int8)


def spin_from_parities(
    parities: np.ndarray,
    domain: DiscreteDomain,
    face: Sequence[int],
    strategy: str = "straight-east",
) -> int:
    """Reconstructs the spin of a face from the odd edges crossed by a defect line."""
    line = defect_line(domain, face, strategy)
    odd = int(np.sum(parities[line.edge_indices(domain)]))
    return -1 if odd % 2 else 1


def loop_hull(loop) -> Set[Face]:
    """Faces covered by a loop.

    A face is covered when it cannot be reached from outside the loop's
    bounding box by dual moves that do not cross an edge of the loop.
    """
    box = loop.bbox()
    x0, y0 = box[:, 0] - 1
    width, height = box[:, 1] - box[:, 0] + 2
    if width <= 2 or height <= 2:
        return set()
    blocked = set(loop.edges())

    def node(i, j):
        return (i - x0) * height + (j - y0)

    rows, cols = list(), list()
    for i in range(x0, x0 + width):
        for j in range(y0, y0 + height):
            # east neighbour shares the vertical edge x = i + 1
            if i + 1 < x0 + width and ((i + 1, j), (i + 1, j + 1)) not in blocked:
                rows.append(node(i, j))
                cols.append(node(i + 1, j))
            # north neighbour shares the horizontal edge y = j + 1
            if j + 1 < y0 + height and ((i, j + 1), (i + 1, j + 1)) not in blocked:
                rows.append(node(i, j))
                cols.append(node(i, j + 1))
    size = width * height
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    _, labels = connected_components(graph, directed=False)
    outside = labels[node(x0, y0)]
    hull = set()
    for i in range(x0 + 1, x0 + width - 1):
        for j in range(y0 + 1, y0 + height - 1):
            if labels[node(i, j)] != outside:
                hull.add((i, j))
    return hull


def write_field_csv(
    fld: Union[_FaceField, OccupationField],
    file: Union[str, Path, TextIO],
    complex_pairs: bool = True,
) -> None:
    """Writes a field as CSV rows ``i, j, x, y, value``.

    Complex fields get the columns ``re, im``. Face fields are written at face
    centres, occupation fields at vertices.
    ``file`` is a path or an open text stream.
    """
    domain = fld.domain
    if isinstance(fld, OccupationField):
        index = domain.vertex_array()
        pos = domain.positions()
    else:
        index = domain.face_array()
        pos = domain.face_centers()
    values = np.asarray(fld.values)
    is_complex = np.iscomplexobj(values)
    header = ["i", "j", "x", "y"]
    header += ["re", "im"] if is_complex and complex_pairs else ["value"]
    if hasattr(file, "write"):
        _write_rows(file, header, index, pos, values, is_complex and complex_pairs)
    else:
        with open(file, "w", newline="") as fh:
            _write_rows(fh, header, index, pos, values, is_complex and complex_pairs)


def _write_rows(fh, header, index, pos, values, pairs):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for (i, j), (x, y), v in zip(index.tolist(), pos.tolist(), values.tolist()):
        row = [i, j, repr(x), repr(y)]
        if pairs:
            row += [repr(v.real), repr(v.imag)]
        else:
            row.append(repr(v))
        writer.writerow(row)
