# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Randomized constructions: loop soups, the DGFF, the dual Ising model and spins.

Every sampler takes an integer ``seed`` and a ``replica`` index. Random numbers
come from counter-based ``Philox`` generators keyed by
``SeedSequence(seed, spawn_key=(replica, ...))``, so a replica is reproducible
on its own, independent of how many replicas run or on which worker.
"""

import os
import json
import time
import logging
import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple, Union
import numpy as np
from scipy import linalg as sla
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackError, eigsh
from scipy.special import logsumexp
from .exact import log_det_one_minus
from .lattice import DiscreteDomain, build_transition_matrix
from .shape import square_faces
from .utils import (
    ArrayLike,
    NumericalError,
    ParameterError,
    cyclic_pairs,
    format_bytes,
    format_duration,
)

__all__ = [
    "TAIL_TOLERANCE",
    "EXACT_ISING_MAX_FACES",
    "WOLFF_SWEEPS",
    "CACHE_LIMIT_BYTES",
    "DENSE_EIGH_LIMIT",
    "SPECTRAL_MODES",
    "make_rng",
    "LatticeLoop",
    "LoopSoup",
    "LoopSampler",
    "DGFFSample",
    "IsingConfig",
    "get_loop_sampler",
    "sample_loop_soup",
    "thin_soup",
    "sample_dgff",
    "dual_couplings",
    "sample_ising_dual",
    "sample_spin_via_dgff_ising",
    "sample_spin_via_dgff_coins",
    "sample_massive_halfplane_field",
]

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-12
EXACT_ISING_MAX_FACES = 20
WOLFF_SWEEPS = 1000
CACHE_LIMIT_BYTES = 2 * 1024**3
DENSE_EIGH_LIMIT = 6_000
SPECTRAL_MODES = 256
WALK_BATCH = 4096
MAX_LOOP_LENGTH = 10_000_000

_MOVES = {"E": (1, 0), "N": (0, 1), "W": (-1, 0), "S": (0, -1)}
_STEP_CHARS = {v: k for k, v in _MOVES.items()}
_REVERSE = {"E": "W", "W": "E", "N": "S", "S": "N"}


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Returns an independent ``Philox`` generator for a seed and a stream key."""
    if seed is None or int(seed) < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed}")
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


# =========================================================================
# Loops and soups
# =========================================================================


@dataclass(frozen=True)
class LatticeLoop:
    """Rooted nearest-neighbour loop given by its root and a string of moves.

    Attributes
    ----------
    root : (int, int)
        Integer lattice coordinates of the root vertex.
    steps : str
        The moves as characters ``"E"``, ``"N"``, ``"W"`` or ``"S"``.

    Examples
    --------
    >>> loop = LatticeLoop((0, 0), "ENWS")
    >>> loop.time_length
    4
    """

    root: Tuple[int, int]
    steps: str

    def __post_init__(self):
        object.__setattr__(self, "root", (int(self.root[0]), int(self.root[1])))
        if not self.steps or any(c not in _MOVES for c in self.steps):
            raise ParameterError(f"invalid loop steps '{self.steps}'")
        if len(self.steps) % 2:
            raise ParameterError("lattice loops have an even number of steps")
        moves = self.moves()
        if np.any(moves.sum(axis=0) != 0):
            raise ParameterError(f"loop '{self.steps}' does not return to its root")

    @classmethod
    def from_vertices(cls, vertices: ArrayLike) -> "LatticeLoop":
        """Builds a loop from the cyclic vertex sequence ``x_0, ..., x_{t-1}``.

        A repeated root at the end of the sequence is accepted.
        """
        verts = np.asarray(vertices, dtype=np.int64)
        if len(verts) > 1 and np.all(verts[0] == verts[-1]):
            verts = verts[:-1]
        diffs = np.diff(np.concatenate([verts, verts[:1]]), axis=0)
        try:
            steps = "".join(_STEP_CHARS[(int(dx), int(dy))] for dx, dy in diffs)
        except KeyError:
            raise ParameterError(
                "consecutive loop vertices must be lattice neighbours"
            ) from None
        return cls(tuple(verts[0]), steps)

    @property
    def time_length(self) -> int:
        return len(self.steps)

    def moves(self) -> np.ndarray:
        """(t, 2) array of the unit moves."""
        return np.array([_MOVES[c] for c in self.steps], dtype=np.int64)

    def vertices(self) -> np.ndarray:
        """(t, 2) array of the visited vertices, starting at the root."""
        moves = self.moves()
        offsets = np.concatenate([[[0, 0]], np.cumsum(moves, axis=0)[:-1]])
        return np.asarray(self.root) + offsets

    def edges(self) -> List[Tuple[Tuple[int, int], Tuple[int, int]]]:
        """Traversed edges as sorted endpoint pairs, one entry per step."""
        verts = [tuple(p) for p in self.vertices().tolist()]
        out = list()
        for u, v in cyclic_pairs(verts):
            out.append((u, v) if u < v else (v, u))
        return out

    def bbox(self) -> np.ndarray:
        """Integer bounding box ``[[xmin, xmax], [ymin, ymax]]`` of the trace."""
        verts = self.vertices()
        return np.array([verts.min(axis=0), verts.max(axis=0)]).T

    def diameter(self, mesh: float = 1.0) -> float:
        """L-infinity diameter of the vertex trace in physical units."""
        box = self.bbox()
        return float(mesh * np.max(box[:, 1] - box[:, 0]))

    def reversed(self) -> "LatticeLoop":
        """The same loop traversed in the opposite direction."""
        steps = "".join(_REVERSE[c] for c in reversed(self.steps))
        return LatticeLoop(self.root, steps)

    def todict(self) -> dict:
        return {"root": list(self.root), "steps": self.steps}

    def __len__(self):
        return len(self.steps)


@dataclass
class LoopSoup:
    """Finite realization of the Poisson loop soup on a domain."""

    domain: DiscreteDomain = field(repr=False)
    loops: List[LatticeLoop]
    lam: float
    kappa: float = 0.0
    seed: Optional[int] = None
    replica: int = 0

    def __len__(self):
        return len(self.loops)

    def __iter__(self) -> Iterator[LatticeLoop]:
        return iter(self.loops)

    def __add__(self, other: "LoopSoup") -> "LoopSoup":
        if other.domain != self.domain:
            raise ParameterError("only soups on the same domain can be merged")
        return LoopSoup(
            self.domain, list(self.loops) + list(other.loops),
            self.lam + other.lam, self.kappa, self.seed, self.replica,
        )

    def filter(self, predicate: Callable[[LatticeLoop], bool]) -> "LoopSoup":
        loops = [loop for loop in self.loops if predicate(loop)]
        return LoopSoup(
            self.domain, loops, self.lam, self.kappa, self.seed, self.replica
        )

    def lengths(self) -> np.ndarray:
        return np.array([loop.time_length for loop in self.loops], dtype=np.int64)

    def dump(self, file: Union[str, Path]) -> None:
        """Writes the loops as JSON lines ``{"root": [i, j], "steps": "NESW..."}``."""
        with open(file, "w") as fh:
            for loop in self.loops:
                fh.write(json.dumps(loop.todict()) + "\n")

    @classmethod
    def load(
        cls,
        file: Union[str, Path],
        domain: DiscreteDomain,
        lam: float,
        kappa: float = 0.0,
        seed: Optional[int] = None,
    ) -> "LoopSoup":
        """Reads a soup written by ``dump``."""
        loops = list()
        with open(file, "r") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    data = json.loads(line)
                    loops.append(LatticeLoop(tuple(data["root"]), data["steps"]))
        return cls(domain, loops, lam, kappa, seed)


# =========================================================================
# Loop sampler
# =========================================================================


class _ByteLRU:
    """Thread safe LRU cache of arrays bounded by their total size in bytes."""

    def __init__(self, limit: int = CACHE_LIMIT_BYTES):
        self.limit = limit
        self.nbytes = 0
        self._data = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def put(self, key, value: np.ndarray):
        with self._lock:
            if key in self._data:
                return
            self._data[key] = value
            self.nbytes += value.nbytes
            while self.nbytes > self.limit and len(self._data) > 1:
                _, old = self._data.popitem(last=False)
                self.nbytes -= old.nbytes
                size = format_bytes(self.nbytes)
                logger.debug("Evicted cache entry, cache size %s", size)

    def __len__(self):
        return len(self._data)


class LoopSampler:
    """Exact sampler of rooted loops from the loop measure of a domain.

    A loop is drawn in three stages: the length ``t`` with probability
    proportional to ``tr(P^t) / t``, the root ``x`` proportional to
    ``(P^t)_xx`` and the path as a random walk bridge whose step from ``y``
    to ``y'`` at time ``s`` has probability
    ``P_yy' (P^(t-s-1))_y'x / (P^(t-s))_yx``.

    Up to ``dense_limit`` vertices, traces and diagonals of matrix powers come
    from one dense eigendecomposition of ``P``. Larger domains only keep the
    ``num_modes`` eigenpairs closest to one, found by shift-invert Lanczos.
    The lattice is bipartite, so the spectrum is symmetric and every kept
    eigenvalue ``l`` stands for the pair ``+-l``. Past ``short_length`` steps
    the other eigenvalues contribute less than ``tail_tolerance`` of the total
    mass; loops up to ``short_length`` steps are drawn by thinning killed
    random walks instead (see ``short_walks``). The total mass then comes from
    a sparse LU factorization of ``I - P``.

    The bridge columns ``P^m e_x`` are computed with sparse products and
    kept only at checkpoints, blocks between checkpoints are recomputed in
    reverse order.

    Parameters
    ----------
    domain : DiscreteDomain
    kappa : float, optional
        The killing rate. The default is zero.
    tail_tolerance : float, optional
        The length distribution is truncated at the first length whose tail
        mass is below ``tail_tolerance`` times the total mass.
    cache_limit : int, optional
        Memory limit in bytes shared by the eigenvectors and the cached
        diagonals of ``P^t``.
    dense_limit : int, optional
        Largest number of vertices decomposed densely.
    num_modes : int, optional
        Number of eigenpairs kept above ``dense_limit``.
    """

    def __init__(
        self,
        domain: DiscreteDomain,
        kappa: float = 0.0,
        tail_tolerance: float = TAIL_TOLERANCE,
        cache_limit: int = CACHE_LIMIT_BYTES,
        dense_limit: int = DENSE_EIGH_LIMIT,
        num_modes: int = SPECTRAL_MODES,
    ):
        if np.isnan(kappa) or kappa < 0:
            raise ParameterError(f"kappa must be non-negative, got {kappa}")
        self.domain = domain
        self.kappa = float(kappa)
        self.tail_tolerance = tail_tolerance
        self.cache_limit = int(cache_limit)
        self.dense = domain.num_vertices <= dense_limit
        self.num_modes = int(num_modes)
        tm = build_transition_matrix(domain, mass=kappa)
        self.matrix = tm.matrix.tocsr()
        self.weight = tm.weight
        self._table = domain.neighbor_table()
        self._diagonals = _ByteLRU(self.cache_limit)
        self._lock = threading.RLock()
        self._eigvals = None
        self._eigvecs_sq = None
        self._cdf = None
        self._total = None
        self._short = None

    @property
    def num_vertices(self) -> int:
        return self.domain.num_vertices

    def _cache_file(self) -> Optional[Path]:
        root = os.environ.get("LOOPSOUP_CACHE_DIR")
        if not root:
            return None
        path = Path(root)
        path.mkdir(parents=True, exist_ok=True)
        name = f"{self.domain.key}-{self.kappa:g}"
        if self.dense:
            return path / f"eigh-{name}.npz"
        return path / f"eigsh-{name}-{self._num_kept_modes()}.npz"

    def _num_kept_modes(self) -> int:
        n = self.num_vertices
        # eigenvectors may take a quarter of the memory limit
        by_memory = self.cache_limit // (4 * 8 * n)
        return int(max(1, min(self.num_modes, n // 4, by_memory)))

    def _eigenpairs(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.dense:
            return sla.eigh(self.matrix.toarray())
        k = self._num_kept_modes()
        try:
            w, v = eigsh(self.matrix.tocsc(), k=k, sigma=1.0, which="LM")
        except (RuntimeError, ArpackError) as e:
            raise NumericalError(
                f"Lanczos iteration failed: {e}",
                "the spectral radius of P must be below one",
            ) from e
        keep = w > 0
        order = np.argsort(w[keep])[::-1]
        return w[keep][order], v[:, keep][:, order]

    def _decompose(self):
        with self._lock:
            if self._eigvals is not None:
                return
            file = self._cache_file()
            if file is not None and file.exists():
                data = np.load(file)
                w, v = data["w"], data["v"]
                logger.debug("Loaded eigendecomposition from %s", file)
            else:
                tic = time.perf_counter()
                w, v = self._eigenpairs()
                logger.debug(
                    "%s eigendecomposition of %d vertices (%d modes) took %s",
                    "Dense" if self.dense else "Partial",
                    self.num_vertices,
                    len(w),
                    format_duration(time.perf_counter() - tic),
                )
                if file is not None:
                    np.savez(file, w=w, v=v)
                    logger.debug("Stored eigendecomposition in %s", file)
            self._eigvecs_sq = np.square(v)
            self._eigvals = w
            self._diagonals.limit = max(self.cache_limit - self.decomposition_nbytes, 0)
            if not self.dense:
                self._short = self._short_cutoff()

    @property
    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues of ``P``, or the kept top of the spectrum."""
        self._decompose()
        return self._eigvals

    @property
    def decomposition_nbytes(self) -> int:
        """Memory held by the eigenvalues and squared eigenvectors."""
        self._decompose()
        return int(self._eigvals.nbytes + self._eigvecs_sq.nbytes)

    @property
    def total_mass(self) -> float:
        """Total loop mass ``-log det(I - P) = -sum log(1 - lambda_k)``."""
        if self.weight == 0:
            return 0.0
        if self._total is None:
            if self.dense:
                self._total = float(-np.sum(np.log1p(-self.eigenvalues)))
            else:
                self._total = -log_det_one_minus(self.matrix, method="sparse")
        return self._total

    @property
    def short_length(self) -> int:
        """Longest loop drawn by thinning random walks, zero for dense domains."""
        if self.dense:
            return 0
        self._decompose()
        return self._short

    def _short_cutoff(self) -> int:
        lam = self._eigvals
        n = self.num_vertices
        rest = max(n - 2 * len(lam), 0)
        low = float(lam[-1])
        if rest == 0 or low <= 0:
            return 2
        # the remaining eigenvalues lie in [-low, low]
        target = self.tail_tolerance * self.total_mass
        t = 2
        while rest * low ** (t + 1) / ((t + 1) * (1 - low)) >= target:
            t += 2
        logger.debug("Loops up to %d steps are drawn by walk thinning", t)
        return t

    def length_distribution(self) -> np.ndarray:
        """Truncated mass ``tr(P^t) / t`` of loops of length ``t = 0, ..., T``.

        Lengths up to ``short_length`` carry zero mass here, their loops are
        not drawn from this distribution.
        """
        self._decompose()
        with self._lock:
            if self._cdf is None:
                self._cdf = self._build_lengths()
        return self._masses

    def _build_lengths(self) -> np.ndarray:
        lam = self.eigenvalues
        n = self.num_vertices
        rho = float(np.max(np.abs(lam)))
        if rho >= 1:
            raise NumericalError(f"spectral radius {rho} is not below one")
        pairs = 1.0 if self.dense else 2.0
        start = self.short_length
        target = self.tail_tolerance * self.total_mass
        masses = [0.0] * (start + 1)
        power = np.power(lam, start)
        t = start
        while True:
            t += 1
            power = power * lam
            # the lattice is bipartite: closed walks have even length
            mass = pairs * max(float(power.sum()), 0.0) / t if t % 2 == 0 else 0.0
            masses.append(mass)
            tail = n * rho ** (t + 1) / ((t + 1) * (1 - rho))
            if tail < target and t % 2 == 0:
                break
            if t > MAX_LOOP_LENGTH:
                raise NumericalError(
                    f"loop length distribution not truncated below {MAX_LOOP_LENGTH}",
                    "the spectral radius is too close to one",
                )
        self._masses = np.array(masses)
        logger.debug("Truncated loop lengths at T=%d (rho=%.6f)", t, rho)
        cdf = np.cumsum(self._masses)
        return cdf / cdf[-1]

    @property
    def max_length(self) -> int:
        return len(self.length_distribution()) - 1

    def root_weights(self, t: int) -> np.ndarray:
        """Diagonal of ``P^t``, cached with LRU eviction."""
        if t <= self.short_length:
            raise ParameterError(
                f"root weights are only tabulated above {self.short_length} steps"
            )
        diag = self._diagonals.get(t)
        if diag is None:
            lam = self.eigenvalues
            diag = self._eigvecs_sq @ np.power(lam, t)
            if not self.dense:
                diag = 2.0 * diag if t % 2 == 0 else np.zeros_like(diag)
            diag = np.clip(diag, 0.0, None)
            self._diagonals.put(t, diag)
        return diag

    def short_walks(self, lam: float, rng: np.random.Generator) -> List[np.ndarray]:
        """Closed walks of at most ``short_length`` steps from a thinned walk process.

        From every vertex ``x`` and every even length ``t``, ``Poisson(lam / t)``
        random walks with step matrix ``P`` (killed when they leave the domain
        or with rate ``kappa``) are started. The walks standing at ``x`` after
        ``t`` steps form a Poisson process with intensity ``lam`` times the
        loop measure restricted to these lengths.

        Returns
        -------
        paths : list of np.ndarray
            Vertex sequences of length ``t + 1``, starting and ending at the root.
        """
        n = self.num_vertices
        lengths = np.arange(2, self.short_length + 1, 2)
        if len(lengths) == 0 or lam == 0:
            return []
        cum = np.cumsum(1.0 / lengths)
        count = int(rng.poisson(lam * n * cum[-1]))
        pick = np.searchsorted(cum, rng.random(count) * cum[-1], side="right")
        steps = lengths[np.minimum(pick, len(lengths) - 1)]
        roots = rng.integers(0, n, count)
        order = np.argsort(-steps, kind="stable")
        steps, roots = steps[order], roots[order]
        # row ``n`` is the absorbing killed state
        table = np.vstack([self._table, np.full((1, 4), n, dtype=np.int64)])
        rate = 4.0 + self.kappa
        paths = list()
        for lo in range(0, count, WALK_BATCH):
            t_b, x_b = steps[lo : lo + WALK_BATCH], roots[lo : lo + WALK_BATCH]
            trace = np.empty((len(t_b), int(t_b[0]) + 1), dtype=np.int64)
            pos = x_b.copy()
            trace[:, 0] = pos
            for s in range(int(t_b[0])):
                active = int(np.count_nonzero(t_b > s))
                col = (rng.random(active) * rate).astype(np.int64)
                nxt = table[pos[:active], np.minimum(col, 3)]
                pos[:active] = np.where(col < 4, nxt, n)
                trace[:active, s + 1] = pos[:active]
            for i in np.flatnonzero(pos == x_b):
                paths.append(trace[i, : t_b[i] + 1].copy())
        return paths

    def bridge(self, root: int, t: int, rng: np.random.Generator) -> np.ndarray:
        """Samples the vertex sequence of a closed walk of length ``t`` from ``root``.

        Returns
        -------
        path : (t + 1, ) np.ndarray
            Vertex indices, starting and ending at ``root``.
        """
        n = self.num_vertices
        mat = self.matrix
        block = max(1, int(np.ceil(np.sqrt(t))))
        checkpoints = dict()
        col = np.zeros(n)
        col[root] = 1.0
        for m in range(t):
            if m % block == 0:
                checkpoints[m] = col
            if m + 1 < t:
                col = mat @ col
                col /= col.max()
        path = np.empty(t + 1, dtype=np.int64)
        path[0] = y = root
        s = 0
        for start in sorted(checkpoints, reverse=True):
            stop = min(start + block, t)
            cols = [checkpoints[start]]
            for _ in range(start + 1, stop):
                nxt = mat @ cols[-1]
                cols.append(nxt / nxt.max())
            for m in range(stop - 1, start - 1, -1):
                nbrs = self._table[y]
                vals = np.append(cols[m - start], 0.0)[nbrs]
                cum = np.cumsum(vals)
                if cum[-1] <= 0:
                    raise NumericalError(
                        f"bridge from vertex {root} got stuck at step {s}"
                    )
                k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                y = int(nbrs[min(k, len(nbrs) - 1)])
                s += 1
                path[s] = y
        return path

    def sample(
        self, lam: float, seed: int = 0, replica: int = 0, num_jobs: int = 1
    ) -> LoopSoup:
        """Draws a loop soup of intensity ``lam``."""
        if np.isnan(lam) or lam < 0:
            raise ParameterError(f"intensity lambda must be non-negative, got {lam}")
        rng = make_rng(seed, replica)
        if lam == 0 or self.weight == 0:
            return LoopSoup(self.domain, [], lam, self.kappa, seed, replica)
        masses = self.length_distribution()
        mass = self.total_mass if self.dense else float(masses.sum())
        count = int(rng.poisson(lam * mass))
        lengths = np.searchsorted(self._cdf, rng.random(count), side="right")
        roots = np.empty(count, dtype=np.int64)
        for t in np.unique(lengths):
            idx = np.flatnonzero(lengths == t)
            weights = self.root_weights(int(t))
            cum = np.cumsum(weights)
            u = rng.random(len(idx)) * cum[-1]
            roots[idx] = np.searchsorted(cum, u, side="right")
        roots = np.minimum(roots, self.num_vertices - 1)

        verts = self.domain.vertex_array()
        short = self.short_walks(lam, rng)
        loops = [LatticeLoop.from_vertices(verts[path]) for path in short]

        def draw(i):
            rng_i = make_rng(seed, replica, i)
            path = self.bridge(int(roots[i]), int(lengths[i]), rng_i)
            return LatticeLoop.from_vertices(verts[path])

        if num_jobs > 1 and count > 1:
            with ThreadPoolExecutor(max_workers=num_jobs) as executor:
                loops += list(executor.map(draw, range(count)))
        else:
            loops += [draw(i) for i in range(count)]
        return LoopSoup(self.domain, loops, lam, self.kappa, seed, replica)


_SAMPLERS: Dict[Tuple[str, float], LoopSampler] = dict()
_SAMPLERS_LOCK = threading.Lock()


def get_loop_sampler(domain: DiscreteDomain, kappa: float = 0.0) -> LoopSampler:
    """Returns the shared loop sampler of a domain, creating it on first use."""
    key = (domain.key, float(kappa))
    with _SAMPLERS_LOCK:
        sampler = _SAMPLERS.get(key)
        if sampler is None:
            sampler = LoopSampler(domain, kappa)
            _SAMPLERS[key] = sampler
    return sampler


def sample_loop_soup(
    domain: DiscreteDomain,
    lam: float,
    kappa: float = 0.0,
    seed: int = 0,
    replica: int = 0,
    num_jobs: int = 1,
) -> LoopSoup:
    """Samples the Poisson loop soup of intensity ``lam`` times the loop measure.

    Parameters
    ----------
    domain : DiscreteDomain
    lam : float
        The intensity, must be non-negative.
    kappa : float, optional
        The killing rate of the massive loop measure. The default is zero.
    seed : int, optional
        Base seed of the random streams.
    replica : int, optional
        Index of the independent replica.
    num_jobs : int, optional
        Number of threads used for the bridges.

    Returns
    -------
    soup : LoopSoup
    """
    if np.isnan(lam) or lam < 0:
        raise ParameterError(f"intensity lambda must be non-negative, got {lam}")
    return get_loop_sampler(domain, kappa).sample(lam, seed, replica, num_jobs)


def thin_soup(soup: LoopSoup, subdomain: DiscreteDomain) -> LoopSoup:
    """Keeps the loops of a soup that only use edges of a subdomain."""

    def inside(loop):
        return all(subdomain.edge_index(e) is not None for e in loop.edges())

    loops = [loop for loop in soup.loops if inside(loop)]
    return LoopSoup(subdomain, loops, soup.lam, soup.kappa, soup.seed, soup.replica)


# =========================================================================
# DGFF and Ising
# =========================================================================


@dataclass
class DGFFSample:
    """Discrete Gaussian free field with zero boundary values.

    ``values`` has shape ``(V,)`` or ``(size, V)`` for batched samples.
    """

    domain: DiscreteDomain = field(repr=False)
    values: np.ndarray
    boundary: float = 0.0


@lru_cache(maxsize=16)
def _precision_cholesky(domain: DiscreteDomain, kappa: float) -> np.ndarray:
    precision = build_transition_matrix(domain, mass=kappa).one_minus().toarray()
    try:
        return sla.cholesky(precision, lower=True)
    except sla.LinAlgError as e:
        raise NumericalError(f"I - P is not positive definite: {e}") from e


def sample_dgff(
    domain: DiscreteDomain,
    seed: int = 0,
    replica: int = 0,
    size: Optional[int] = None,
    kappa: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> DGFFSample:
    """Samples the DGFF with covariance ``G = (I - P)^-1`` and zero boundary.

    With ``I - P = L L^T`` the field is ``L^-T z`` for a standard normal ``z``.
    """
    rng = make_rng(seed, replica) if rng is None else rng
    chol = _precision_cholesky(domain, float(kappa))
    n = domain.num_vertices
    shape = (n,) if size is None else (n, size)
    z = rng.standard_normal(shape)
    phi = sla.solve_triangular(chol, z, lower=True, trans="T", check_finite=False)
    return DGFFSample(domain, phi if size is None else phi.T)


@dataclass
class IsingConfig:
    """Dual Ising configuration: one spin per face, the outer vertex is fixed to +1."""

    spins: np.ndarray
    couplings: np.ndarray


def dual_couplings(
    domain: DiscreteDomain, phi: np.ndarray, kappa: float = 0.0
) -> np.ndarray:
    """Kramers-Wannier dual couplings ``J* = -log(tanh J) / 2`` of the DGFF sign model.

    The primal couplings are ``J_xy = P_xy |phi_x phi_y|``. A vanishing ``J``
    gives an infinite dual coupling.
    """
    weight = 1.0 / (4.0 + kappa)
    u, v = domain.edge_pairs.T
    strength = weight * np.abs(phi[u] * phi[v])
    with np.errstate(divide="ignore"):
        return -0.5 * np.log(np.tanh(strength))


@lru_cache(maxsize=8)
def _edge_products(domain: DiscreteDomain) -> np.ndarray:
    """Products ``s_a s_b`` over all dual edges for every face configuration."""
    nf = domain.num_faces
    configs = np.arange(1 << nf, dtype=np.int64)
    spins = 1 - 2 * ((configs[:, None] >> np.arange(nf)) & 1).astype(np.int8)
    spins = np.concatenate([spins, np.ones((len(configs), 1), dtype=np.int8)], axis=1)
    ends = domain.dual().dual_edges
    return spins[:, ends[:, 0]] * spins[:, ends[:, 1]]


def _config_spins(index: int, num_faces: int) -> np.ndarray:
    return 1 - 2 * ((index >> np.arange(num_faces)) & 1).astype(np.int8)


def _ising_exact(domain: DiscreteDomain, couplings: np.ndarray, rng) -> np.ndarray:
    products = _edge_products(domain)
    finite = np.isfinite(couplings)
    energy = products[:, finite] @ couplings[finite]
    if not np.all(finite):
        allowed = np.all(products[:, ~finite] == 1, axis=1)
        energy = np.where(allowed, energy, -np.inf)
    prob = np.exp(energy - logsumexp(energy))
    cum = np.cumsum(prob)
    index = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return _config_spins(min(index, len(cum) - 1), domain.num_faces)


def _ising_wolff(
    domain: DiscreteDomain, couplings: np.ndarray, rng, sweeps: int
) -> Tuple[np.ndarray, int]:
    """Single-cluster updates on faces plus the outer vertex.

    Updates run until the flipped cluster sizes add up to ``sweeps`` times the
    number of faces. A cluster containing the outer vertex is flipped together
    with a global spin flip, which leaves the outer spin at +1. Returns the
    face spins and the number of cluster updates.
    """
    dual = domain.dual()
    nv = dual.num_vertices
    ends = dual.dual_edges
    # merge parallel dual edges
    adj = [dict() for _ in range(nv)]
    for (a, b), j in zip(ends, couplings):
        if a != b:
            adj[a][b] = adj[a].get(b, 0.0) + j
            adj[b][a] = adj[b].get(a, 0.0) + j
    bond = [{w: -np.expm1(-2.0 * j) for w, j in nb.items()} for nb in adj]
    spins = np.ones(nv, dtype=np.int8)
    target = sweeps * domain.num_faces
    flipped = updates = 0
    while flipped < target:
        seed_site = int(rng.integers(nv))
        sign = spins[seed_site]
        cluster = {seed_site}
        stack = [seed_site]
        while stack:
            v = stack.pop()
            for w, p in bond[v].items():
                if w not in cluster and spins[w] == sign and rng.random() < p:
                    cluster.add(w)
                    stack.append(w)
        idx = np.fromiter(cluster, dtype=np.int64)
        spins[idx] *= -1
        if spins[dual.outer] < 0:
            spins *= -1
        flipped += len(idx)
        updates += 1
    logger.debug("Wolff burn-in: %d sweeps in %d cluster updates", sweeps, updates)
    return spins[: domain.num_faces].copy(), updates


def sample_ising_dual(
    domain: DiscreteDomain,
    couplings: ArrayLike,
    seed: int = 0,
    replica: int = 0,
    method: str = "auto",
    burn_in: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> IsingConfig:
    """Samples the Ising model on the dual graph with +1 outer boundary spin.

    Parameters
    ----------
    domain : DiscreteDomain
    couplings : (E, ) array_like
        Non-negative coupling per dual edge, ordered like ``domain.edges``.
        Infinite couplings force equal spins.
    seed, replica : int, optional
        Random stream of the sample.
    method : {"auto", "exact", "wolff"}, optional
        ``"exact"`` enumerates all face configurations and is limited to
        ``EXACT_ISING_MAX_FACES`` faces. ``"auto"`` picks it whenever possible.
    burn_in : int, optional
        Number of sweeps for ``"wolff"``. A sweep is a run of cluster updates
        whose sizes add up to the number of faces. The default is
        ``WOLFF_SWEEPS``.

    Returns
    -------
    config : IsingConfig
    """
    couplings = np.asarray(couplings, dtype=float)
    if couplings.shape != (domain.num_edges,):
        raise ParameterError(
            f"expected {domain.num_edges} couplings, got {couplings.shape}"
        )
    if np.any(np.isnan(couplings)) or np.any(couplings < 0):
        raise ParameterError("dual couplings must be non-negative")
    rng = make_rng(seed, replica) if rng is None else rng
    if method == "auto":
        method = "exact" if domain.num_faces <= EXACT_ISING_MAX_FACES else "wolff"
    if method == "exact":
        if domain.num_faces > EXACT_ISING_MAX_FACES:
            raise ParameterError(
                f"exact Ising sampling is limited to {EXACT_ISING_MAX_FACES} faces",
                "use method='wolff'",
            )
        spins = _ising_exact(domain, couplings, rng)
    elif method == "wolff":
        sweeps = WOLFF_SWEEPS if burn_in is None else int(burn_in)
        if sweeps < 0:
            raise ParameterError(f"burn_in must be non-negative, got {burn_in}")
        spins, _ = _ising_wolff(domain, couplings, rng, sweeps)
    else:
        raise ParameterError(f"unknown method '{method}'", "use 'exact' or 'wolff'")
    return IsingConfig(spins, couplings)


def _nonzero_dgff(domain: DiscreteDomain, rng) -> np.ndarray:
    """DGFF sample with no vanishing edge product."""
    u, v = domain.edge_pairs.T
    while True:
        phi = sample_dgff(domain, rng=rng).values
        if np.all(phi[u] * phi[v] != 0):
            return phi
        logger.debug("Resampling DGFF with a vanishing edge product")


def sample_spin_via_dgff_ising(
    domain: DiscreteDomain, seed: int = 0, replica: int = 0, method: str = "auto"
) -> np.ndarray:
    """Face spins at ``lam = 1/2`` from the DGFF and the dual Ising model.

    First ``|phi|`` is sampled, then the Ising model on the dual graph with +1
    outer boundary and couplings ``J* = -log(tanh(|phi_x phi_y| / 4)) / 2``.

    Returns
    -------
    spins : (F, ) np.ndarray
        One spin per face, ordered like ``domain.faces``.
    """
    rng = make_rng(seed, replica)
    phi = _nonzero_dgff(domain, rng)
    couplings = dual_couplings(domain, phi)
    return sample_ising_dual(domain, couplings, method=method, rng=rng).spins


def sample_spin_via_dgff_coins(
    domain: DiscreteDomain, seed: int = 0, replica: int = 0
) -> np.ndarray:
    """Face spins at ``lam = 1/2`` from the DGFF and independent coin flips.

    Dual bonds across edges where ``phi`` changes sign are open. Every other
    dual bond is open with probability ``exp(-2 J)``, ``J = |phi_x phi_y| / 4``.
    Clusters of open dual bonds get independent fair signs, except the cluster
    of the outer vertex, which is +1.

    Returns
    -------
    spins : (F, ) np.ndarray
    """
    rng = make_rng(seed, replica)
    phi = _nonzero_dgff(domain, rng)
    u, v = domain.edge_pairs.T
    strength = 0.25 * np.abs(phi[u] * phi[v])
    eta = np.sign(phi[u]) != np.sign(phi[v])
    omega = ~eta & (rng.random(len(u)) < np.exp(-2.0 * strength))
    bonds = eta | omega

    dual = domain.dual()
    ends = dual.dual_edges[bonds]
    nv = dual.num_vertices
    graph = csr_matrix(
        (np.ones(len(ends)), (ends[:, 0], ends[:, 1])), shape=(nv, nv)
    )
    _, labels = connected_components(graph, directed=False)
    signs = np.where(rng.random(labels.max() + 1) < 0.5, 1, -1).astype(np.int8)
    signs[labels[dual.outer]] = 1
    return signs[labels[: domain.num_faces]]


def sample_massive_halfplane_field(
    size: int,
    kappa: float,
    lam: float = 0.5,
    seed: int = 0,
    replica: int = 0,
    num_jobs: int = 1,
) -> np.ndarray:
    """Spin field of the massive loop soup in an ``L x L`` box of unit faces.

    Large loops have exponentially small mass when ``kappa > 0``, so the box
    field approximates the infinite-volume massive field away from the box
    boundary.

    Returns
    -------
    spins : (L, L) np.ndarray
        ``spins[i, j]`` is the spin of face ``(i, j)``.
    """
    from .fields import spin_field

    if not kappa > 0:
        raise ParameterError(
            f"the massive field needs kappa > 0, got {kappa}",
            "without mass the infinite-volume field is trivial",
        )
    if size < 1:
        raise ParameterError(f"box size must be positive, got {size}")
    domain = _box_domain(int(size))
    soup = sample_loop_soup(domain, lam, kappa, seed, replica, num_jobs)
    values = spin_field(soup).values
    faces = domain.face_array()
    grid = np.ones((size, size), dtype=np.int8)
    grid[faces[:, 0], faces[:, 1]] = values
    return grid


@lru_cache(maxsize=8)
def _box_domain(size: int) -> DiscreteDomain:
    return DiscreteDomain(square_faces(size), 1.0)
