# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Deterministic engine: loop masses from twisted determinants and derived quantities.

All loop masses are expressed through ``log det(I - P)`` of (twisted) transition
matrices. For a set ``S`` of marked faces the sign twist along defect lines
turns the weight of every loop into ``(-1)^(sum of its windings around S)``, so

    mu(sum of windings around S odd) = (log det(I - P^S) - log det(I - P)) / 2.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, Optional, Sequence, Tuple, Union
import numpy as np
from scipy import linalg as sla
from scipy.sparse import csc_matrix, csr_matrix, identity, issparse
from scipy.sparse.linalg import splu
from scipy.special import ellipk
from .lattice import (
    DiscreteDomain,
    TransitionMatrix,
    build_domain,
    build_transition_matrix,
    defect_line,
    spectral_radius,
)
from .shape import AbstractShape, Disk, Square
from .utils import DomainError, NumericalError, ParameterError

__all__ = [
    "DENSE_LU_LIMIT",
    "MAX_MARKED_FACES",
    "LoopMass",
    "GreenMatrix",
    "ExactResult",
    "GriffithsReport",
    "EnumeratedMasses",
    "log_det_one_minus",
    "total_loop_mass",
    "parity_constrained_mass",
    "parity_pattern_masses",
    "n_point_function",
    "winding_twisted_mass",
    "winding_n_point_function",
    "greens_function",
    "conformal_radius",
    "lattice_conformal_radius",
    "disk_automorphism",
    "griffiths_check",
    "boundary_mass_difference",
    "wick_residual",
    "nongaussianity_residual",
    "enumerate_loop_masses",
    "spectral_radius",
]

logger = logging.getLogger(__name__)

DENSE_LU_LIMIT = 20_000
MAX_MARKED_FACES = 8
MAX_ENUMERATION_LENGTH = 64
MAX_ENUMERATION_FACES = 6

Face = Tuple[int, int]


@dataclass(frozen=True)
class LoopMass:
    """Total loop-measure mass of a class of loops.

    Attributes
    ----------
    value : float
        The mass, non-negative.
    domain : dict
        Descriptor of the domain the loops live in.
    faces : tuple of (int, int)
        Marked faces of the winding constraint, empty for the total mass.
    rule : str
        ``"all"``, ``"sum-odd"`` or ``"pattern"``.
    pattern : tuple of int, optional
        Per-face winding parities for ``rule="pattern"``.
    kappa : float
        The mass of the walk.
    """

    value: float
    domain: dict = field(default_factory=dict, compare=False)
    faces: Tuple[Face, ...] = ()
    rule: str = "all"
    pattern: Optional[Tuple[int, ...]] = None
    kappa: float = 0.0

    def __float__(self):
        return float(self.value)

    def __add__(self, other):
        value = other.value if isinstance(other, LoopMass) else float(other)
        return self.value + value

    __radd__ = __add__

    def todict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExactResult:
    """Serializable exact value as emitted by the command line interface."""

    quantity: str
    domain_spec: dict
    parameters: dict
    value: float
    error_bound: float = 0.0

    def todict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.todict(), sort_keys=True)


def _check_finite(mat):
    data = mat.data if issparse(mat) else mat
    if not np.all(np.isfinite(data)):
        raise NumericalError("matrix has non-finite entries")


def _permutation_sign(perm: np.ndarray) -> int:
    """Sign of a permutation given as an index array."""
    perm = np.asarray(perm)
    seen = np.zeros(len(perm), dtype=bool)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _dense_logdet(mat: np.ndarray) -> Tuple[float, complex]:
    lu, piv = sla.lu_factor(mat, overwrite_a=True, check_finite=False)
    diag = np.diag(lu)
    if np.any(diag == 0):
        raise NumericalError("I - P is singular", "spectral radius of P must be < 1")
    # LAPACK pivots are successive row swaps
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    phase = (-1) ** swaps * np.prod(diag / np.abs(diag))
    return float(np.sum(np.log(np.abs(diag)))), phase


def _sparse_logdet(mat) -> Tuple[float, complex]:
    try:
        lu = splu(mat.tocsc())
    except RuntimeError as e:
        raise NumericalError(f"sparse LU failed: {e}") from e
    diag = lu.U.diagonal()
    if np.any(diag == 0):
        raise NumericalError("I - P is singular", "spectral radius of P must be < 1")
    phase = np.prod(diag / np.abs(diag))
    phase *= _permutation_sign(lu.perm_r) * _permutation_sign(lu.perm_c)
    return float(np.sum(np.log(np.abs(diag)))), phase


def log_det_one_minus(
    matrix: Union[TransitionMatrix, csr_matrix, np.ndarray], method: str = "auto"
) -> float:
    """Computes ``log det(I - P)`` with a pivoted LU factorization.

    The logarithm is accumulated from the magnitudes of the pivots, so the
    result never over- or underflows.

    Parameters
    ----------
    matrix : TransitionMatrix or sparse matrix or np.ndarray
        The (possibly twisted or complex Hermitian) step matrix ``P``.
    method : {"auto", "dense", "sparse"}, optional
        Factorization to use. ``"auto"`` uses a dense LU up to
        ``DENSE_LU_LIMIT`` vertices and a sparse LU above.

    Returns
    -------
    logdet : float

    Raises
    ------
    NumericalError
        If ``P`` has non-finite entries or ``det(I - P)`` is not positive.

    Examples
    --------
    >>> dom = build_domain({"shape": "square", "n": 1, "mesh": 1})
    >>> log_det_one_minus(build_transition_matrix(dom))  # doctest: +ELLIPSIS
    -0.28768...
    """
    mat = matrix.matrix if isinstance(matrix, TransitionMatrix) else matrix
    _check_finite(mat)
    n = mat.shape[0]
    if n == 0:
        return 0.0
    if method == "auto":
        method = "dense" if n <= DENSE_LU_LIMIT else "sparse"
    if method == "dense":
        dense = mat.toarray() if issparse(mat) else np.array(mat)
        dense = np.eye(n, dtype=dense.dtype) - dense
        logdet, phase = _dense_logdet(dense)
    elif method == "sparse":
        mat = csc_matrix(mat)
        one_minus = identity(n, dtype=mat.dtype, format="csc") - mat
        logdet, phase = _sparse_logdet(one_minus)
    else:
        raise ParameterError(
            f"unknown method '{method}'", "use 'auto', 'dense' or 'sparse'"
        )
    if abs(phase - 1.0) > 1e-6:
        raise NumericalError(
            f"det(I - P) is not positive (phase {phase:.3g})",
            "the spectral radius of P must be below one",
        )
    return logdet


def _kappa_ok(kappa: float):
    if np.isnan(kappa) or kappa < 0:
        raise ParameterError(f"kappa must be non-negative, got {kappa}")


def _check_faces(domain: DiscreteDomain, faces) -> Tuple[Face, ...]:
    faces = tuple((int(f[0]), int(f[1])) for f in faces)
    if len(set(faces)) != len(faces):
        raise ParameterError(f"marked faces must be distinct, got {list(faces)}")
    for f in faces:
        if not domain.has_face(f):
            raise DomainError(f"marked face {f} is not part of the domain")
    return faces


def total_loop_mass(domain: DiscreteDomain, kappa: float = 0.0) -> LoopMass:
    """Total mass ``-log det(I - P)`` of loops staying in the domain.

    Examples
    --------
    >>> dom = build_domain({"shape": "square", "n": 1, "mesh": 1})
    >>> round(total_loop_mass(dom).value, 5)
    0.28768
    """
    _kappa_ok(kappa)
    if np.isinf(kappa):
        value = 0.0
    else:
        value = -log_det_one_minus(build_transition_matrix(domain, mass=kappa))
    return LoopMass(max(value, 0.0), domain.todict(), kappa=float(kappa))


def _twisted_logdets(
    domain: DiscreteDomain,
    faces: Sequence[Face],
    subsets: Sequence[int],
    kappa: float,
    strategy: str,
    num_jobs: int,
) -> np.ndarray:
    """Computes ``log det(I - P^S)`` for subsets ``S`` given as bit masks."""
    lines = [defect_line(domain, f, strategy) for f in faces]

    def compute(mask):
        twist = [line for k, line in enumerate(lines) if mask >> k & 1]
        return log_det_one_minus(build_transition_matrix(domain, twist, kappa))

    if num_jobs > 1 and len(subsets) > 1:
        with ThreadPoolExecutor(max_workers=num_jobs) as executor:
            values = list(executor.map(compute, subsets))
    else:
        values = [compute(mask) for mask in subsets]
    return np.array(values)


def parity_constrained_mass(
    domain: DiscreteDomain,
    faces: Sequence[Sequence[int]],
    parity_rule: str = "sum-odd",
    kappa: float = 0.0,
    pattern: Sequence[int] = None,
    strategy: str = "straight-east",
    num_jobs: int = 1,
) -> LoopMass:
    """Mass of the loops whose windings around marked faces obey a parity rule.

    Parameters
    ----------
    domain : DiscreteDomain
    faces : Sequence of (int, int)
        Distinct marked faces.
    parity_rule : {"sum-odd", "pattern"}, optional
        ``"sum-odd"`` selects loops whose total winding around the faces is odd.
        ``"pattern"`` selects loops whose winding parities equal ``pattern``.
    kappa : float, optional
        The mass of the walk. The default is zero.
    pattern : Sequence of int, optional
        Parity bit per face for ``parity_rule="pattern"``.
    strategy : str, optional
        Defect line strategy. The result does not depend on it.
    num_jobs : int, optional
        Number of threads used for the determinants.

    Returns
    -------
    mass : LoopMass
    """
    _kappa_ok(kappa)
    faces = _check_faces(domain, faces)
    if parity_rule == "sum-odd":
        if not faces or np.isinf(kappa):
            return LoopMass(0.0, domain.todict(), faces, "sum-odd", kappa=float(kappa))
        full = (1 << len(faces)) - 1
        logdets = _twisted_logdets(domain, faces, [0, full], kappa, strategy, num_jobs)
        value = 0.5 * (logdets[1] - logdets[0])
        value = max(value, 0.0)
        return LoopMass(value, domain.todict(), faces, "sum-odd", kappa=float(kappa))
    elif parity_rule == "pattern":
        if pattern is None or len(pattern) != len(faces):
            raise ParameterError("pattern needs one parity bit per marked face")
        masses = parity_pattern_masses(domain, faces, kappa, strategy, num_jobs)
        return masses[tuple(int(p) & 1 for p in pattern)]
    raise ParameterError(
        f"unknown parity rule '{parity_rule}'", "use 'sum-odd' or 'pattern'"
    )


def parity_pattern_masses(
    domain: DiscreteDomain,
    faces: Sequence[Sequence[int]],
    kappa: float = 0.0,
    strategy: str = "straight-east",
    num_jobs: int = 1,
) -> Dict[Tuple[int, ...], LoopMass]:
    """Masses of all ``2^n`` per-face winding-parity classes.

    With ``F(S) = -log det(I - P^S)`` the class with parity vector ``p`` has mass
    ``2^-n sum_S (-1)^(p.S) F(S)``, a Walsh-Hadamard transform of the twisted
    determinants. The masses add up to the total loop mass.

    Returns
    -------
    masses : dict
        Maps parity tuples (bit ``j`` belongs to ``faces[j]``) to ``LoopMass``.
    """
    _kappa_ok(kappa)
    faces = _check_faces(domain, faces)
    n = len(faces)
    if n > MAX_MARKED_FACES:
        raise ParameterError(
            f"at most {MAX_MARKED_FACES} marked faces are supported, got {n}",
            "the character sum needs 2^n determinants",
        )
    size = 1 << n
    if np.isinf(kappa):
        values = np.zeros(size)
    else:
        logdets = _twisted_logdets(
            domain, faces, range(size), kappa, strategy, num_jobs
        )
        values = sla.hadamard(size) @ (-logdets) / size
    descriptor = domain.todict()
    out = dict()
    for p in range(size):
        bits = tuple((p >> k) & 1 for k in range(n))
        value = max(float(values[p]), 0.0)
        out[bits] = LoopMass(value, descriptor, faces, "pattern", bits, float(kappa))
    return out


def n_point_function(
    domain: DiscreteDomain,
    faces: Sequence[Sequence[int]],
    lam: float,
    kappa: float = 0.0,
    num_jobs: int = 1,
) -> float:
    """Exact spin correlation ``<prod_j sigma(z_j)> = exp(-2 lam mu(sum N odd))``.

    Examples
    --------
    >>> dom = build_domain({"shape": "square", "n": 1, "mesh": 1})
    >>> round(n_point_function(dom, [(0, 0)], 0.5), 5)
    0.98974
    """
    if np.isnan(lam) or lam < 0:
        raise ParameterError(f"intensity lambda must be non-negative, got {lam}")
    if lam == 0 or len(faces) == 0:
        _check_faces(domain, faces)
        return 1.0
    mass = parity_constrained_mass(domain, faces, "sum-odd", kappa, num_jobs=num_jobs)
    return float(np.exp(-2.0 * lam * mass.value))


def winding_twisted_mass(
    domain: DiscreteDomain,
    faces: Sequence[Sequence[int]],
    betas: Union[float, Sequence[float]],
    kappa: float = 0.0,
    strategy: str = "straight-east",
) -> float:
    """``mu(exp(i sum_j beta_j N(z_j)) - 1)`` from a phase-twisted determinant.

    Equals ``log det(I - P) - log det(I - P^beta)``, a non-positive number.
    """
    _kappa_ok(kappa)
    faces = _check_faces(domain, faces)
    betas = np.broadcast_to(np.asarray(betas, dtype=float), (len(faces),))
    if not faces or np.isinf(kappa):
        return 0.0
    lines = [defect_line(domain, f, strategy) for f in faces]
    base = log_det_one_minus(build_transition_matrix(domain, mass=kappa))
    twisted = log_det_one_minus(build_transition_matrix(domain, lines, kappa, betas))
    return min(base - twisted, 0.0)


def winding_n_point_function(
    domain: DiscreteDomain,
    faces: Sequence[Sequence[int]],
    betas: Union[float, Sequence[float]],
    lam: float,
    kappa: float = 0.0,
) -> float:
    """Exact lattice winding correlation ``<prod_j exp(i beta_j N(z_j))>``.

    For ``beta = pi`` this is ``n_point_function``. On the lattice the mesh plays
    the role of the ultraviolet cutoff.
    """
    if np.isnan(lam) or lam < 0:
        raise ParameterError(f"intensity lambda must be non-negative, got {lam}")
    if np.any((np.asarray(betas) < 0) | (np.asarray(betas) > np.pi)):
        raise ParameterError(f"beta must lie in [0, pi], got {betas}")
    return float(np.exp(lam * winding_twisted_mass(domain, faces, betas, kappa)))


class GreenMatrix:
    """Green's function ``G = (I - P)^-1`` of the walk killed on leaving the domain.

    ``G[x, y]`` is the expected number of visits to ``y`` of the walk started at
    ``x``, counting the visit at time zero.
    """

    def __init__(
        self, domain: DiscreteDomain, matrix: np.ndarray, precision: np.ndarray
    ):
        self.domain = domain
        self.matrix = matrix
        self.precision = precision
        self._chol = None

    @property
    def shape(self):
        return self.matrix.shape

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix)

    def precision_cholesky(self) -> np.ndarray:
        """Lower Cholesky factor ``L`` of ``I - P = L L^T``."""
        if self._chol is None:
            self._chol = sla.cholesky(self.precision, lower=True)
        return self._chol

    def __getitem__(self, item):
        return self.matrix[item]

    def __array__(self, dtype=None):
        return np.asarray(self.matrix, dtype=dtype)


def greens_function(domain: DiscreteDomain, kappa: float = 0.0) -> GreenMatrix:
    """Computes the Green's matrix of a domain with a Cholesky factorization."""
    _kappa_ok(kappa)
    precision = build_transition_matrix(domain, mass=kappa).one_minus().toarray()
    try:
        c, low = sla.cho_factor(precision, lower=True)
    except sla.LinAlgError as e:
        raise NumericalError(f"I - P is not positive definite: {e}") from e
    green = sla.cho_solve((c, low), np.eye(domain.num_vertices))
    green = 0.5 * (green + green.T)
    return GreenMatrix(domain, green, precision)


# =========================================================================
# Conformal radius
# =========================================================================

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS

# Side length of the image of the unit disk under w -> int_0^w (1 + s^4)^(-1/2) ds
SQUARE_SIDE = float(ellipk(0.5))


def _square_map(w: complex) -> complex:
    """Schwarz-Christoffel map of the unit disk onto a square of side ``K(1/2)``."""
    t = _GL_NODES
    return w * np.sum(_GL_WEIGHTS / np.sqrt(1.0 + (t * w) ** 4))


def _square_map_derivative(w: complex) -> complex:
    return 1.0 / np.sqrt(1.0 + w**4)


def _invert_square_map(
    zeta: complex, tol: float = 1e-13, maxiter: int = 200
) -> complex:
    """Newton inversion of the square map for a point of the open square."""
    w = 0.75 * zeta
    for _ in range(maxiter):
        step = (_square_map(w) - zeta) / _square_map_derivative(w)
        new = w - step
        # damp steps that would leave the disk
        while abs(new) >= 1.0:
            step *= 0.5
            new = w - step
        w = new
        if abs(step) < tol:
            break
    else:
        raise NumericalError(
            f"Newton inversion of the square map did not converge at {zeta}"
        )
    return w


def disk_automorphism(a: complex, theta: float = 0.0) -> Tuple[Callable, Callable]:
    """Möbius automorphism ``w -> e^(i theta) (w - a) / (1 - conj(a) w)`` of the disk.

    Returns
    -------
    f, df : callable
        The map and its derivative.
    """
    a = complex(a)
    if abs(a) >= 1:
        raise ParameterError(
            f"automorphism parameter must lie in the unit disk, got {a}"
        )
    rot = np.exp(1j * theta)

    def f(w):
        return rot * (w - a) / (1 - np.conj(a) * w)

    def df(w):
        return rot * (1 - abs(a) ** 2) / (1 - np.conj(a) * w) ** 2

    return f, df


def conformal_radius(
    domain_shape: Union[str, AbstractShape], z: Sequence[float], automorphism=None
) -> float:
    """Conformal radius ``r(D, z)`` of a disk or square at an interior point.

    Parameters
    ----------
    domain_shape : {"disk", "square"} or Disk or Square
        The strings denote the unit disk and the unit square ``[0, 1]^2``.
    z : (2, ) array_like or complex
        The interior point.
    automorphism : (complex, float), optional
        Parameters ``(a, theta)`` of a disk automorphism ``phi``. If given the
        radius of ``phi(D)`` at ``phi(z)`` is returned, which equals
        ``|phi'(z)| r(D, z)``. Only valid for disks.

    Returns
    -------
    r : float

    Examples
    --------
    >>> conformal_radius("disk", (0.5, 0.0))
    0.75
    """
    if isinstance(domain_shape, str):
        if domain_shape == "disk":
            domain_shape = Disk(1.0)
        elif domain_shape == "square":
            domain_shape = Square(1.0)
        else:
            raise ParameterError(
                f"unknown shape '{domain_shape}'", "use 'disk' or 'square'"
            )
    zc = complex(z) if np.isscalar(z) else complex(z[0], z[1])
    if isinstance(domain_shape, Disk):
        c = complex(*domain_shape.center)
        w = (zc - c) / domain_shape.radius
        if abs(w) >= 1:
            raise ParameterError(f"point {z} is not inside the disk")
        if automorphism is not None:
            f, df = disk_automorphism(*automorphism)
            w = complex(f(w))
            if abs(w) >= 1:
                raise ParameterError(f"image of {z} is not inside the disk")
        return float(domain_shape.radius * (1.0 - abs(w) ** 2))
    if isinstance(domain_shape, Square):
        if automorphism is not None:
            raise ParameterError("automorphisms are only supported for disks")
        c = complex(*domain_shape.center)
        half = domain_shape.side / 2
        if abs((zc - c).real) >= half or abs((zc - c).imag) >= half:
            raise ParameterError(f"point {z} is not inside the square")
        scale = domain_shape.side / SQUARE_SIDE
        zeta = (zc - c) / scale
        if zeta == 0:
            return float(scale)
        w = _invert_square_map(zeta)
        return float(scale * abs(_square_map_derivative(w)) * (1 - abs(w) ** 2))
    raise ParameterError(f"conformal radius not supported for {domain_shape}")


def lattice_conformal_radius(domain: DiscreteDomain, vertex: Sequence[int]) -> float:
    """Lattice estimate of the conformal radius from the diagonal of the Green's matrix.

    Uses ``G(x, x) = (2/pi) log(r / a) + (2 gamma + log 8) / pi + o(1)``.
    """
    green = greens_function(domain)
    g = green[domain.vertex_index(vertex), domain.vertex_index(vertex)]
    log_ratio = 0.5 * np.pi * g - np.euler_gamma - 1.5 * np.log(2.0)
    return float(domain.mesh * np.exp(log_ratio))


# =========================================================================
# Inequalities and perturbations
# =========================================================================


@dataclass
class GriffithsReport:
    """Values and slacks of the three Griffiths-type inequalities."""

    corr_a: float
    corr_a_sub: float
    corr_b: float
    corr_ab: float
    positivity_slack: float
    monotonicity_slack: float
    correlation_slack: float

    def holds(self, tol: float = 1e-9) -> bool:
        return min(
            self.positivity_slack, self.monotonicity_slack, self.correlation_slack
        ) >= -tol

    def todict(self) -> dict:
        return asdict(self)


def griffiths_check(
    domain: DiscreteDomain,
    subdomain: DiscreteDomain,
    faces_a: Sequence[Sequence[int]],
    faces_b: Sequence[Sequence[int]],
    lam: float,
    kappa: float = 0.0,
) -> GriffithsReport:
    """Evaluates positivity, domain monotonicity and the second inequality.

    (i) ``<sigma_A>_D > 0``, (ii) ``<sigma_A>_D' >= <sigma_A>_D`` for ``D'`` in ``D``
    and (iii) ``<sigma_A sigma_B>_D >= <sigma_A>_D <sigma_B>_D``. Since spins
    square to one, ``sigma_A sigma_B`` is the product over the symmetric
    difference of ``A`` and ``B``.
    """
    if not subdomain.issubdomain(domain):
        raise DomainError("subdomain is not contained in the domain")
    a = _check_faces(subdomain, faces_a)
    b = _check_faces(subdomain, faces_b)
    ab = sorted(set(a) ^ set(b))
    corr_a = n_point_function(domain, a, lam, kappa)
    corr_a_sub = n_point_function(subdomain, a, lam, kappa)
    corr_b = n_point_function(domain, b, lam, kappa)
    corr_ab = n_point_function(domain, ab, lam, kappa)
    return GriffithsReport(
        corr_a=corr_a,
        corr_a_sub=corr_a_sub,
        corr_b=corr_b,
        corr_ab=corr_ab,
        positivity_slack=corr_a,
        monotonicity_slack=corr_a_sub - corr_a,
        correlation_slack=corr_ab - corr_a * corr_b,
    )


def boundary_mass_difference(r: float, mesh: float, radius: float = 1.0) -> float:
    """Mass of loops winding oddly around the origin that exit the disk of radius ``r``.

    Computed as the difference of the odd-winding masses of the discretized unit
    disk and of the disk of radius ``r``, both at the face closest to the origin.
    As the mesh goes to zero the value tends to ``-log(r) / 8``.
    """
    if not 0 < r < 1:
        raise ParameterError(f"r must lie in (0, 1), got {r}")
    outer = build_domain(Disk(radius), mesh)
    face = outer.closest_face((0.0, 0.0))
    inner_faces = Disk(r * radius).faces(mesh)
    if face not in inner_faces:
        raise ParameterError(
            f"disk of radius {r} contains no face around the origin at mesh {mesh}",
            "use a finer mesh",
        )
    if len(inner_faces) == outer.num_faces:
        return 0.0
    inner = DiscreteDomain(inner_faces, mesh, shape=Disk(r * radius))
    m_outer = parity_constrained_mass(outer, [face]).value
    m_inner = parity_constrained_mass(inner, [face]).value
    return float(m_outer - m_inner)


def wick_residual(a: float, b: float, lam: float) -> float:
    """Residual ``e^{4 lam (a+b)} (e^{8 lam b} - 3) + 2`` of the Wick relation.

    Vanishes for Gaussian-like fields; ``a`` is the mass of loops winding oddly
    around all three points and ``b`` the mass of loops winding oddly around
    exactly two of them.
    """
    return float(np.exp(4 * lam * (a + b)) * (np.exp(8 * lam * b) - 3.0) + 2.0)


def symmetric_triple(rho: float, angle: float = np.pi / 2) -> np.ndarray:
    """Three points at radius ``rho`` invariant under rotation by ``2 pi / 3``."""
    phis = angle + 2 * np.pi * np.arange(3) / 3
    return rho * np.stack([np.cos(phis), np.sin(phis)], axis=1)


def nongaussianity_residual(
    lam: float, rho: float, mesh: float, radius: float = 1.0, num_jobs: int = 1
) -> float:
    """Wick residual of the spin field at a symmetric triple in the discretized disk.

    The three points are placed at radius ``rho`` and snapped to their closest
    faces. ``a`` and ``b`` are read off the per-face parity classes.
    """
    if not 0 < rho < radius:
        raise ParameterError(f"rho must lie in (0, {radius}), got {rho}")
    domain = build_domain(Disk(radius), mesh)
    faces = [domain.closest_face(p) for p in symmetric_triple(rho)]
    if len(set(faces)) < 3:
        raise ParameterError(
            f"triple at rho={rho} collapses on the lattice with mesh {mesh}",
            "increase rho or refine the mesh",
        )
    masses = parity_pattern_masses(domain, faces, num_jobs=num_jobs)
    a = masses[(1, 1, 1)].value
    b = sum(masses[p].value for p in [(1, 1, 0), (1, 0, 1), (0, 1, 1)])
    logger.debug("Wick masses at rho=%s: a=%.6g, b=%.6g", rho, a, b)
    return wick_residual(a, b, lam)


# =========================================================================
# Brute-force oracle
# =========================================================================


@dataclass
class EnumeratedMasses:
    """Loop masses obtained by explicit summation over closed walks."""

    total: float
    patterns: Dict[Tuple[int, ...], float]
    odd: float
    tail_bound: float
    max_length: int


def enumerate_loop_masses(
    domain: DiscreteDomain,
    max_length: int = MAX_ENUMERATION_LENGTH,
    kappa: float = 0.0,
    faces: Sequence[Sequence[int]] = (),
) -> EnumeratedMasses:
    """Sums the loop measure over all rooted closed walks up to ``max_length`` steps.

    Walks are propagated step by step on the product of the vertex set with the
    winding parities of the marked faces, so every closed walk is counted once
    with weight ``(4+kappa)^-t / t``. The parities are tracked through the
    straight defect lines. The neglected tail is bounded by
    ``V rho^(T+1) / ((T+1)(1-rho))``.
    """
    _kappa_ok(kappa)
    faces = _check_faces(domain, faces)
    if domain.num_faces > MAX_ENUMERATION_FACES:
        raise ParameterError(
            f"enumeration is limited to {MAX_ENUMERATION_FACES} faces",
            "use the determinant engine for larger domains",
        )
    if not 0 < max_length <= MAX_ENUMERATION_LENGTH:
        raise ParameterError(f"max_length must lie in [1, {MAX_ENUMERATION_LENGTH}]")
    n_vert = domain.num_vertices
    n_pat = 1 << len(faces)
    weight = 0.0 if np.isinf(kappa) else 1.0 / (4.0 + kappa)

    flips = np.zeros(domain.num_edges, dtype=np.int64)
    for k, f in enumerate(faces):
        flips[defect_line(domain, f).edge_indices(domain)] ^= 1 << k
    steps = [(u, v, flips[e]) for e, (u, v) in enumerate(domain.edge_pairs)]
    steps += [(v, u, m) for u, v, m in steps]

    # state[root, vertex, pattern]
    state = np.zeros((n_vert, n_vert, n_pat))
    state[np.arange(n_vert), np.arange(n_vert), 0] = 1.0
    pattern_mass = np.zeros(n_pat)
    for t in range(1, max_length + 1):
        new = np.zeros_like(state)
        for u, v, m in steps:
            new[:, v, :] += state[:, u, :][:, np.arange(n_pat) ^ m]
        state = new * weight
        closed = state[np.arange(n_vert), np.arange(n_vert), :].sum(axis=0)
        pattern_mass += closed / t

    rho = spectral_radius(build_transition_matrix(domain, mass=kappa))
    if rho < 1:
        tail = n_vert * rho ** (max_length + 1) / ((max_length + 1) * (1 - rho))
    else:  # pragma: no cover
        tail = np.inf
    patterns = dict()
    odd = 0.0
    for p in range(n_pat):
        bits = tuple((p >> k) & 1 for k in range(len(faces)))
        patterns[bits] = float(pattern_mass[p])
        if sum(bits) % 2:
            odd += pattern_mass[p]
    return EnumeratedMasses(
        float(pattern_mass.sum()), patterns, float(odd), float(tail), max_length
    )
