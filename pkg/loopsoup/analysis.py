# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Estimators and numerics on top of the samplers and the exact engine."""

import logging
import warnings
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Callable, List, Optional, Sequence, Tuple, Union
import numpy as np
from scipy import linalg as sla
from scipy import stats
from scipy.sparse import identity
from scipy.sparse.linalg import eigsh
from .exact import (
    boundary_mass_difference,
    conformal_radius,
    winding_twisted_mass,
)
from .fields import cutoff_winding_field, loop_hull, winding_field, winding_number
from .lattice import DiscreteDomain, build_domain
from .sampler import get_loop_sampler, sample_massive_halfplane_field, thin_soup
from .shape import AbstractShape, Disk, Square
from .utils import DomainError, ParameterError, pairwise_sum

__all__ = [
    "Estimate",
    "ScalingFit",
    "BoundaryPerturbation",
    "TwoPointDecomposition",
    "SpectralBasis",
    "SobolevNorm",
    "CauchyDiagnostic",
    "ReflectionPositivityReport",
    "scaling_dimension",
    "jackknife",
    "mc_correlation",
    "one_point_masses",
    "scaling_exponent_fit",
    "conformal_covariance_fit",
    "boundary_perturbation_probability",
    "twopoint_decomposition",
    "spectral_basis",
    "sobolev_minus_alpha_norm",
    "sobolev_cauchy_diagnostic",
    "reflection_positivity_check",
]

logging.captureWarnings(True)

logger = logging.getLogger(__name__)

K_MAX_DEFAULT = 400
MIN_SAMPLES = 100


def scaling_dimension(lam: float, beta: float = np.pi) -> float:
    """Scaling dimension ``lam beta (2 pi - beta) / (8 pi^2)``; ``lam / 8`` at pi."""
    return lam * beta * (2 * np.pi - beta) / (8 * np.pi**2)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate of a mean with its standard error.

    Attributes
    ----------
    mean : float or complex
    std_error : float
        Sample standard deviation over ``sqrt(n_samples)``.
    n_samples : int
    seed : int, optional
        Base seed of the replicas.
    lineage : str, optional
        Short description of how the samples were produced.
    """

    mean: Union[float, complex]
    std_error: float
    n_samples: int
    seed: Optional[int] = None
    lineage: str = ""

    @classmethod
    def from_samples(cls, values, seed: int = None, lineage: str = "") -> "Estimate":
        values = np.asarray(values)
        n = len(values)
        if n < 2:
            raise ParameterError(f"an estimate needs at least two samples, got {n}")
        mean = pairwise_sum(values) / n
        var = pairwise_sum(np.abs(values - mean) ** 2) / (n - 1)
        mean = complex(mean) if np.iscomplexobj(values) else float(mean)
        return cls(mean, float(np.sqrt(var / n)), n, seed, lineage)

    def zscore(self, value) -> float:
        diff = abs(self.mean - value)
        if self.std_error == 0:
            return 0.0 if diff < 1e-12 else np.inf
        return float(diff / self.std_error)

    def consistent(self, value, nsigma: float = 3.0) -> bool:
        """Checks if a value lies within ``nsigma`` standard errors of the mean."""
        return self.zscore(value) <= nsigma

    def scale(self, factor: float) -> "Estimate":
        return Estimate(
            self.mean * factor, self.std_error * abs(factor), self.n_samples,
            self.seed, self.lineage,
        )

    def todict(self) -> dict:
        d = asdict(self)
        if isinstance(self.mean, complex):
            d["mean"] = [self.mean.real, self.mean.imag]
        return d


def _map_replicas(func: Callable[[int], object], n: int, num_jobs: int = 1) -> list:
    """Evaluates ``func`` for replicas ``0..n-1``; results keep the replica order."""
    if num_jobs > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=num_jobs) as executor:
            return list(executor.map(func, range(n)))
    return [func(r) for r in range(n)]


def jackknife(
    values: np.ndarray, statistic: Callable[[np.ndarray], float], blocks: int = 20
) -> Tuple[float, float]:
    """Delete-one-block jackknife estimate and error of a statistic.

    Parameters
    ----------
    values : (N, ...) array_like
        Samples along the first axis.
    statistic : callable
        Maps a subset of the samples to a number.
    blocks : int, optional
        Number of contiguous blocks. The default is 20.

    Returns
    -------
    estimate, error : float
    """
    values = np.asarray(values)
    n = len(values)
    blocks = min(blocks, n)
    if blocks < 2:
        raise ParameterError("the jackknife needs at least two blocks")
    parts = np.array_split(np.arange(n), blocks)
    thetas = np.array([statistic(np.delete(values, idx, axis=0)) for idx in parts])
    mean = thetas.mean()
    error = np.sqrt((blocks - 1) / blocks * np.sum((thetas - mean) ** 2))
    return float(statistic(values)), float(error)


def _check_lambda(lam):
    if np.isnan(lam) or lam < 0:
        raise ParameterError(f"intensity lambda must be non-negative, got {lam}")


def mc_correlation(
    domain: DiscreteDomain,
    faces: Sequence[Sequence[int]],
    lam: float,
    kappa: float = 0.0,
    n_samples: int = 10_000,
    seed: int = 0,
    num_jobs: int = 1,
) -> Estimate:
    """Monte Carlo estimate of ``<prod_j sigma(z_j)>`` over independent soups.

    Examples
    --------
    >>> dom = build_domain({"shape": "square", "n": 1, "mesh": 1})
    >>> mc_correlation(dom, [(0, 0)], 0.0, n_samples=100).mean
    1.0
    """
    _check_lambda(lam)
    if n_samples < MIN_SAMPLES:
        raise ParameterError(
            f"n_samples must be at least {MIN_SAMPLES}, got {n_samples}"
        )
    index = np.array([domain.face_index(f) for f in faces], dtype=np.int64)
    sampler = get_loop_sampler(domain, kappa)

    def replica(r):
        soup = sampler.sample(lam, seed, r)
        windings = winding_field(soup).values[index]
        return -1.0 if np.sum(windings) % 2 else 1.0

    values = _map_replicas(replica, n_samples, num_jobs)
    return Estimate.from_samples(values, seed, "loop soup spins")


# =========================================================================
# Scaling fits
# =========================================================================


@dataclass
class ScalingFit:
    """Ordinary least squares fit in log-log coordinates."""

    slope: float
    intercept: float
    stderr: float
    ci: float
    r_squared: float
    expected: float
    x: List[float] = field(default_factory=list)
    y: List[float] = field(default_factory=list)

    def within(self, tol: float) -> bool:
        return abs(self.slope - self.expected) <= tol

    def todict(self) -> dict:
        return asdict(self)


def _linear_fit(x, y, expected) -> ScalingFit:
    res = stats.linregress(x, y)
    dof = len(x) - 2
    ci = float(stats.t.ppf(0.975, dof) * res.stderr) if dof > 0 else np.inf
    return ScalingFit(
        float(res.slope), float(res.intercept), float(res.stderr), ci,
        float(res.rvalue**2), float(expected), list(map(float, x)), list(map(float, y)),
    )


def _resolve_shape(shape: Union[str, AbstractShape]) -> AbstractShape:
    if isinstance(shape, AbstractShape):
        return shape
    if shape == "square":
        return Square(1.0)
    if shape == "disk":
        return Disk(1.0)
    raise ParameterError(f"unknown shape '{shape}'", "use 'square' or 'disk'")


def _default_point(shape: AbstractShape) -> np.ndarray:
    return np.asarray(shape.center, dtype=float)


def one_point_masses(
    shape: Union[str, AbstractShape],
    z: Sequence[float],
    meshes: Sequence[float],
    beta: float = np.pi,
) -> np.ndarray:
    """``-mu(exp(i beta N(z^a)) - 1)`` for every mesh, so ``<V(z^a)> = exp(-lam m)``."""
    shape = _resolve_shape(shape)
    out = list()
    for mesh in meshes:
        domain = DiscreteDomain.from_shape(shape, mesh)
        face = domain.closest_face(z)
        out.append(-winding_twisted_mass(domain, [face], beta))
        logger.info("one-point mass at mesh %g: %.8g", mesh, out[-1])
    return np.array(out)


def scaling_exponent_fit(
    shape: Union[str, AbstractShape],
    z: Optional[Sequence[float]],
    lam: float,
    meshes: Sequence[float],
    beta: float = np.pi,
    masses: Optional[Sequence[float]] = None,
) -> ScalingFit:
    """Fits the slope of ``log <V_beta(z^a)>`` against ``log a``.

    The expected slope is twice the scaling dimension, ``lam / 4`` at
    ``beta = pi``.

    Parameters
    ----------
    shape : {"square", "disk"} or AbstractShape
    z : (2, ) array_like, optional
        The point, by default the centre of the shape.
    lam : float
    meshes : Sequence of float
        At least four geometrically spaced mesh sizes.
    beta : float, optional
    masses : Sequence of float, optional
        Precomputed ``one_point_masses`` for the meshes.
    """
    _check_lambda(lam)
    meshes = np.asarray(meshes, dtype=float)
    order = np.argsort(meshes)[::-1]
    meshes = meshes[order]
    if len(meshes) < 4:
        raise ParameterError(f"the fit needs at least 4 meshes, got {len(meshes)}")
    ratios = meshes[1:] / meshes[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise ParameterError(
            "meshes must be geometrically spaced", f"got ratios {ratios}"
        )
    shape = _resolve_shape(shape)
    z = _default_point(shape) if z is None else np.asarray(z, dtype=float)
    if masses is None:
        masses = one_point_masses(shape, z, meshes, beta)
    else:
        masses = np.asarray(masses, dtype=float)[order]
    logv = -lam * np.asarray(masses)
    return _linear_fit(np.log(meshes), logv, 2 * scaling_dimension(lam, beta))


def conformal_covariance_fit(
    shape: Union[str, AbstractShape],
    points: Sequence[Sequence[float]],
    lam: float,
    mesh: float,
    beta: float = np.pi,
) -> ScalingFit:
    """Fits ``log <V_beta(z^a)>`` against ``log r(D, z)`` at fixed mesh.

    One-point functions behave like ``a^(2 Delta) r(D, z)^(-2 Delta)``, so the
    expected slope is ``-2 Delta``.
    """
    _check_lambda(lam)
    if len(points) < 3:
        raise ParameterError(f"the fit needs at least 3 points, got {len(points)}")
    shape = _resolve_shape(shape)
    domain = DiscreteDomain.from_shape(shape, mesh)
    radii, logv = list(), list()
    for z in points:
        face = domain.closest_face(z)
        center = mesh * (np.asarray(face) + 0.5)
        radii.append(conformal_radius(shape, center))
        logv.append(lam * winding_twisted_mass(domain, [face], beta))
    return _linear_fit(np.log(radii), logv, -2 * scaling_dimension(lam, beta))


# =========================================================================
# Boundary perturbation and two-point decomposition
# =========================================================================


@dataclass
class BoundaryPerturbation:
    """Probability that the origin spin agrees in the disk and in its ``r`` scaling."""

    estimate: Estimate
    exact: float
    first_order: float
    continuum: float
    mass: float

    def todict(self) -> dict:
        d = asdict(self)
        d["estimate"] = self.estimate.todict()
        return d


def boundary_perturbation_probability(
    r: float,
    lam: float,
    mesh: float,
    n_samples: int = 10_000,
    seed: int = 0,
    radius: float = 1.0,
    num_jobs: int = 1,
) -> BoundaryPerturbation:
    """Estimates ``P(sigma_D(0) = sigma_rD(0))`` with coupled soups.

    The soup of the smaller disk is the restriction of the soup of the unit disk
    to loops staying inside it. The spins differ exactly when an odd number of
    exiting loops wind oddly around the origin, a Poisson number with mean
    ``lam m``, which gives the exact value ``(1 + exp(-2 lam m)) / 2``.
    """
    _check_lambda(lam)
    if not 0 < r < 1:
        raise ParameterError(f"r must lie in (0, 1), got {r}")
    if n_samples < MIN_SAMPLES:
        raise ParameterError(
            f"n_samples must be at least {MIN_SAMPLES}, got {n_samples}"
        )
    mass = boundary_mass_difference(r, mesh, radius)
    outer = build_domain(Disk(radius), mesh)
    inner = DiscreteDomain(Disk(r * radius).faces(mesh), mesh, shape=Disk(r * radius))
    face = outer.closest_face((0.0, 0.0))
    sampler = get_loop_sampler(outer)

    def replica(k):
        soup = sampler.sample(lam, seed, k)
        kept = thin_soup(soup, inner)
        total = sum(winding_number(loop, face) for loop in soup.loops)
        inside = sum(winding_number(loop, face) for loop in kept.loops)
        return 1.0 if (total - inside) % 2 == 0 else 0.0

    values = _map_replicas(replica, n_samples, num_jobs)
    est = Estimate.from_samples(values, seed, "coupled disk soups")
    return BoundaryPerturbation(
        estimate=est,
        exact=float(0.5 * (1 + np.exp(-2 * lam * mass))),
        first_order=float(np.exp(-lam * mass)),
        continuum=float(r ** (lam / 8)),
        mass=float(mass),
    )


@dataclass
class TwoPointDecomposition:
    """Loop masses of the two-point function of coupled cutoff winding fields.

    The masses satisfy ``<V^d(z) conj(V^d'(w))> = exp(-lam (kappa + tau_zw +
    tau_wz + tau_between))``, the ``direct`` estimate is the left hand side.
    """

    kappa: Estimate
    tau_zw: Estimate
    tau_wz: Estimate
    tau_between: Estimate
    direct: Estimate
    reconstructed: float
    reconstructed_error: float
    normalization: float

    def todict(self) -> dict:
        keys = ("kappa", "tau_zw", "tau_wz", "tau_between", "direct")
        out = {k: getattr(self, k).todict() for k in keys}
        out.update(
            reconstructed=self.reconstructed,
            reconstructed_error=self.reconstructed_error,
            normalization=self.normalization,
        )
        return out


def _covered(loop, faces) -> List[bool]:
    box = loop.bbox()
    inside = [
        box[0, 0] <= f[0] < box[0, 1] and box[1, 0] <= f[1] < box[1, 1] for f in faces
    ]
    if not any(inside):
        return inside
    hull = loop_hull(loop)
    return [tuple(f) in hull for f in faces]


def twopoint_decomposition(
    domain: DiscreteDomain,
    z: Sequence[int],
    w: Sequence[int],
    delta: float,
    delta_prime: float,
    lam: float,
    beta: float = np.pi,
    n_samples: int = 10_000,
    seed: int = 0,
    num_jobs: int = 1,
) -> TwoPointDecomposition:
    """Estimates the two-point loop masses.

    These are ``kappa^d_zw``, ``tau^d_zw``, ``tau^d'_wz`` and ``tau^{d',d}_wz``.

    Each mass is the mean number of soup loops in its class, weighted by
    ``1 - cos(k beta)`` of the relevant winding, divided by ``lam``. A loop
    covers a face when the face lies in its hull.

    Parameters
    ----------
    domain : DiscreteDomain
    z, w : (int, int)
        Two distinct faces.
    delta, delta_prime : float
        Diameter cutoffs with ``delta > delta_prime > 0``.
    lam, beta : float
    n_samples, seed, num_jobs : int
    """
    _check_lambda(lam)
    if lam == 0:
        raise ParameterError("masses cannot be estimated from an empty soup (lam = 0)")
    if not delta > delta_prime > 0:
        raise ParameterError(
            f"cutoffs must satisfy delta > delta' > 0, got {delta}, {delta_prime}"
        )
    z = tuple(int(v) for v in z)
    w = tuple(int(v) for v in w)
    domain.face_index(z)
    domain.face_index(w)
    mesh = domain.mesh
    sampler = get_loop_sampler(domain)

    def replica(k):
        soup = sampler.sample(lam, seed, k)
        sums = np.zeros(4)
        nz = nw = 0
        for loop in soup.loops:
            diam = loop.diameter(mesh)
            if diam <= delta_prime:
                continue
            wz, ww = winding_number(loop, z), winding_number(loop, w)
            cz, cw = _covered(loop, (z, w))
            if diam > delta:
                nz += wz
                if cz and cw:
                    sums[0] += 1 - np.cos((wz - ww) * beta)
                elif cz:
                    sums[1] += 1 - np.cos(wz * beta)
            nw += ww
            if cw and not cz:
                sums[2] += 1 - np.cos(ww * beta)
            elif cz and cw and diam <= delta:
                sums[3] += 1 - np.cos(ww * beta)
        return np.append(sums, np.cos(beta * (nz - nw)))

    values = np.array(_map_replicas(replica, n_samples, num_jobs))
    est = [
        Estimate.from_samples(values[:, i], seed, "two-point masses").scale(1 / lam)
        for i in range(4)
    ]
    direct = Estimate.from_samples(values[:, 4], seed, "two-point direct")
    total = Estimate.from_samples(values[:, :4].sum(axis=1), seed)
    recon = float(np.exp(-total.mean))
    dim = scaling_dimension(lam, beta)
    return TwoPointDecomposition(
        *est,
        direct=direct,
        reconstructed=recon,
        reconstructed_error=recon * total.std_error,
        normalization=float((delta * delta_prime) ** (-2 * dim)),
    )


# =========================================================================
# Spectral basis and Sobolev norms
# =========================================================================


@dataclass
class SpectralBasis:
    """Dirichlet eigenpairs of the 5-point Laplacian on the interior vertices.

    The eigenvectors are normalized in the discrete ``L^2`` product
    ``<f, g> = a^2 sum f conj(g)``.
    """

    domain: DiscreteDomain = field(repr=False)
    eigenvalues: np.ndarray
    vectors: np.ndarray
    vertices: np.ndarray

    @property
    def mesh(self) -> float:
        return self.domain.mesh

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return self.mesh**2 * np.sum(f * np.conj(g))

    def norm_sq(self, f: np.ndarray) -> float:
        return float(self.mesh**2 * np.sum(np.abs(f) ** 2))

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Coefficients ``a_i = <f, u_i>`` of a field on the interior vertices."""
        return self.mesh**2 * (self.vectors.T @ f)

    def counting_function(self, ell: float) -> int:
        """Number of computed eigenvalues below ``ell``."""
        return int(np.searchsorted(self.eigenvalues, ell, side="right"))

    def to_grid(self, values) -> np.ndarray:
        """Maps a vertex or face field onto the interior vertices.

        Face fields are averaged over the four faces around each vertex.
        """
        values = np.asarray(values)
        dom = self.domain
        if len(values) == len(self.vertices) and len(values) != dom.num_faces:
            return values
        if len(values) == dom.num_vertices:
            return values[self.vertices]
        if len(values) == dom.num_faces:
            incident = dom.vertex_faces()
            return np.array([values[incident[v]].mean() for v in self.vertices])
        raise ParameterError(
            f"field of length {len(values)} does not match the domain",
            "pass values per face, per vertex or per interior vertex",
        )


def spectral_basis(
    domain: DiscreteDomain, k_max: Optional[int] = None
) -> SpectralBasis:
    """Computes the lowest Dirichlet eigenpairs of the discrete Laplacian.

    Parameters
    ----------
    domain : DiscreteDomain
    k_max : int, optional
        Number of eigenpairs. The default is ``min(400, n / 4)`` for ``n``
        interior vertices.

    Returns
    -------
    basis : SpectralBasis
    """
    interior = domain.interior_vertices()
    n = len(interior)
    if n == 0:
        raise DomainError("domain has no interior vertices")
    if k_max is None:
        k_max = max(1, min(K_MAX_DEFAULT, n // 4))
    if not 0 < k_max <= n:
        raise ParameterError(f"k_max must lie in [1, {n}], got {k_max}")
    adj = domain.adjacency_matrix().tocsr()[interior][:, interior]
    lap = (4.0 * identity(n, format="csr") - adj.astype(float)) / domain.mesh**2
    if n <= 1000 or k_max >= n - 1:
        vals, vecs = sla.eigh(lap.toarray(), subset_by_index=(0, k_max - 1))
    else:
        vals, vecs = eigsh(lap.tocsc(), k=k_max, sigma=0.0, which="LM")
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / domain.mesh
    logger.debug("Computed %d Dirichlet eigenpairs (lambda_1=%.6g)", k_max, vals[0])
    return SpectralBasis(domain, vals, vecs, interior)


@dataclass(frozen=True)
class SobolevNorm:
    """Truncated squared ``H^-alpha`` norm with a bound on the neglected tail."""

    value: float
    tail_bound: float
    k: int

    def __float__(self):
        return self.value


def sobolev_minus_alpha_norm(
    field_values, basis: SpectralBasis, alpha: float
) -> SobolevNorm:
    """Squared norm ``sum_i |<f, u_i>|^2 / lambda_i^alpha`` over the basis.

    The remaining modes have eigenvalues at least ``lambda_k``, so the tail is
    bounded by ``(|f|^2 - sum_i |a_i|^2) / lambda_k^alpha``.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    values = getattr(field_values, "values", field_values)
    f = basis.to_grid(values)
    coeffs = basis.coefficients(f)
    power = np.abs(coeffs) ** 2
    value = float(np.sum(power / basis.eigenvalues**alpha))
    rest = max(basis.norm_sq(f) - float(np.sum(power)), 0.0)
    return SobolevNorm(value, rest / basis.eigenvalues[-1] ** alpha, basis.size)


@dataclass
class CauchyDiagnostic:
    """Squared ``H^-alpha`` distances of rescaled fields for consecutive cutoffs."""

    deltas: List[float]
    distances: List[Estimate]
    dimension: float
    k: int
    annotation: str = ""

    def is_decreasing(self, nsigma: float = 1.0) -> bool:
        """Checks the decrease as the cutoffs shrink, up to ``nsigma`` errors."""
        for a, b in zip(self.distances, self.distances[1:]):
            if b.mean > a.mean + nsigma * np.hypot(a.std_error, b.std_error):
                return False
        return True

    def rows(self) -> List[dict]:
        out = list()
        for (d0, d1), est in zip(zip(self.deltas, self.deltas[1:]), self.distances):
            out.append({"delta": d0, "delta_prime": d1, "value": est.mean,
                        "stderr": est.std_error, "n": est.n_samples})
        return out


def sobolev_cauchy_diagnostic(
    domain: DiscreteDomain,
    lam: float,
    beta: float,
    alpha: float,
    deltas: Sequence[float],
    n_samples: int = 1000,
    seed: int = 0,
    mesh: Optional[float] = None,
    k_max: Optional[int] = None,
    num_jobs: int = 1,
) -> CauchyDiagnostic:
    """Mean squared ``H^-alpha`` distances of ``d^-2D V^d`` for consecutive cutoffs.

    The fields for all cutoffs are built from the same soup by thinning.
    """
    _check_lambda(lam)
    if not alpha > 1.5:
        raise ParameterError(f"alpha must exceed 3/2, got {alpha}")
    if mesh is not None and domain.shape is not None and mesh != domain.mesh:
        domain = DiscreteDomain.from_shape(domain.shape, mesh)
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 2 or deltas[-1] <= 0:
        raise ParameterError("need at least two positive cutoffs")
    dim = scaling_dimension(lam, beta)
    annotation = ""
    if dim >= 0.5:
        annotation = "scaling dimension >= 1/2: two-point functions are not integrable"
        warnings.warn(f"Delta={dim:.4g}: {annotation}")
    basis = spectral_basis(domain, k_max)
    weights = 1.0 / basis.eigenvalues**alpha
    sampler = get_loop_sampler(domain)

    def replica(k):
        soup = sampler.sample(lam, seed, k)
        coeffs = list()
        for d in deltas:
            fld = cutoff_winding_field(soup, beta, d).values * d ** (-2 * dim)
            coeffs.append(basis.coefficients(basis.to_grid(fld)))
        return [
            float(np.sum(np.abs(a - b) ** 2 * weights))
            for a, b in zip(coeffs, coeffs[1:])
        ]

    values = np.array(_map_replicas(replica, n_samples, num_jobs))
    dists = [
        Estimate.from_samples(values[:, i], seed, "H^-alpha distance")
        for i in range(values.shape[1])
    ]
    return CauchyDiagnostic(deltas, dists, dim, basis.size, annotation)


# =========================================================================
# Reflection positivity
# =========================================================================


@dataclass
class ReflectionPositivityReport:
    """Gram matrix ``M_fg = <f theta(g)>`` of a family of right-half functions."""

    gram: np.ndarray
    min_eigenvalue: float
    error: float
    symmetry_zscore: float
    functions: List[Tuple[Tuple[int, int], ...]]
    n_samples: int

    def is_positive(self, nsigma: float = 3.0) -> bool:
        return self.min_eigenvalue >= -nsigma * self.error

    def is_symmetric(self, nsigma: float = 3.0) -> bool:
        return self.symmetry_zscore <= nsigma


def _monomials(faces, max_spins, max_functions):
    family = list()
    for size in range(max_spins + 1):
        for combo in itertools.combinations(faces, size):
            family.append(tuple(combo))
            if len(family) >= max_functions:
                return family
    return family


def reflection_positivity_check(
    kappa: float,
    lam: float = 0.5,
    size: int = 24,
    max_spins: int = 3,
    max_functions: int = 20,
    n_samples: int = 10_000,
    seed: int = 0,
    functions: Optional[Sequence[Sequence[Tuple[int, int]]]] = None,
    blocks: int = 20,
    num_jobs: int = 1,
) -> ReflectionPositivityReport:
    """Estimates the reflection Gram matrix of the massive spin field.

    The box has an even ``size`` and the reflection line is the vertical
    lattice line between face columns ``c - 1`` and ``c``, ``c = size // 2``,
    so face column ``i`` is mirrored to ``2c - 1 - i``. The family consists of
    products of at most ``max_spins`` spins of faces right of the line near
    the middle row, starting with the constant function.

    Returns
    -------
    report : ReflectionPositivityReport
        Holds the minimum eigenvalue of the symmetrized Gram matrix with its
        jackknife error and the largest z-score of ``M - M^T``.
    """
    if not kappa > 0:
        raise ParameterError(f"reflection positivity needs kappa > 0, got {kappa}")
    if size < 2 or size % 2:
        raise ParameterError(
            f"reflection needs an even box size, got {size}",
            "the line between the middle columns must split the box in halves",
        )
    c = r0 = size // 2
    if functions is None:
        near = [(c + di, r0 + dj) for di in (0, 1, 2) for dj in (0, 1, -1)]
        near = [f for f in near if 0 <= f[0] < size and 0 <= f[1] < size]
        functions = _monomials(near, max_spins, max_functions)
    functions = [tuple(tuple(f) for f in mono) for mono in functions]
    for mono in functions:
        for i, j in mono:
            if not (c <= i < size and 0 <= j < size):
                raise ParameterError(
                    f"face {(i, j)} is not in the right half of the box"
                )

    def evaluate(grid, monos, reflect):
        out = np.ones(len(monos))
        for k, mono in enumerate(monos):
            for i, j in mono:
                out[k] *= grid[2 * c - 1 - i, j] if reflect else grid[i, j]
        return out

    def replica(k):
        grid = sample_massive_halfplane_field(size, kappa, lam, seed, k)
        return evaluate(grid, functions, False), evaluate(grid, functions, True)

    results = _map_replicas(replica, n_samples, num_jobs)
    fvals = np.array([r[0] for r in results])
    tvals = np.array([r[1] for r in results])
    products = fvals[:, :, None] * tvals[:, None, :]
    gram = products.mean(axis=0)

    def min_eig(prod):
        m = prod.mean(axis=0)
        return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])

    value, error = jackknife(products, min_eig, blocks)
    asym = products - np.transpose(products, (0, 2, 1))
    sem = asym.std(axis=0, ddof=1) / np.sqrt(len(asym))
    diff = np.abs(asym.mean(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sem > 0, diff / sem, np.where(diff > 1e-12, np.inf, 0.0))
    zmax = float(z.max())
    return ReflectionPositivityReport(gram, value, error, zmax, functions, n_samples)
