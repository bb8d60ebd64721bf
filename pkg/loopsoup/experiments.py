# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Catalog of reproducible numerical experiments.

Every experiment is a function mapping a resolved configuration to a list of
result rows ``{experiment, params..., value, stderr, n, seed}``. The
configuration is any object with the attributes of ``loopsoup.cli.ExperimentConfig``.
"""

import logging
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence
import numpy as np
from .analysis import (
    Estimate,
    _map_replicas,
    conformal_covariance_fit,
    one_point_masses,
    reflection_positivity_check,
    scaling_exponent_fit,
    sobolev_cauchy_diagnostic,
)
from .exact import (
    boundary_mass_difference,
    enumerate_loop_masses,
    greens_function,
    griffiths_check,
    n_point_function,
    nongaussianity_residual,
    parity_pattern_masses,
    total_loop_mass,
)
from .fields import occupation_field, spin_field
from .lattice import DiscreteDomain, build_domain
from .sampler import (
    get_loop_sampler,
    make_rng,
    sample_spin_via_dgff_coins,
    sample_spin_via_dgff_ising,
)
from .shape import Square, fixed_polyominoes, random_polyomino, square_faces
from .utils import ParameterError

__all__ = [
    "Experiment",
    "CATALOG",
    "get_experiment",
    "parse_faces",
    "domain_from_config",
    "correlation_domains",
]

logger = logging.getLogger(__name__)

Rows = List[dict]


@dataclass(frozen=True)
class Experiment:
    """Entry of the experiment catalog."""

    key: str
    name: str
    anchor: str
    summary: str
    runner: Callable[[object], Rows]

    def __call__(self, config) -> Rows:
        return self.runner(config)

    def todict(self) -> dict:
        return {
            "key": self.key,
            "name": self.name,
            "anchor": self.anchor,
            "summary": self.summary,
        }


CATALOG: Dict[str, Experiment] = dict()


def register(key: str, name: str, anchor: str, summary: str):
    def decorator(func):
        CATALOG[name] = Experiment(key, name, anchor, summary, func)
        return func

    return decorator


def get_experiment(name: str) -> Experiment:
    try:
        return CATALOG[name]
    except KeyError:
        from .utils import ConfigurationError

        raise ConfigurationError(
            f"unknown experiment '{name}'", f"available: {', '.join(CATALOG)}"
        ) from None


def parse_faces(items: Optional[Sequence]) -> List[tuple]:
    """Parses faces given as ``"i,j"`` strings or pairs."""
    if not items:
        return list()
    out = list()
    for item in items:
        if isinstance(item, str):
            try:
                i, j = item.split(",")
                out.append((int(i), int(j)))
            except ValueError:
                raise ParameterError(
                    f"invalid face '{item}'", "use the form 'i,j'"
                ) from None
        else:
            out.append((int(item[0]), int(item[1])))
    return out


def _rectangle(text: str) -> Optional[List[tuple]]:
    w, sep, h = text.partition("x")
    if sep and w.isdigit() and h.isdigit():
        return [(i, j) for i in range(int(w)) for j in range(int(h))]
    return None


def domain_from_config(config, default: str) -> DiscreteDomain:
    """Domain of a configuration.

    A single ``WxH`` rectangle in ``faces`` wins over ``domain``, which wins over
    ``default``.
    """
    faces = getattr(config, "faces", None)
    if faces and len(faces) == 1 and isinstance(faces[0], str):
        rect = _rectangle(faces[0])
        if rect is not None:
            return DiscreteDomain(rect, 1.0 if config.mesh is None else config.mesh)
    descriptor = config.domain if config.domain is not None else default
    return build_domain(descriptor, config.mesh)


def _lams(config, default) -> List[float]:
    return list(config.lam) if config.lam else list(default)


def _n(config, default: int) -> int:
    return int(config.n_samples) if config.n_samples else default


def _row(name: str, params: dict, value, stderr=None, n=None, seed=None) -> dict:
    row = {"experiment": name}
    row.update(params)
    row.update(value=value, stderr=stderr, n=n, seed=seed)
    return row


def _faces_str(faces) -> str:
    return ";".join(f"{i},{j}" for i, j in faces)


# =========================================================================


CORRELATION_MAX_FACES = 16
CORRELATION_EXHAUSTIVE_FACES = 3
CORRELATION_RANDOM_DOMAINS = 24


def correlation_domains(
    seed: int = 0,
    max_faces: int = CORRELATION_MAX_FACES,
    exhaustive: int = CORRELATION_EXHAUSTIVE_FACES,
    count: int = CORRELATION_RANDOM_DOMAINS,
) -> List[DiscreteDomain]:
    """Default family of small domains for the correlation experiment.

    Every polyomino with at most ``exhaustive`` faces, followed by ``count``
    random connected face sets whose sizes are uniform between
    ``exhaustive + 1`` and ``max_faces``. Listing all polyominoes up to 16
    faces is out of reach (there are billions), so larger sizes are sampled.
    """
    exhaustive = min(exhaustive, max_faces)
    family = list(fixed_polyominoes(exhaustive))
    if max_faces > exhaustive:
        rng = make_rng(seed, 1 << 30)
        seen = set(family)
        for _ in range(count):
            size = int(rng.integers(exhaustive + 1, max_faces + 1))
            faces = random_polyomino(rng, size)
            if faces not in seen:
                seen.add(faces)
                family.append(faces)
    return [DiscreteDomain(faces, 1.0) for faces in family]


@register(
    "A1",
    "correlations",
    "spin correlations equal twisted determinant ratios",
    "Monte Carlo 1- and 2-point spin correlations on small domains against the "
    "exact engine",
)
def run_correlations(config) -> Rows:
    if config.faces or config.domain is not None:
        domains = [domain_from_config(config, "square:4")]
    else:
        domains = correlation_domains(config.seed)
    kappa = config.kappa or 0.0
    n = _n(config, 100_000)
    seed = config.seed
    rows = list()
    for domain in domains:
        faces = list(domain.faces)
        sets = [(f,) for f in faces] + list(itertools.combinations(faces, 2))
        for lam in _lams(config, (0.25, 0.5, 1.0)):
            sampler = get_loop_sampler(domain, kappa)

            def replica(r):
                soup = sampler.sample(lam, seed, r)
                return spin_field(soup).values.astype(float)

            spins = np.array(_map_replicas(replica, n, config.threads))
            for group in sets:
                idx = [domain.face_index(f) for f in group]
                est = Estimate.from_samples(np.prod(spins[:, idx], axis=1), seed)
                exact = n_point_function(domain, group, lam, kappa)
                params = {
                    "domain": _faces_str(faces),
                    "lam": lam,
                    "kappa": kappa,
                    "faces": _faces_str(group),
                    "exact": exact,
                    "zscore": est.zscore(exact),
                }
                row = _row("correlations", params, est.mean, est.std_error, n, seed)
                rows.append(row)
        logger.info(
            "correlations on %d faces done (%d sets)", len(faces), len(sets)
        )
    return rows


DEFAULT_COVARIANCE_POINTS = [
    (0.5, 0.5),
    (0.35, 0.5),
    (0.25, 0.5),
    (0.15, 0.5),
    (0.25, 0.25),
    (0.1, 0.1),
]


@register(
    "A2",
    "scaling",
    "one-point functions scale like a^(2 Delta) r(D, z)^(-2 Delta)",
    "slope of log <sigma(center)> against log a, and against the conformal radius",
)
def run_scaling(config) -> Rows:
    meshes = config.meshes or [1 / 16, 1 / 32, 1 / 64, 1 / 128]
    beta = config.beta
    shape = Square(1.0)
    masses = one_point_masses(shape, shape.center, meshes, beta)
    mesh = config.mesh or 1 / 32
    points = DEFAULT_COVARIANCE_POINTS
    rows = list()
    for lam in _lams(config, (0.5, 1.0)):
        fit = scaling_exponent_fit(shape, None, lam, meshes, beta, masses=masses)
        params = {
            "lam": lam,
            "beta": beta,
            "fit": "mesh",
            "expected": fit.expected,
            "ci": fit.ci,
            "r_squared": fit.r_squared,
        }
        rows.append(_row("scaling", params, fit.slope, fit.stderr, len(meshes)))
        cov = conformal_covariance_fit(shape, points, lam, mesh, beta)
        params = {
            "lam": lam,
            "beta": beta,
            "fit": "conformal-radius",
            "expected": cov.expected,
            "ci": cov.ci,
            "r_squared": cov.r_squared,
        }
        rows.append(_row("scaling", params, cov.slope, cov.stderr, len(points)))
    return rows


@register(
    "A3",
    "boundary",
    "shrinking the disk to radius r changes the spin at 0 with mass -log(r) / 8",
    "lattice mass of odd loops around the origin exiting the disk of radius r",
)
def run_boundary(config) -> Rows:
    mesh = config.mesh or 1 / 128
    lam = _lams(config, (0.5,))[0]
    rows = list()
    for r in config.r or (0.5, 0.7, 0.9):
        mass = boundary_mass_difference(r, mesh)
        expected = -np.log(r) / 8
        params = {
            "r": r,
            "mesh": mesh,
            "lam": lam,
            "expected": expected,
            "rel_error": abs(mass - expected) / expected,
            "probability": 0.5 * (1 + np.exp(-2 * lam * mass)),
        }
        rows.append(_row("boundary", params, mass))
    return rows


def _outcome_table(spins: np.ndarray) -> np.ndarray:
    bits = (spins < 0).astype(np.int64)
    index = bits @ (1 << np.arange(spins.shape[1]))
    return np.bincount(index, minlength=1 << spins.shape[1])


def _outcome_label(k: int, num_faces: int) -> str:
    return "".join("-" if (k >> j) & 1 else "+" for j in range(num_faces))


@register(
    "A4",
    "duality",
    "at lam = 1/2 the spins are the signs of the dual Ising model in |phi|",
    "face spin laws of the loop soup, DGFF + Ising and DGFF + coins",
)
def run_duality(config) -> Rows:
    domain = domain_from_config(config, "box:2")
    if domain.num_faces > 8:
        raise ParameterError(
            f"the outcome table needs at most 8 faces, got {domain.num_faces}"
        )
    n = _n(config, 10_000)
    seed = config.seed
    sampler = get_loop_sampler(domain)
    draws = {
        "soup": lambda r: spin_field(sampler.sample(0.5, seed, r)).values,
        "ising": lambda r: sample_spin_via_dgff_ising(domain, seed, r),
        "coins": lambda r: sample_spin_via_dgff_coins(domain, seed, r),
    }
    probs, errs = dict(), dict()
    for key, draw in draws.items():
        spins = np.array(_map_replicas(draw, n, config.threads))
        p = _outcome_table(spins) / n
        probs[key], errs[key] = p, np.sqrt(p * (1 - p) / n)
        logger.info("duality: sampled %d configurations via %s", n, key)
    rows = list()
    for k in range(1 << domain.num_faces):
        params = {"outcome": _outcome_label(k, domain.num_faces)}
        zmax = 0.0
        for a, b in itertools.combinations(draws, 2):
            err = np.hypot(errs[a][k], errs[b][k])
            diff = abs(probs[a][k] - probs[b][k])
            z = diff / err if err > 0 else (0.0 if diff == 0 else np.inf)
            zmax = max(zmax, z)
        for key in draws:
            params[key] = probs[key][k]
            params[f"{key}_err"] = errs[key][k]
        params["statistic"] = "max pairwise z"
        rows.append(_row("duality", params, zmax, None, n, seed))
    return rows


@register(
    "A5",
    "occupation",
    "at lam = 1/2 the occupation field has the law of phi^2 / 2",
    "first and second moments of the occupation field against the Green's matrix",
)
def run_occupation(config) -> Rows:
    domain = domain_from_config(config, "box:3")
    lam = _lams(config, (0.5,))[0]
    n = _n(config, 10_000)
    seed = config.seed
    sampler = get_loop_sampler(domain)

    def replica(r):
        soup = sampler.sample(lam, seed, r)
        return occupation_field(soup, rng=make_rng(seed, r, 1 << 30)).values

    values = np.array(_map_replicas(replica, n, config.threads))
    diag = greens_function(domain).diagonal()
    # permanental moments: E[T] = lam G, E[T^2] = lam (lam + 1) G^2
    expected = {1: lam * diag, 2: lam * (lam + 1) * diag**2}
    rows = list()
    for k, vertex in enumerate(domain.vertices):
        for moment in (1, 2):
            est = Estimate.from_samples(values[:, k] ** moment, seed)
            ref = expected[moment][k]
            params = {
                "lam": lam,
                "vertex": f"{vertex[0]},{vertex[1]}",
                "moment": moment,
                "expected": ref,
                "zscore": est.zscore(ref),
            }
            row = _row("occupation", params, est.mean, est.std_error, n, seed)
            rows.append(row)
    return rows


def _random_faces(rng, faces: Sequence, max_count: int) -> List[tuple]:
    count = rng.integers(1, min(max_count, len(faces)) + 1)
    return [faces[i] for i in rng.choice(len(faces), count, replace=False)]


@register(
    "A6",
    "griffiths",
    "correlations are positive, monotone in the domain and positively correlated",
    "Griffiths-type inequalities on random instances in the determinant engine",
)
def run_griffiths(config) -> Rows:
    n = _n(config, 200)
    rng = make_rng(config.seed, 0)
    size = 6
    rows = list()
    for k in range(n):
        m = int(rng.integers(2, size + 1))
        domain = DiscreteDomain(square_faces(m))
        x0, y0 = rng.integers(0, m, size=2)
        w = int(rng.integers(1, m - x0 + 1))
        h = int(rng.integers(1, m - y0 + 1))
        sub_faces = [(x0 + i, y0 + j) for i in range(w) for j in range(h)]
        subdomain = DiscreteDomain(sub_faces)
        faces_a = _random_faces(rng, sub_faces, 3)
        faces_b = _random_faces(rng, sub_faces, 3)
        lam = float(rng.uniform(0.1, 1.5))
        rep = griffiths_check(domain, subdomain, faces_a, faces_b, lam)
        slack = min(
            rep.positivity_slack, rep.monotonicity_slack, rep.correlation_slack
        )
        params = {
            "instance": k,
            "box": m,
            "subdomain": f"{x0},{y0},{w}x{h}",
            "faces_a": _faces_str(faces_a),
            "faces_b": _faces_str(faces_b),
            "lam": lam,
            "positivity": rep.positivity_slack,
            "monotonicity": rep.monotonicity_slack,
            "correlation": rep.correlation_slack,
            "holds": rep.holds(),
        }
        rows.append(_row("griffiths", params, slack, None, None, config.seed))
    return rows


@register(
    "A7",
    "nongaussian",
    "the spin field is not Gaussian: the Wick relation fails for three points",
    "Wick residual of a symmetric triple of spins in the unit disk",
)
def run_nongaussian(config) -> Rows:
    mesh = config.mesh or 1 / 128
    lam = _lams(config, (0.5,))[0]
    rows = list()
    previous = None
    for rho in sorted(config.r or (0.4, 0.2, 0.1), reverse=True):
        res = nongaussianity_residual(lam, rho, mesh, num_jobs=config.threads)
        grows = previous is None or abs(res) >= abs(previous)
        params = {"lam": lam, "rho": rho, "mesh": mesh, "grows": grows}
        rows.append(_row("nongaussian", params, res))
        previous = res
    return rows


@register(
    "A8",
    "sobolev",
    "cutoff winding fields converge in second mean in H^-alpha",
    "H^-alpha distances of rescaled cutoff fields for consecutive cutoffs",
)
def run_sobolev(config) -> Rows:
    mesh = config.mesh or 1 / 64
    descriptor = config.domain or {"shape": "square", "side": 1.0}
    domain = build_domain(descriptor, mesh)
    lam = _lams(config, (0.5,))[0]
    deltas = config.delta or (0.4, 0.2, 0.1, 0.05)
    n = _n(config, 200)
    diag = sobolev_cauchy_diagnostic(
        domain,
        lam,
        config.beta,
        config.alpha,
        deltas,
        n,
        config.seed,
        num_jobs=config.threads,
    )
    decreasing = diag.is_decreasing()
    rows = list()
    for row in diag.rows():
        params = {
            "lam": lam,
            "beta": config.beta,
            "alpha": config.alpha,
            "mesh": mesh,
            "delta": row["delta"],
            "delta_prime": row["delta_prime"],
            "k": diag.k,
            "decreasing": decreasing,
            "annotation": diag.annotation,
        }
        value, stderr = row["value"], row["stderr"]
        rows.append(_row("sobolev", params, value, stderr, row["n"], config.seed))
    return rows


@register(
    "A9",
    "reflection",
    "the massive spin field is reflection positive",
    "Gram matrix of reflected spin monomials in a massive box",
)
def run_reflection(config) -> Rows:
    kappa = config.kappa or 1.0
    lam = _lams(config, (0.5,))[0]
    size = 24
    if config.domain is not None:
        size = int(str(config.domain).partition(":")[2] or size)
    n = _n(config, 2_000)
    rep = reflection_positivity_check(
        kappa, lam, size, n_samples=n, seed=config.seed, num_jobs=config.threads
    )
    params = {
        "lam": lam,
        "kappa": kappa,
        "size": size,
        "functions": len(rep.functions),
        "symmetry_z": rep.symmetry_zscore,
        "positive": rep.is_positive(),
        "symmetric": rep.is_symmetric(),
        "statistic": "min eigenvalue",
    }
    row = _row("reflection", params, rep.min_eigenvalue, rep.error, n, config.seed)
    return [row]


@register(
    "A10",
    "enumeration",
    "determinant masses equal sums over closed walks",
    "determinant loop masses against brute-force enumeration on small domains",
)
def run_enumeration(config) -> Rows:
    max_faces = 6
    max_length = 64
    rows = list()
    for faces in fixed_polyominoes(max_faces):
        domain = DiscreteDomain(faces)
        enum = enumerate_loop_masses(domain, max_length, faces=faces)
        det = parity_pattern_masses(domain, faces)
        total = total_loop_mass(domain).value
        diff = abs(total - enum.total)
        diff = max([diff] + [abs(det[p].value - enum.patterns[p]) for p in det])
        params = {
            "faces": _faces_str(faces),
            "total": total,
            "enumerated": enum.total,
            "tail_bound": enum.tail_bound,
            "within": diff <= enum.tail_bound + 1e-12,
        }
        rows.append(_row("enumeration", params, diff))
    logger.info("enumeration: checked %d domains", len(rows))
    return rows
