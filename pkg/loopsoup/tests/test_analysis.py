# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

import math
import numpy as np
from pytest import mark, raises, approx, warns
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st
from loopsoup import analysis
from loopsoup.analysis import Estimate
from loopsoup.exact import n_point_function
from loopsoup.lattice import build_domain
from loopsoup.utils import ParameterError

settings.load_profile("loopsoup")


@given(st.floats(0, 4), st.floats(0, np.pi))
def test_scaling_dimension(lam, beta):
    dim = analysis.scaling_dimension(lam, beta)
    assert 0 <= dim <= lam / 8 + 1e-12
    assert analysis.scaling_dimension(lam, np.pi) == approx(lam / 8)


def test_estimate():
    est = Estimate.from_samples([1.0, 3.0, 2.0, 2.0], seed=4)
    assert est.mean == 2.0
    assert est.std_error == approx(math.sqrt(2 / 3) / 2)
    assert est.n_samples == 4
    assert est.consistent(2.5)
    assert not est.consistent(10.0)
    scaled = est.scale(-2.0)
    assert scaled.mean == -4.0
    assert scaled.std_error == approx(2 * est.std_error)
    assert est.todict()["seed"] == 4


def test_estimate_degenerate():
    est = Estimate.from_samples([1.0, 1.0, 1.0])
    assert est.std_error == 0
    assert est.zscore(1.0) == 0
    assert est.zscore(1.1) == np.inf
    with raises(ParameterError):
        Estimate.from_samples([1.0])


def test_estimate_complex():
    est = Estimate.from_samples(np.exp(1j * np.array([0.0, 0.0, np.pi / 2, np.pi / 2])))
    assert est.mean == approx(0.5 + 0.5j)
    assert est.todict()["mean"] == approx([0.5, 0.5])


def test_jackknife_of_mean_is_standard_error():
    rng = np.random.default_rng(1)
    values = rng.standard_normal(50)
    value, error = analysis.jackknife(values, np.mean, blocks=50)
    assert value == approx(values.mean())
    assert error == approx(values.std(ddof=1) / math.sqrt(50))
    with raises(ParameterError):
        analysis.jackknife(values[:1], np.mean)


def test_mc_correlation_unit_square():
    dom = build_domain({"shape": "square", "n": 1, "mesh": 1})
    est = analysis.mc_correlation(dom, [(0, 0)], 0.5, n_samples=2000, seed=3)
    assert est.consistent(math.sqrt(48 / 49), nsigma=4)


def test_mc_correlation_two_point():
    dom = build_domain("box:3")
    faces = [(0, 1), (2, 1)]
    expected = n_point_function(dom, faces, 1.0)
    est = analysis.mc_correlation(dom, faces, 1.0, n_samples=2000, seed=5, num_jobs=2)
    assert est.consistent(expected, nsigma=4)


def test_mc_correlation_errors():
    dom = build_domain("box:2")
    with raises(ParameterError):
        analysis.mc_correlation(dom, [(0, 0)], 0.5, n_samples=10)
    with raises(ParameterError):
        analysis.mc_correlation(dom, [(0, 0)], -0.5)


# =========================================================================


@mark.parametrize("order", [1, -1])
def test_scaling_fit_synthetic(order):
    lam = 0.5
    meshes = np.array([1 / 4, 1 / 8, 1 / 16, 1 / 32])[::order]
    masses = -np.log(meshes) / 4 + 0.1
    fit = analysis.scaling_exponent_fit("square", None, lam, meshes, masses=masses)
    assert fit.expected == approx(lam / 4)
    assert fit.slope == approx(lam / 4)
    assert fit.within(1e-10)
    assert fit.r_squared == approx(1.0)


def test_scaling_fit_errors():
    with raises(ParameterError):
        analysis.scaling_exponent_fit(
            "square", None, 0.5, [1 / 4, 1 / 8, 1 / 16], masses=[0, 0, 0]
        )
    with raises(ParameterError):
        analysis.scaling_exponent_fit(
            "square", None, 0.5, [1 / 4, 1 / 8, 1 / 16, 1 / 20], masses=[0, 0, 0, 0]
        )
    with raises(ParameterError):
        analysis.scaling_exponent_fit(
            "hexagon", None, 0.5, [1 / 4, 1 / 8, 1 / 16, 1 / 32]
        )


def test_one_point_masses_grow_as_mesh_shrinks():
    masses = analysis.one_point_masses("square", (0.5, 0.5), [1 / 4, 1 / 8, 1 / 16])
    assert np.all(masses > 0)
    assert np.all(np.diff(masses) > 0)


@mark.slow
@mark.parametrize("lam", [0.5, 1.0])
def test_scaling_exponent_unit_square(lam):
    meshes = [1 / 16, 1 / 32, 1 / 64, 1 / 128]
    fit = analysis.scaling_exponent_fit("square", None, lam, meshes)
    assert fit.within(0.02)


def test_conformal_covariance_fit_errors():
    with raises(ParameterError):
        analysis.conformal_covariance_fit("disk", [(0, 0), (0.5, 0)], 0.5, 1 / 8)


@mark.slow
def test_conformal_covariance_disk():
    points = [(0.0, 0.0), (0.3, 0.0), (0.0, 0.5), (-0.6, 0.0), (0.0, -0.7)]
    fit = analysis.conformal_covariance_fit("disk", points, 1.0, 1 / 32)
    assert fit.expected == approx(-0.25)
    assert fit.within(0.03)


# =========================================================================


def test_boundary_perturbation_trivial():
    res = analysis.boundary_perturbation_probability(0.999, 1.0, 0.25, n_samples=100)
    assert res.mass == 0.0
    assert res.exact == 1.0
    assert res.estimate.mean == 1.0


def test_boundary_perturbation_matches_exact():
    res = analysis.boundary_perturbation_probability(
        0.5, 1.0, 1 / 8, n_samples=1000, seed=2
    )
    assert res.mass > 0
    assert 0.5 < res.exact < 1
    assert res.first_order < 1
    assert res.continuum == approx(0.5 ** (1 / 8))
    assert res.estimate.consistent(res.exact, nsigma=4)


def test_boundary_perturbation_errors():
    with raises(ParameterError):
        analysis.boundary_perturbation_probability(1.5, 1.0, 1 / 8)
    with raises(ParameterError):
        analysis.boundary_perturbation_probability(0.5, 1.0, 1 / 8, n_samples=5)


def test_twopoint_large_cutoffs_vanish():
    dom = build_domain("box:3")
    res = analysis.twopoint_decomposition(
        dom, (0, 0), (2, 2), 10.0, 5.0, 1.0, n_samples=20
    )
    for est in (res.kappa, res.tau_zw, res.tau_wz, res.tau_between):
        assert est.mean == 0.0
    assert res.direct.mean == 1.0
    assert res.reconstructed == 1.0


def test_twopoint_reconstruction():
    dom = build_domain("box:4")
    res = analysis.twopoint_decomposition(
        dom, (1, 1), (2, 2), 2.5, 1.5, 1.0, n_samples=2000, seed=8
    )
    tol = 4 * (res.direct.std_error + res.reconstructed_error) + 1e-12
    assert abs(res.direct.mean - res.reconstructed) < tol
    assert res.normalization == approx((2.5 * 1.5) ** (-0.25))
    assert set(res.todict()) >= {"kappa", "tau_zw", "direct", "reconstructed"}


def test_twopoint_errors():
    dom = build_domain("box:3")
    with raises(ParameterError):
        analysis.twopoint_decomposition(dom, (0, 0), (2, 2), 1.0, 0.5, 0.0)
    with raises(ParameterError):
        analysis.twopoint_decomposition(dom, (0, 0), (2, 2), 0.5, 1.0, 1.0)
    with raises(ParameterError):
        analysis.twopoint_decomposition(dom, (0, 0), (2, 2), 1.0, 0.0, 1.0)


# =========================================================================


def test_spectral_basis_square():
    n = 8
    dom = build_domain("square:%d" % n)
    basis = analysis.spectral_basis(dom, k_max=(n - 1) ** 2)
    k = np.arange(1, n)
    s = np.sin(k * np.pi / (2 * n)) ** 2
    expected = 4 * n**2 * (s[:, None] + s[None, :])
    assert_allclose(basis.eigenvalues, np.sort(expected.ravel()), rtol=1e-10)
    gram = dom.mesh**2 * basis.vectors.T @ basis.vectors
    assert_allclose(gram, np.eye(basis.size), atol=1e-10)
    assert basis.counting_function(basis.eigenvalues[4]) == 5


def test_spectral_basis_default_size():
    dom = build_domain("square:8")
    assert analysis.spectral_basis(dom).size == 12
    with raises(ParameterError):
        analysis.spectral_basis(dom, k_max=100)


def test_spectral_basis_grid_mapping():
    dom = build_domain("square:4")
    basis = analysis.spectral_basis(dom)
    assert_allclose(basis.to_grid(np.ones(dom.num_faces)), 1.0)
    values = np.arange(dom.num_vertices, dtype=float)
    assert_allclose(basis.to_grid(values), values[basis.vertices])
    with raises(ParameterError):
        basis.to_grid(np.ones(3))


def test_sobolev_norm_of_eigenfunction():
    dom = build_domain("square:8")
    basis = analysis.spectral_basis(dom, k_max=10)
    f = basis.vectors[:, 0]
    norm = analysis.sobolev_minus_alpha_norm(f, basis, 2.0)
    assert norm.value == approx(basis.eigenvalues[0] ** -2)
    assert norm.tail_bound == approx(0.0, abs=1e-10)
    assert float(analysis.sobolev_minus_alpha_norm(np.zeros_like(f), basis, 2.0)) == 0.0
    with raises(ParameterError):
        analysis.sobolev_minus_alpha_norm(f, basis, 0.0)


@given(
    st.integers(0, 2**32 - 1),
    st.floats(-8.0, 8.0, allow_nan=False),
    st.sampled_from([0.5, 1.0, 2.0]),
)
def test_sobolev_norm_is_a_norm(seed, c, alpha):
    dom = build_domain("square:6")
    basis = analysis.spectral_basis(dom, k_max=8)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=dom.num_faces)
    g = rng.normal(size=dom.num_faces)

    def norm(values):
        return math.sqrt(float(analysis.sobolev_minus_alpha_norm(values, basis, alpha)))

    assert norm(c * f) == approx(abs(c) * norm(f), rel=1e-9, abs=1e-12)
    assert norm(f + g) <= norm(f) + norm(g) + 1e-12


def test_cauchy_diagnostic():
    dom = build_domain("square:4")
    deltas = [0.25, 0.5, 0.125]
    diag = analysis.sobolev_cauchy_diagnostic(
        dom, 0.5, np.pi, 2.0, deltas, n_samples=20
    )
    assert diag.deltas == [0.5, 0.25, 0.125]
    assert len(diag.distances) == 2
    assert all(d.mean >= 0 for d in diag.distances)
    assert diag.dimension == approx(1 / 16)
    rows = diag.rows()
    assert rows[0]["delta"] == 0.5 and rows[0]["delta_prime"] == 0.25
    same = analysis.sobolev_cauchy_diagnostic(
        dom, 0.5, np.pi, 2.0, [0.2, 0.2], n_samples=5
    )
    assert same.distances[0].mean == 0.0


def test_cauchy_diagnostic_errors():
    dom = build_domain("square:4")
    with raises(ParameterError):
        analysis.sobolev_cauchy_diagnostic(dom, 0.5, np.pi, 1.5, [0.5, 0.25])
    with raises(ParameterError):
        analysis.sobolev_cauchy_diagnostic(dom, 0.5, np.pi, 2.0, [0.5])


def test_cauchy_diagnostic_warns_for_large_dimension():
    dom = build_domain("square:4")
    with warns(UserWarning):
        diag = analysis.sobolev_cauchy_diagnostic(
            dom, 4.5, np.pi, 2.0, [0.5, 0.25], n_samples=3
        )
    assert diag.annotation


# =========================================================================


def test_reflection_constant_function():
    report = analysis.reflection_positivity_check(
        5.0, size=4, n_samples=40, functions=[()], blocks=10
    )
    assert_allclose(report.gram, [[1.0]])
    assert report.min_eigenvalue == 1.0
    assert report.error == 0.0
    assert report.is_positive()
    assert report.is_symmetric()


def test_reflection_line_between_middle_columns(monkeypatch):
    def mirrored_field(size, kappa, lam, seed, replica):
        rng = np.random.default_rng(replica)
        half = rng.choice([-1, 1], size=(size // 2, size))
        return np.concatenate([half[::-1], half])

    monkeypatch.setattr(analysis, "sample_massive_halfplane_field", mirrored_field)
    functions = [(), ((2, 0),), ((3, 1),), ((2, 2), (3, 3))]
    report = analysis.reflection_positivity_check(
        1.0, size=4, n_samples=50, functions=functions, blocks=5
    )
    # mirrored fields make every function equal to its reflection
    assert_allclose(np.diag(report.gram), 1.0)
    assert_allclose(report.gram, report.gram.T)
    assert report.symmetry_zscore == 0.0
    assert report.min_eigenvalue >= -1e-12
    default = analysis.reflection_positivity_check(1.0, size=4, n_samples=5, blocks=5)
    assert all(i >= 2 for mono in default.functions for i, _ in mono)
    assert any(i == 2 for mono in default.functions for i, _ in mono)


def test_reflection_errors():
    with raises(ParameterError):
        analysis.reflection_positivity_check(0.0, size=4, n_samples=20)
    with raises(ParameterError):
        analysis.reflection_positivity_check(
            1.0, size=4, n_samples=20, functions=[((1, 1),)]
        )
    for size in (0, 5):
        with raises(ParameterError):
            analysis.reflection_positivity_check(1.0, size=size, n_samples=20)


@mark.slow
def test_reflection_positivity_massive_field():
    report = analysis.reflection_positivity_check(
        1.0, size=12, n_samples=2000, max_functions=8
    )
    assert report.gram.shape == (8, 8)
    assert report.is_positive(nsigma=3)
