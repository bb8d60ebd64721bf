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
from pytest import mark, raises, approx
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st
from scipy.special import ellipk, hyp2f1
from loopsoup import exact
from loopsoup.lattice import (
    DiscreteDomain,
    build_domain,
    build_transition_matrix,
    defect_line,
)
from loopsoup.shape import Disk, Square
from loopsoup.utils import DomainError, NumericalError, ParameterError

settings.load_profile("loopsoup")

UNIT = {"shape": "square", "n": 1, "mesh": 1}


def test_logdet_unit_square():
    dom = build_domain(UNIT)
    logdet = exact.log_det_one_minus(build_transition_matrix(dom))
    assert logdet == approx(math.log(3 / 4))
    line = defect_line(dom, (0, 0))
    twisted = build_transition_matrix(dom, [line])
    assert exact.log_det_one_minus(twisted) == approx(2 * math.log(7 / 8))


@mark.parametrize("text", ["box:4", "square:6", "disk:1"])
def test_logdet_dense_and_sparse_agree(text):
    dom = build_domain(text)
    line = defect_line(dom, dom.faces[len(dom.faces) // 2])
    tm = build_transition_matrix(dom, [line])
    dense = exact.log_det_one_minus(tm, method="dense")
    sparse = exact.log_det_one_minus(tm, method="sparse")
    assert dense == approx(sparse, rel=1e-10)


def test_logdet_matches_slogdet():
    dom = build_domain("box:3")
    tm = build_transition_matrix(dom, mass=0.5)
    sign, expected = np.linalg.slogdet(np.eye(dom.num_vertices) - tm.toarray())
    assert sign == 1
    assert exact.log_det_one_minus(tm) == approx(expected)


def test_logdet_complex_phases_real():
    dom = build_domain("box:3")
    line = defect_line(dom, (1, 1))
    tm = build_transition_matrix(dom, [line], phases=[np.pi])
    signed = build_transition_matrix(dom, [line])
    assert exact.log_det_one_minus(tm) == approx(exact.log_det_one_minus(signed))


def test_logdet_errors():
    assert exact.log_det_one_minus(np.zeros((0, 0))) == 0.0
    with raises(NumericalError):
        exact.log_det_one_minus(np.full((2, 2), np.nan))
    dom = build_domain(UNIT)
    # spectral radius above one gives a negative determinant
    mat = 3 * build_transition_matrix(dom).toarray()
    with raises(NumericalError):
        exact.log_det_one_minus(mat)
    with raises(ParameterError):
        exact.log_det_one_minus(mat, method="qr")


def test_log_det_auto_method(monkeypatch):
    tm = build_transition_matrix(build_domain("box:6"))
    calls = list()
    dense, sparse = exact._dense_logdet, exact._sparse_logdet

    def record(name, func):
        def wrapped(mat):
            calls.append(name)
            return func(mat)
        return wrapped

    monkeypatch.setattr(exact, "_dense_logdet", record("dense", dense))
    monkeypatch.setattr(exact, "_sparse_logdet", record("sparse", sparse))
    assert exact.DENSE_LU_LIMIT == 20_000
    value = exact.log_det_one_minus(tm)
    assert calls == ["dense"]
    monkeypatch.setattr(exact, "DENSE_LU_LIMIT", 10)
    assert exact.log_det_one_minus(tm) == approx(value)
    assert calls == ["dense", "sparse"]


def test_total_loop_mass():
    dom = build_domain(UNIT)
    mass = exact.total_loop_mass(dom)
    assert mass.value == approx(math.log(4 / 3))
    assert float(mass) == mass.value
    assert mass.rule == "all"
    assert exact.total_loop_mass(dom, kappa=np.inf).value == 0.0
    with raises(ParameterError):
        exact.total_loop_mass(dom, kappa=-1)


def test_total_loop_mass_decreases_with_kappa():
    dom = build_domain("box:3")
    masses = [exact.total_loop_mass(dom, k).value for k in (0.0, 0.5, 2.0, 10.0)]
    assert all(a > b for a, b in zip(masses, masses[1:]))


def test_sum_odd_mass_unit_square():
    dom = build_domain(UNIT)
    mass = exact.parity_constrained_mass(dom, [(0, 0)])
    assert mass.value == approx(0.5 * math.log(49 / 48))
    assert exact.parity_constrained_mass(dom, []).value == 0.0


def test_parity_mass_errors():
    dom = build_domain("box:3")
    with raises(ParameterError):
        exact.parity_constrained_mass(dom, [(0, 0), (0, 0)])
    with raises(DomainError):
        exact.parity_constrained_mass(dom, [(4, 4)])
    with raises(ParameterError):
        exact.parity_constrained_mass(dom, [(0, 0)], "sum-even")
    with raises(ParameterError):
        exact.parity_constrained_mass(dom, [(0, 0), (1, 1)], "pattern", pattern=[1])


@mark.parametrize("strategy", ["straight-east", "shortest"])
def test_parity_mass_independent_of_defect_lines(strategy):
    dom = build_domain("box:5")
    faces = [(1, 2), (3, 1)]
    ref = exact.parity_constrained_mass(dom, faces)
    mass = exact.parity_constrained_mass(dom, faces, strategy=strategy)
    assert mass.value == approx(ref.value, rel=1e-10)


def test_pattern_masses_sum_to_total():
    dom = build_domain("box:4")
    faces = [(0, 0), (2, 1), (3, 3)]
    masses = exact.parity_pattern_masses(dom, faces)
    assert len(masses) == 8
    total = sum(m.value for m in masses.values())
    assert total == approx(exact.total_loop_mass(dom).value, rel=1e-10)
    odd = sum(m.value for bits, m in masses.items() if sum(bits) % 2)
    assert odd == approx(exact.parity_constrained_mass(dom, faces).value, rel=1e-10)
    assert all(m.value >= 0 for m in masses.values())


def test_pattern_rule():
    dom = build_domain("box:3")
    faces = [(0, 0), (2, 2)]
    masses = exact.parity_pattern_masses(dom, faces)
    mass = exact.parity_constrained_mass(dom, faces, "pattern", pattern=[1, 0])
    assert mass.value == masses[(1, 0)].value
    assert mass.pattern == (1, 0)


def test_too_many_marked_faces():
    dom = build_domain("box:4")
    with raises(ParameterError):
        exact.parity_pattern_masses(dom, dom.faces[: exact.MAX_MARKED_FACES + 1])


def test_n_point_function_unit_square():
    dom = build_domain(UNIT)
    assert exact.n_point_function(dom, [(0, 0)], 0.5) == approx(math.sqrt(48 / 49))
    assert exact.n_point_function(dom, [(0, 0)], 0.0) == 1.0
    assert exact.n_point_function(dom, [], 2.0) == 1.0
    with raises(ParameterError):
        exact.n_point_function(dom, [(0, 0)], -0.1)


@given(st.floats(0.01, 4.0))
def test_n_point_function_range(lam):
    dom = build_domain("box:4")
    value = exact.n_point_function(dom, [(1, 1), (2, 3)], lam)
    assert 0 < value <= 1


def test_n_point_function_decreases_with_lambda():
    dom = build_domain("box:4")
    lams = (0.25, 0.5, 1.0, 2.0)
    values = [exact.n_point_function(dom, [(1, 1)], lam) for lam in lams]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_winding_function_at_pi_is_spin_correlation():
    dom = build_domain("box:4")
    faces = [(1, 1), (2, 3)]
    expected = exact.n_point_function(dom, faces, 0.7)
    value = exact.winding_n_point_function(dom, faces, np.pi, 0.7)
    assert value == approx(expected, rel=1e-9)


def test_winding_function_limits():
    dom = build_domain("box:4")
    assert exact.winding_n_point_function(dom, [(1, 1)], 0.0, 1.0) == approx(1.0)
    assert exact.winding_twisted_mass(dom, [(1, 1)], 1.0) <= 0
    with raises(ParameterError):
        exact.winding_n_point_function(dom, [(1, 1)], 4.0, 1.0)


def test_winding_function_monotone_in_beta():
    dom = build_domain("box:5")
    betas = (0.5, 1.5, 2.5)
    values = [exact.winding_n_point_function(dom, [(2, 2)], b, 1.0) for b in betas]
    assert all(a > b for a, b in zip(values, values[1:]))


# =========================================================================


def test_greens_function_unit_square():
    dom = build_domain(UNIT)
    green = exact.greens_function(dom)
    assert_allclose(green.diagonal(), 7 / 6)
    assert green[0, 1] == approx(1 / 3)
    assert green[0, 3] == approx(1 / 6)
    assert_allclose(np.asarray(green) @ green.precision, np.eye(4), atol=1e-12)


def test_greens_function_symmetric_positive():
    dom = build_domain("disk:1")
    green = np.asarray(exact.greens_function(dom, kappa=0.1))
    assert_allclose(green, green.T)
    assert np.all(green > 0)


@mark.parametrize("x, y, expected", [(0, 0, 1.0), (0.5, 0.0, 0.75), (0.0, -0.6, 0.64)])
def test_conformal_radius_disk(x, y, expected):
    assert exact.conformal_radius("disk", (x, y)) == approx(expected)


def test_conformal_radius_scales():
    assert exact.conformal_radius(Disk(2.0, (1, 1)), (2.0, 1.0)) == approx(1.5)
    r = exact.conformal_radius(Square(2.0), (1.0, 1.0))
    assert r == approx(2.0 * exact.conformal_radius("square", (0.5, 0.5)))


def test_conformal_radius_square_center():
    assert exact.conformal_radius("square", (0.5, 0.5)) == approx(1 / ellipk(0.5))


@given(st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_conformal_radius_square_symmetry(x, y):
    r = exact.conformal_radius("square", (x, y))
    assert r == approx(exact.conformal_radius("square", (y, x)), rel=1e-8)
    assert r == approx(exact.conformal_radius("square", (1 - x, y)), rel=1e-8)
    assert r <= exact.conformal_radius("square", (0.5, 0.5)) + 1e-12


@mark.parametrize("d", [0.01, 0.02])
def test_conformal_radius_square_near_edge(d):
    # near a straight edge the radius approaches the half plane value 2d
    assert exact.conformal_radius("square", (0.5, d)) == approx(2 * d, rel=1e-2)


@mark.parametrize("w", [0.3, 0.5j, 0.4 + 0.4j, -0.6 + 0.1j])
def test_square_map_matches_hypergeometric(w):
    series = w * hyp2f1(0.5, 0.25, 1.25, -(w**4))
    assert exact._square_map(w) == approx(series, rel=1e-10)


def test_conformal_radius_automorphism():
    a, theta = 0.3 + 0.2j, 0.4
    z = (0.1, -0.5)
    f, df = exact.disk_automorphism(a, theta)
    zc = complex(*z)
    expected = abs(df(zc)) * (1 - abs(zc) ** 2)
    radius = exact.conformal_radius("disk", z, automorphism=(a, theta))
    assert radius == approx(expected)


def test_conformal_radius_errors():
    with raises(ParameterError):
        exact.conformal_radius("disk", (1.0, 0.0))
    with raises(ParameterError):
        exact.conformal_radius("square", (0.0, 0.5))
    with raises(ParameterError):
        exact.conformal_radius("triangle", (0.0, 0.0))
    with raises(ParameterError):
        exact.conformal_radius("square", (0.5, 0.5), automorphism=(0.1, 0.0))
    with raises(ParameterError):
        exact.disk_automorphism(1.5)


@mark.slow
def test_lattice_conformal_radius_square():
    n = 64
    dom = build_domain("square:%d" % n)
    # vertices on the square boundary belong to the domain, so the walk is
    # killed one step outside the unit square
    side = 1 + 2 / n
    expected = exact.conformal_radius(Square(side, (-1 / n, -1 / n)), (0.5, 0.5))
    radius = exact.lattice_conformal_radius(dom, (n // 2, n // 2))
    assert radius == approx(expected, rel=2e-2)


# =========================================================================


def test_griffiths_inequalities():
    dom = build_domain("box:4")
    sub = dom.subdomain([(i, j) for i in range(3) for j in range(3)])
    report = exact.griffiths_check(dom, sub, [(0, 0), (2, 2)], [(1, 1), (2, 2)], 0.8)
    assert report.holds()
    assert report.positivity_slack > 0
    assert report.monotonicity_slack >= 0
    assert report.correlation_slack >= 0
    assert set(report.todict()) >= {"corr_a", "corr_ab", "correlation_slack"}


def test_griffiths_requires_subdomain():
    dom = build_domain("box:3")
    other = DiscreteDomain([(5, 5)])
    with raises(DomainError):
        exact.griffiths_check(dom, other, [(5, 5)], [(5, 5)], 0.5)


def test_boundary_mass_difference():
    # all faces of the coarse disk already lie in the disk of radius 0.999
    assert exact.boundary_mass_difference(0.999, 0.25) == 0.0
    value = exact.boundary_mass_difference(0.5, 1 / 16)
    assert value > 0
    with raises(ParameterError):
        exact.boundary_mass_difference(1.0, 0.25)


@mark.slow
def test_boundary_mass_difference_continuum():
    r = 0.5
    value = exact.boundary_mass_difference(r, 1 / 64)
    assert value == approx(-math.log(r) / 8, rel=0.1)


def test_symmetric_triple():
    pts = exact.symmetric_triple(0.4)
    assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.4)
    rot = np.array([[-0.5, -math.sqrt(3) / 2], [math.sqrt(3) / 2, -0.5]])
    assert_allclose(pts @ rot.T, np.roll(pts, -1, axis=0), atol=1e-12)


def test_wick_residual():
    assert exact.wick_residual(0.0, 0.0, 1.0) == approx(0.0)
    assert exact.wick_residual(0.3, 0.1, 0.0) == approx(0.0)
    assert exact.nongaussianity_residual(0.0, 0.5, 1 / 8) == approx(0.0, abs=1e-12)


def test_nongaussianity_residual_errors():
    with raises(ParameterError):
        exact.nongaussianity_residual(0.5, 1.2, 1 / 8)
    with raises(ParameterError):
        exact.nongaussianity_residual(0.5, 0.0, 1 / 8)


# =========================================================================


def test_enumeration_matches_determinant():
    dom = build_domain("box:2")
    faces = [(0, 0), (1, 1)]
    enum = exact.enumerate_loop_masses(dom, faces=faces)
    assert enum.tail_bound < 1e-8
    total = exact.total_loop_mass(dom).value
    assert enum.total == approx(total, abs=enum.tail_bound + 1e-10)
    masses = exact.parity_pattern_masses(dom, faces)
    for bits, value in enum.patterns.items():
        assert value == approx(masses[bits].value, abs=enum.tail_bound + 1e-10)
    odd = exact.parity_constrained_mass(dom, faces).value
    assert enum.odd == approx(odd, abs=enum.tail_bound + 1e-10)


@mark.parametrize("faces", [[(0, 0), (1, 0), (2, 0)], [(0, 0), (0, 1), (1, 1), (1, 2)]])
def test_enumeration_polyominoes(faces):
    dom = DiscreteDomain(faces)
    enum = exact.enumerate_loop_masses(dom, faces=[faces[0]])
    odd = exact.parity_constrained_mass(dom, [faces[0]]).value
    assert enum.odd == approx(odd, abs=enum.tail_bound + 1e-10)


def test_enumeration_limits():
    with raises(ParameterError):
        exact.enumerate_loop_masses(build_domain("box:3"))
    with raises(ParameterError):
        exact.enumerate_loop_masses(build_domain("box:1"), max_length=0)
