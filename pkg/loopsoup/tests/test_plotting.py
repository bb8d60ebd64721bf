# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

import matplotlib

matplotlib.use("Agg")

import numpy as np
import matplotlib.pyplot as plt
from pytest import fixture
from numpy.testing import assert_allclose
from loopsoup import plotting
from loopsoup.fields import cutoff_winding_field, spin_field
from loopsoup.lattice import build_domain, defect_line
from loopsoup.sampler import LatticeLoop, LoopSoup


@fixture(autouse=True)
def close_figures():
    yield
    plt.close("all")


def _soup(domain):
    loops = [
        LatticeLoop((1, 1), "ENWS"),
        LatticeLoop((1, 1), "EENNWWSS"),
        LatticeLoop((2, 2), "EW"),
    ]
    return LoopSoup(domain, loops, 1.0)


def test_draw_domain():
    dom = build_domain("box:3")
    ax = plotting.draw_domain(dom)
    assert ax.get_xlim() == (-1.0, 4.0)
    assert ax.get_ylim() == (-1.0, 4.0)
    assert len(ax.collections) == 2


def test_draw_defect_line():
    dom = build_domain("box:3")
    line = defect_line(dom, (1, 1))
    _, ax = plotting.subplot()
    plotting.draw_defect_line(dom, line, ax)
    drawn = ax.lines[-1]
    assert_allclose(drawn.get_xdata(), [1.5, 2.5, 3.0])
    assert_allclose(drawn.get_ydata(), [1.5, 1.5, 1.5])


def test_draw_loops():
    dom = build_domain("box:3")
    soup = _soup(dom)
    _, ax = plotting.subplot()
    plotting.draw_loops(soup, ax)
    # the length-2 loop is skipped
    assert len(ax.lines) == 2
    plotting.draw_loops(soup, ax, min_length=2)
    assert len(ax.lines) == 5


def test_draw_loop_closed():
    line = plotting.draw_loop(LatticeLoop((0, 0), "ENWS"), mesh=0.5)
    assert_allclose(line.get_xdata(), [0.0, 0.5, 0.5, 0.0, 0.0])
    assert_allclose(line.get_ydata(), [0.0, 0.0, 0.5, 0.5, 0.0])


def test_draw_field():
    dom = build_domain("box:3")
    soup = _soup(dom)
    coll = plotting.draw_field(spin_field(soup))
    assert len(coll.get_array()) == dom.num_faces

    fld = cutoff_winding_field(soup, np.pi / 2, 0.0)
    coll = plotting.draw_field(fld, part="imag", colorbar=False)
    assert_allclose(coll.get_array(), np.asarray(fld.values).imag)


def test_hide_box():
    _, ax = plotting.subplot()
    plotting.hide_box(ax, axis=True)
    assert not ax.spines["top"].get_visible()
    assert not ax.spines["left"].get_visible()
