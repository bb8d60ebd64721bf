# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Plotting tools for domains, loops and face fields.

Plotting is kept out of the numerical modules; importing ``loopsoup`` does not
import matplotlib.
"""

import numpy as np
import matplotlib.pyplot as plt
from matplotlib.collections import LineCollection, PolyCollection
from matplotlib.lines import Line2D
import colorcet as cc

__all__ = [
    "set_color_cycler",
    "hide_box",
    "subplot",
    "draw_domain",
    "draw_defect_line",
    "draw_loop",
    "draw_loops",
    "draw_field",
]


def set_color_cycler(color_cycle=cc.glasbey_category10):
    """Sets the colors of the pyplot color cycler."""
    plt.rcParams["axes.prop_cycle"] = plt.cycler("color", color_cycle)


def hide_box(ax, axis=False):
    """Remove the box and optionally the axis of a plot.

    Parameters
    ----------
    ax : Axes
    axis : bool, optional
        If True the axis are hidden as well as the box.
    """
    for side in ["top", "right"]:
        ax.spines[side].set_visible(False)
    if axis:
        for side in ["left", "bottom"]:
            ax.spines[side].set_visible(False)
        ax.set_xticks([])
        ax.set_yticks([])


def subplot(ax=None):
    """Returns a figure and axes with equal aspect ratio."""
    if ax is None:
        fig, ax = plt.subplots()
    else:
        fig = ax.get_figure()
    ax.set_aspect("equal", "box")
    return fig, ax


def _face_polygons(faces, mesh):
    faces = np.asarray(faces, dtype=float)
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    return mesh * (faces[:, None, :] + corners[None, :, :])


def draw_domain(domain, ax=None, color="0.92", edgecolor="0.6", lw=0.4, **kwargs):
    """Draws the faces and edges of a discrete domain.

    Parameters
    ----------
    domain : DiscreteDomain
    ax : Axes, optional
    color, edgecolor : str, optional
        Face and edge colors.
    lw : float, optional
        Edge line width.

    Returns
    -------
    ax : Axes
    """
    fig, ax = subplot(ax)
    polys = _face_polygons(domain.faces, domain.mesh)
    coll = PolyCollection(polys, facecolor=color, edgecolor="none", **kwargs)
    ax.add_collection(coll)
    segments = domain.mesh * np.asarray(domain.edges, dtype=float)
    ax.add_collection(LineCollection(segments, color=edgecolor, lw=lw))
    lims = domain.limits()
    ax.set_xlim(lims[0, 0] - domain.mesh, lims[0, 1] + domain.mesh)
    ax.set_ylim(lims[1, 0] - domain.mesh, lims[1, 1] + domain.mesh)
    return ax


def draw_defect_line(domain, line, ax=None, color="r", lw=1.5, **kwargs):
    """Draws a defect line through the centres of its faces to the outside."""
    fig, ax = subplot(ax)
    centers = domain.mesh * (np.asarray(line.path, dtype=float) + 0.5)
    last = np.asarray(line.crossed_edges[-1], dtype=float).mean(axis=0) * domain.mesh
    points = np.vstack([centers, last])
    ax.add_line(Line2D(points[:, 0], points[:, 1], color=color, lw=lw, **kwargs))
    return ax


def draw_loop(loop, mesh=1.0, ax=None, color=None, lw=1.0, **kwargs):
    """Draws the closed polyline of a lattice loop."""
    fig, ax = subplot(ax)
    verts = mesh * loop.vertices().astype(float)
    verts = np.vstack([verts, verts[:1]])
    line = Line2D(verts[:, 0], verts[:, 1], color=color, lw=lw, **kwargs)
    ax.add_line(line)
    return line


def draw_loops(soup, ax=None, min_length=4, cmap=None, lw=0.8, alpha=0.8):
    """Draws the loops of a soup, colored with a categorical colormap.

    Loops shorter than ``min_length`` steps are skipped.
    """
    fig, ax = subplot(ax)
    colors = cc.glasbey_dark if cmap is None else cmap
    mesh = soup.domain.mesh
    k = 0
    for loop in soup.loops:
        if loop.time_length < min_length:
            continue
        draw_loop(loop, mesh, ax, color=colors[k % len(colors)], lw=lw, alpha=alpha)
        k += 1
    return ax


def draw_field(fld, ax=None, cmap=None, part="real", colorbar=True, **kwargs):
    """Draws a face field as colored faces.

    Parameters
    ----------
    fld : WindingField or SpinField or CutoffWindingField
    ax : Axes, optional
    cmap : Colormap, optional
        The default is ``colorcet.cm.coolwarm``.
    part : {"real", "imag", "abs"}, optional
        Component drawn for complex fields.
    colorbar : bool, optional

    Returns
    -------
    coll : PolyCollection
    """
    fig, ax = subplot(ax)
    values = np.asarray(fld.values)
    if np.iscomplexobj(values):
        values = {"real": values.real, "imag": values.imag, "abs": np.abs(values)}[part]
    domain = fld.domain
    coll = PolyCollection(
        _face_polygons(domain.faces, domain.mesh),
        array=values.astype(float),
        cmap=cc.cm.coolwarm if cmap is None else cmap,
        edgecolor="none",
        **kwargs,
    )
    ax.add_collection(coll)
    lims = domain.limits()
    ax.set_xlim(lims[0, 0], lims[0, 1])
    ax.set_ylim(lims[1, 0], lims[1, 1])
    if colorbar:
        fig.colorbar(coll, ax=ax)
    return coll
