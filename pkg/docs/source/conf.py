# Sphinx configuration of the loopsoup documentation.

import os
import sys

sys.path.insert(0, os.path.abspath("../.."))

import loopsoup  # noqa: E402

# -- Project -----------------------------------------------------------------

project = "loopsoup"
copyright = "2026, The loopsoup developers"
author = "The loopsoup developers"
release = getattr(loopsoup, "__version__", "")

# -- General -----------------------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.intersphinx",
    "sphinx.ext.viewcode",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
    "numpydoc",
    "myst_parser",
    "matplotlib.sphinxext.plot_directive",
    "sphinx_toggleprompt",
    "sphinx_rtd_theme",
]

templates_path = ["_templates"]
exclude_patterns = [
    "_build",
    "tests",
    "generated/loopsoup.rst",
    "generated/modules.rst",
]
source_suffix = [".rst", ".md"]

html_theme = "sphinx_rtd_theme"
html_static_path = ["_static"]

# numpydoc repeats the type hints in the parameter sections
autodoc_typehints = "none"
autodoc_member_order = "bysource"
add_module_names = True
autosummary_generate = True

numpydoc_use_plots = True
numpydoc_show_class_members = False

# -- Plots and doctests ------------------------------------------------------

plot_pre_code = """
import numpy as np
import matplotlib.pyplot as plt
import loopsoup as ls
"""
doctest_global_setup = plot_pre_code
doctest_global_cleanup = "plt.close('all')"

plot_include_source = True
plot_html_show_source_link = False
plot_formats = [("png", 100), "pdf"]
# square figures, domains are drawn with equal aspect
plot_rcparams = {
    "font.size": 8,
    "axes.titlesize": 8,
    "axes.labelsize": 8,
    "legend.fontsize": 8,
    "figure.figsize": (4, 4),
    "text.usetex": False,
}

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "matplotlib": ("https://matplotlib.org/stable/", None),
}


# -- API pages ---------------------------------------------------------------


def run_apidoc(_):
    """Writes one page per module to ``generated/`` before each build."""
    from sphinx.ext.apidoc import main

    here = os.path.abspath(os.path.dirname(__file__))
    root = os.path.dirname(os.path.dirname(here))
    package = os.path.join(root, "loopsoup")
    output = os.path.join(here, "generated")
    main(["-fMeT", "-o", output, package, os.path.join(package, "tests")])


def setup(app):
    app.connect("builder-inited", run_apidoc)
