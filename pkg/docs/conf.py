# Sphinx configuration for the ffdsim documentation.
import os
import sys

sys.path.insert(0, os.path.abspath(".."))

project = "ffdsim"
release = "0.1"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "myst_parser",
]
autosummary_generate = True
autodoc_default_options = {
    "members": True,
    "undoc-members": True,
    "show-inheritance": True,
}
autodoc_typehints = "description"
# the heavy numerical imports are not needed to render signatures
autodoc_mock_imports = ["flint", "opt_einsum"]

napoleon_numpy_docstring = True
napoleon_use_rtype = False

source_suffix = {
    ".rst": "restructuredtext",
    ".md": "markdown",
}
exclude_patterns = ["_build"]

html_theme = "sphinx_rtd_theme"
