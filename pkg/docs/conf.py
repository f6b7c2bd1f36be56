# Sphinx configuration for the scmavlc documentation.
import os
import sys

sys.path.insert(0, os.path.abspath(".."))

from scmavlc import __version__  # noqa: E402

project = "scmavlc"
copyright = "2026, scmavlc developers"
author = "scmavlc developers"
version = __version__
release = __version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx.ext.viewcode",
]

source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build"]

html_theme = "agogo"
htmlhelp_basename = "scmavlcdoc"

latex_documents = [
    (master_doc, "scmavlc.tex", "scmavlc Documentation", author, "manual")
]
man_pages = [(master_doc, "scmavlc", "scmavlc Documentation", [author], 1)]
