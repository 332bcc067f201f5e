"""Batch figure rendering for lduo solver artifacts.

Reads the CSV/JSON outputs of the solver CLI (verifying them against
the run manifest) and renders deterministic PNG and SVG images: 2D
spectra contour maps with a diagonal guide, hierarchy lattice sketches
from the lattice dump, and the 2x3 bath-coordinate panel grids with the
non-additivity residual.
"""

__version__ = "0.1.0"

from .io import HashMismatchError, load_manifest, verified_csv
from .render import FigureSpec, render
