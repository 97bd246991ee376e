"""Numerical toolkit for the diffusion picture of SGD with a learning rate ``s``.

Submodules: ``objective`` (test landscapes), ``dynamics`` (SGD and the SDE),
``gibbs`` (stationary measures), ``pde`` (Fokker-Planck evolution and
functional inequalities), ``spectral`` (Witten Laplacian), ``morse``
(critical points and barriers), ``lrdecay`` (decay arithmetic), ``verify``
(acceptance suite) and ``cli``.
"""
from .errors import SgdLabError
from .objective import available, catalog

__version__ = "0.1.0"

__all__ = ["SgdLabError", "available", "catalog", "__version__"]
