"""Regression of orbital-angular-momentum superpositions from intensity
images: beam rendering, two-image symmetry breaking, PCA compression and
linear/tree regression onto generalized Bloch vectors."""

import os as _os

# Worker-thread override must land before numpy loads its BLAS.
if "OAMREG_THREADS" in _os.environ:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["OAMREG_THREADS"])

__version__ = "0.1.0"

from . import optics, pca, pipeline, regress, states, storage  # noqa: E402,F401
