from __future__ import annotations

import numpy as np

from ..errors import DegenerateInputError
from .raster import DualBandRaster

# projections within this fraction of the scene's principal spread are rounding noise
_NOISE_FLOOR = 1e-9


def principal_axes(raster: DualBandRaster) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigen-decomposition of the 2x2 band covariance.

    Returns ``(mean, eigenvalues, eigenvectors)`` with eigenvalues in
    descending order and eigenvectors as columns.
    """
    pixels = np.stack([raster.band_a.ravel(), raster.band_b.ravel()], axis=1)
    if pixels.shape[0] < 2:
        raise DegenerateInputError("need at least 2 pixels for PCA")
    mean = pixels.mean(axis=0)
    centered = pixels - mean
    if not np.all(centered.any(axis=0)):
        raise DegenerateInputError("a band has zero variance; no scene to separate from change")
    cov = centered.T @ centered / pixels.shape[0]
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    return mean, evals[order], evecs[:, order]


def build_change_image(raster: DualBandRaster) -> np.ndarray:
    """Project pixels onto the second principal component of the 2-band ensemble.

    The first component captures the static scene shared by both bands;
    the second isolates between-band differences. The sign is fixed so that
    positive values mean "brighter in band B" (the object's later position).
    """
    mean, evals, evecs = principal_axes(raster)
    axis = evecs[:, 1]
    lean = axis[1] - axis[0]
    if lean < 0 or (lean == 0 and axis[1] < 0):
        axis = -axis
    a = raster.band_a - mean[0]
    b = raster.band_b - mean[1]
    change = axis[0] * a + axis[1] * b
    change[np.abs(change) <= _NOISE_FLOOR * np.sqrt(max(evals[0], 0.0))] = 0.0
    return change
