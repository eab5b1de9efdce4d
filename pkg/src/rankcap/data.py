"""Synthetic bounded-norm samples with binary labels.

Both tasks guarantee max row norm <= R: blob rows that land outside the ball
are rescaled onto its surface, sphere rows live on the surface by
construction.  Identical seeds reproduce samples bit for bit.
"""

import numpy as np

from .complexity import ROLE_DATA, stream
from .network import DataSample
from .validation import as_positive_int, as_real

TASKS = ("gaussian_blobs", "sphere_uniform")

# blob geometry: centers at +-0.5 R along a seeded direction, per-coordinate
# noise sd 0.5 R / sqrt(d) so typical rows stay inside the ball
_CENTER_SCALE = 0.5
_NOISE_SCALE = 0.5


def _unit_vector(rng, dim):
    vec = rng.standard_normal(dim)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec = np.zeros(dim)
        vec[0] = 1.0
        return vec
    return vec / norm


def gen_synthetic(m, dim, max_norm, seed, task):
    """Draw m labeled rows of dimension dim with row norms capped at max_norm.

    gaussian_blobs: two Gaussian clusters at +-0.5*max_norm along a random
    direction, labels the cluster signs, boundary rows rescaled to the cap.
    sphere_uniform: rows uniform on the radius-max_norm sphere, labels the
    sign of a fixed random halfspace.

    Returns (DataSample, labels) with labels in {-1.0, +1.0}.
    """
    m = as_positive_int(m, "m")
    dim = as_positive_int(dim, "dim")
    max_norm = as_real(max_norm, "max_norm", minimum=0.0)
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    rng = stream(seed, ROLE_DATA, 0)

    if task == "gaussian_blobs":
        direction = _unit_vector(rng, dim)
        labels = rng.integers(0, 2, size=m).astype(np.float64) * 2.0 - 1.0
        noise = rng.standard_normal((m, dim))
        x = (
            labels[:, None] * (_CENTER_SCALE * max_norm) * direction
            + (_NOISE_SCALE * max_norm / np.sqrt(dim)) * noise
        )
        norms = np.linalg.norm(x, axis=1)
        over = norms > max_norm
        if np.any(over):
            x[over] *= (max_norm / norms[over])[:, None]
    else:
        raw = rng.standard_normal((m, dim))
        norms = np.linalg.norm(raw, axis=1)
        degenerate = norms == 0.0
        if np.any(degenerate):
            raw[degenerate, 0] = 1.0
            norms = np.linalg.norm(raw, axis=1)
        x = max_norm * raw / norms[:, None]
        separator = _unit_vector(rng, dim)
        labels = np.sign(x @ separator)
        labels[labels == 0.0] = 1.0

    return DataSample.from_array(x), labels
