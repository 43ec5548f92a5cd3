"""Gaussian-process draws for parametric boundary conditions.

The covariance is squared-exponential over ONE projected coordinate (x or y),
so boundary functions vary only along that axis.  Draws use the lower
Cholesky factor of the kernel matrix plus an escalating diagonal jitter:
with a few hundred nearly collinear boundary points the kernel is numerically
rank deficient and a bare factorization fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GPError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GPSpec:
    mean: float = 0.0
    length_scale: float = 1.0
    projection: str = "x"
    jitter: float = 1e-10

    def __post_init__(self):
        if self.length_scale <= 0.0:
            raise ValueError("length_scale must be positive")
        if self.jitter < 0.0:
            raise ValueError("jitter must be non-negative")
        if self.projection not in ("x", "y"):
            raise ValueError("projection must be 'x' or 'y'")


def _projected(spec, points):
    pts = points.coords.data if hasattr(points, "coords") else np.asarray(points)
    return pts[:, 0] if spec.projection == "x" else pts[:, 1]


def kernel_matrix(spec, points):
    """K_ij = exp(-(c_i - c_j)^2 / (2 l^2)) on the projected coordinate."""
    c = _projected(spec, points)
    d = c[:, None] - c[None, :]
    # d*d is exactly symmetric with an exactly-zero diagonal, so K is exactly
    # symmetric with unit diagonal by construction
    return np.exp(-(d * d) / (2.0 * spec.length_scale**2))


def _chol_with_jitter(Kmat, jitter0):
    n = Kmat.shape[0]
    jit = max(jitter0, 1e-10)
    while jit <= 1e-4:
        try:
            return np.linalg.cholesky(Kmat + jit * np.eye(n))
        except np.linalg.LinAlgError:
            jit *= 10.0
    cond = np.linalg.cond(Kmat)
    raise GPError(
        f"kernel matrix not factorizable up to jitter 1e-4 (n={n}, cond={cond:.3e})"
    )


def gp_draw(spec, points, seed):
    """One draw of the process at the given points, deterministic in seed."""
    Kmat = kernel_matrix(spec, points)
    L = _chol_with_jitter(Kmat, spec.jitter)
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal(Kmat.shape[0])
    return spec.mean + L @ z
