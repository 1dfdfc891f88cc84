"""Concordance correlation coefficient (CCC), the 1 - CCC loss, and its gradient.

CCC between predictions x and targets y is

    ccc = 2 * cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)

with population (1/n) moments throughout. The population convention makes
ccc(x, x) exactly 1 for any n >= 2 and is the convention used everywhere in
this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, ShapeError

__all__ = ["CccStats", "ccc", "ccc_loss", "ccc_loss_grad"]


@dataclass(frozen=True)
class CccStats:
    """Moments entering the CCC formula plus the coefficient itself."""

    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov_xy: float
    ccc: float


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ShapeError(f"inputs must have equal length, got {x.size} and {y.size}")
    if x.size < 2:
        raise DegenerateError(f"ccc needs at least 2 samples, got {x.size}")
    return x, y


def ccc(x, y) -> CccStats:
    """Concordance correlation coefficient with population statistics."""
    x, y = _as_pair(x, y)
    mean_x = x.mean()
    mean_y = y.mean()
    dx = x - mean_x
    dy = y - mean_y
    var_x = (dx * dx).mean()
    var_y = (dy * dy).mean()
    cov_xy = (dx * dy).mean()
    denom = var_x + var_y + (mean_x - mean_y) ** 2
    if denom == 0.0:
        raise DegenerateError("both inputs are constant with equal means; ccc is undefined")
    return CccStats(mean_x, mean_y, var_x, var_y, cov_xy, 2.0 * cov_xy / denom)


def ccc_loss(x, y) -> float:
    """Agreement loss 1 - ccc(x, y), in [0, 2]."""
    return 1.0 - ccc(x, y).ccc


def ccc_loss_grad(x, y) -> np.ndarray:
    """Gradient of ``ccc_loss(x, y)`` with respect to each entry of x.

    With c = cov, d = var_x + var_y + (mean_x - mean_y)^2 and rho = 2c/d:

        d(loss)/dx_i = (2 / (n d)) * (rho * ((x_i - mean_x) + (mean_x - mean_y))
                                      - (y_i - mean_y))

    y is treated as constant. At x == y the gradient is identically zero.
    """
    x, y = _as_pair(x, y)
    s = ccc(x, y)
    n = x.size
    denom = s.var_x + s.var_y + (s.mean_x - s.mean_y) ** 2
    return (2.0 / (n * denom)) * (s.ccc * ((x - s.mean_x) + (s.mean_x - s.mean_y)) - (y - s.mean_y))
