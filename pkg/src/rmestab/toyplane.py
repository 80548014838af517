"""The two-variable illustration: matrices ``[[-1, a], [b, -1]]``.

Their eigenvalues are ``-1 +/- sqrt(ab)``, so the stable region is exactly
``ab < 1``. This module classifies a rectangle of the ``(a, b)`` plane,
emits the equilibrium loci of the toy models, and estimates the stability
probability when ``(a, b)`` is bivariate normal.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg as _linalg
from .sampler import StabilityEstimate, estimate_from_mask
from .streams import substream

# cells this close to ab = 1 are excluded from the closed-form cross-check
BOUNDARY_BAND = 1e-9
EIGEN_CHECK_SAMPLES = 4096


class ClassificationMismatch(AssertionError):
    """The eigen path and the closed-form predicate disagree off the boundary."""


@dataclass(frozen=True)
class PlaneRegionGrid:
    """Stability of ``toy_jacobian(a, b)`` at the centres of a regular grid.

    ``stable[j, i]`` refers to ``(a[i], b[j])``.
    """

    a: np.ndarray
    b: np.ndarray
    stable: np.ndarray

    @property
    def resolution(self):
        return len(self.a), len(self.b)

    def rows(self):
        """``(a, b, stable)`` triples, ``a`` varying fastest."""
        A, B = np.meshgrid(self.a, self.b)
        return zip(A.ravel(), B.ravel(), self.stable.ravel().astype(int))


def cell_centres(lo, hi, n):
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ValueError(f"invalid range [{lo}, {hi}]")
    if n < 2:
        raise ValueError(f"resolution must be >= 2, got {n}")
    width = (hi - lo) / n
    return lo + width * (np.arange(n) + 0.5)


def toy_stack(a, b):
    """Stack of ``[[-1, a], [b, -1]]`` for paired arrays ``a`` and ``b``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    out = np.empty((a.size, 2, 2))
    out[:, 0, 0] = out[:, 1, 1] = -1.0
    out[:, 0, 1] = a
    out[:, 1, 0] = b
    return out


def _check_against_predicate(a, b, stable):
    ab = a * b
    away = np.abs(ab - 1.0) >= BOUNDARY_BAND
    bad = away & (stable != (ab < 1.0))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ClassificationMismatch(
            f"eigen path disagrees with ab < 1 at (a, b) = ({a[k]:.17g}, {b[k]:.17g})"
        )


def classify_plane(a_range=(-3.0, 3.0), b_range=(-3.0, 3.0), resolution=400):
    """Classify grid cell centres through the eigenvalue path.

    ``resolution`` is one count for both axes or an ``(na, nb)`` pair. The
    result is asserted against ``ab < 1`` outside ``|ab - 1| < BOUNDARY_BAND``.
    """
    na, nb = (resolution, resolution) if np.isscalar(resolution) else resolution
    a = cell_centres(*a_range, int(na))
    b = cell_centres(*b_range, int(nb))
    A, B = np.meshgrid(a, b)
    stable = _linalg.stable_mask(toy_stack(A, B))
    _check_against_predicate(A.ravel(), B.ravel(), stable)
    return PlaneRegionGrid(a, b, stable.reshape(B.shape))


def locus(c, a_values):
    """Points on the hyperbola ``ab = c``; ``a = 0`` is dropped."""
    a = np.asarray(a_values, dtype=float)
    a = a[a != 0.0]
    return a, c / a


def toy_loci(a_range=(-3.0, 3.0), b_range=(-3.0, 3.0), points=401):
    """Equilibrium loci of the toy models in the ``(a, b)`` plane.

    Keys: ``example1`` and ``example2_ep1`` (the line ``a = 0``),
    ``example2`` (``b = 2/a``) and ``example3`` (``b = 3/a``). Points whose
    ``b`` falls outside ``b_range`` are dropped.
    """
    a_grid = np.linspace(a_range[0], a_range[1], points)
    b_grid = np.linspace(b_range[0], b_range[1], points)
    out = {
        "example1": (np.zeros_like(b_grid), b_grid),
        "example2_ep1": (np.zeros_like(b_grid), b_grid),
    }
    for name, c in (("example2", 2.0), ("example3", 3.0)):
        a, b = locus(c, a_grid)
        inside = (b >= b_range[0]) & (b <= b_range[1])
        out[name] = (a[inside], b[inside])
    return out


@dataclass(frozen=True)
class Gaussian2x2Spec:
    """Off-diagonal pair ``(a, b) ~ N(mean, cov)``."""

    mean: tuple
    cov: tuple

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2,) or cov.shape != (2, 2):
            raise ValueError("mean must have length 2 and cov shape (2, 2)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and cov must be finite")
        if cov[0, 1] != cov[1, 0]:
            raise ValueError("cov must be symmetric")
        if np.min(np.linalg.eigvalsh(cov)) <= 0.0:
            raise ValueError("cov must be positive definite")
        object.__setattr__(self, "mean", tuple(mean))
        object.__setattr__(self, "cov", tuple(map(tuple, cov)))

    @classmethod
    def from_moments(cls, mean=(0.0, 0.0), var=(1.0, 1.0), rho=0.0):
        va, vb = var
        c = rho * np.sqrt(va * vb)
        return cls(tuple(mean), ((va, c), (c, vb)))


def sample_gaussian_pairs(spec, n, seed):
    rng = substream(seed, "gaussian2x2")
    L = np.linalg.cholesky(np.asarray(spec.cov))
    return np.asarray(spec.mean) + rng.standard_normal((n, 2)) @ L.T


def gaussian2x2_stability(spec, n, seed, check=EIGEN_CHECK_SAMPLES):
    """Monte Carlo estimate of ``P(ab < 1)``.

    Uses the closed-form region test; the first ``check`` draws are also
    pushed through the eigen path and must agree off the boundary band.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ab = sample_gaussian_pairs(spec, n, seed)
    stable = ab[:, 0] * ab[:, 1] < 1.0
    m = min(check, n)
    if m:
        sub = ab[:m]
        _check_against_predicate(sub[:, 0], sub[:, 1], _linalg.stable_mask(toy_stack(sub[:, 0], sub[:, 1])))
    return estimate_from_mask(stable)


# Illustrative parameter choices for the three panels of the mean/variance/
# covariance figure. Panel A moves the mean, B scales the variances, C sets
# the correlation; all others stay at the standard normal.
FIG2_SCENARIOS = {
    "A-I": Gaussian2x2Spec.from_moments(mean=(0.0, 0.0)),
    "A-II": Gaussian2x2Spec.from_moments(mean=(2.0, 2.0)),
    "A-III": Gaussian2x2Spec.from_moments(mean=(-2.0, 2.0)),
    "B-I": Gaussian2x2Spec.from_moments(var=(0.25, 0.25)),
    "B-II": Gaussian2x2Spec.from_moments(var=(4.0, 4.0)),
    "C-I": Gaussian2x2Spec.from_moments(rho=-0.9),
    "C-II": Gaussian2x2Spec.from_moments(rho=0.9),
}


def toy_ensemble_stability(a_range, b_range, n, seed):
    """Stability of ``[[-1, a], [b, -1]]`` with ``(a, b)`` uniform on a rectangle."""
    rng = substream(seed, "toy-uniform")
    a = rng.uniform(*a_range, size=n)
    b = rng.uniform(*b_range, size=n)
    return estimate_from_mask(_linalg.stable_mask(toy_stack(a, b)))


__all__ = [
    "PlaneRegionGrid",
    "Gaussian2x2Spec",
    "StabilityEstimate",
    "ClassificationMismatch",
    "classify_plane",
    "gaussian2x2_stability",
    "toy_loci",
    "locus",
    "FIG2_SCENARIOS",
    "toy_ensemble_stability",
]
