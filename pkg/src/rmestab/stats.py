"""Spectral summaries of an ensemble: eigenvalue dumps, leading-eigenvalue
order statistics, kernel density estimates and 2-D eigenvalue histograms.

Conventions: quantiles are order statistics taken with the lower-middle rule
(``np.quantile(..., method="lower")``), so the median of an even-length sample
is the lower of the two central values. The KDE uses a Gaussian kernel with
Silverman's bandwidth ``0.9 min(sd, IQR / 1.34) N^(-1/5)`` (``sd`` alone when
the IQR vanishes), floored at ``BANDWIDTH_FLOOR``, on ``KDE_POINTS`` points
spanning the data range extended by three bandwidths each side. The
truncated tails are folded back by rescaling the curve to unit trapezoidal
mass on its grid.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg as _linalg
from .sampler import StabilityEstimate, estimate_from_mask

BANDWIDTH_FLOOR = 1e-6
KDE_POINTS = 512
KDE_SPAN = 3.0
PURE_IMAGINARY_TOL = 1e-12
# evaluate the KDE in chunks of data points to bound memory
_KDE_CHUNK = 2048


@dataclass(frozen=True)
class KDEConfig:
    points: int = KDE_POINTS
    span: float = KDE_SPAN
    bandwidth: float = None  # None selects Silverman's rule

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("KDE needs at least 2 grid points")


@dataclass(frozen=True)
class KDECurve:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float

    def mass(self, upper=np.inf):
        """Trapezoidal mass of the curve on ``x < upper``."""
        keep = self.x < upper
        if np.count_nonzero(keep) < 2:
            return 0.0
        x, y = self.x[keep], self.density[keep]
        return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


@dataclass(frozen=True)
class SpectralSummary:
    leading: np.ndarray
    median: float
    q1: float
    q3: float
    kde: KDECurve
    estimate: StabilityEstimate = field(repr=False)

    @property
    def iqr(self):
        return self.q3 - self.q1


@dataclass(frozen=True)
class DensityGrid:
    """Counts of eigenvalues in ``(Re, Im)`` bins; ``counts[i, j]`` is Re bin ``i``, Im bin ``j``."""

    re_edges: np.ndarray
    im_edges: np.ndarray
    counts: np.ndarray
    dropped: int

    @property
    def total(self):
        return int(self.counts.sum())


def spectra(ensemble):
    """Eigenvalues of every matrix, ``(N, n)`` complex, order-aligned with the draws."""
    matrices = getattr(ensemble, "matrices", ensemble)
    if len(matrices) == 0:
        raise ValueError("cannot take spectra of an empty ensemble")
    return _linalg.eigenvalues_batch(matrices)


def spectrum_list(ensemble):
    return [_linalg.Spectrum(lam) for lam in spectra(ensemble)]


def order_stats(values):
    """``(q1, median, q3)`` with the lower order-statistic convention."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty sample")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="lower")
    return float(q1), float(med), float(q3)


def silverman_bandwidth(values):
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 2:
        return BANDWIDTH_FLOOR
    sd = float(np.std(v, ddof=1))
    q75, q25 = np.percentile(v, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return max(0.9 * spread * n ** -0.2, BANDWIDTH_FLOOR)


def gaussian_kde(values, config=None):
    """Gaussian KDE of ``values`` on a regular grid."""
    cfg = config or KDEConfig()
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty sample")
    h = max(cfg.bandwidth, BANDWIDTH_FLOOR) if cfg.bandwidth else silverman_bandwidth(v)
    x = np.linspace(v.min() - cfg.span * h, v.max() + cfg.span * h, cfg.points)
    dens = np.zeros_like(x)
    for start in range(0, v.size, _KDE_CHUNK):
        z = (x[:, None] - v[None, start:start + _KDE_CHUNK]) / h
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    dens /= v.size * h * np.sqrt(2.0 * np.pi)
    dens /= np.sum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))
    return KDECurve(x, dens, h)


def leading_summary(ensemble, config=None):
    """Order statistics, KDE and stability estimate of the leading real parts."""
    lead = _linalg.leading_real_parts(getattr(ensemble, "matrices", ensemble))
    if lead.size == 0:
        raise ValueError("cannot summarise an empty ensemble")
    q1, med, q3 = order_stats(lead)
    return SpectralSummary(lead, med, q1, q3, gaussian_kde(lead, config), estimate_from_mask(lead < 0.0))


def density_grid(eigs, bins=101, re_range=None, im_limit=None):
    """2-D histogram of eigenvalues, leaving out pure imaginary ones.

    ``bins`` is one count or an ``(re_bins, im_bins)`` pair; the Im axis spans
    ``[-im_limit, im_limit]`` with an odd bin count so real eigenvalues sit in
    the centre bin. Each eigenvalue is binned by ``|Im|`` and mirrored, which
    makes the counts exactly symmetric about ``Im = 0`` for conjugate pairs.
    Pure imaginary eigenvalues and those outside the ranges are tallied in
    ``dropped``.
    """
    lam = np.asarray(eigs).ravel().astype(complex)
    if lam.size == 0:
        raise ValueError("no eigenvalues to bin")
    nb_re, nb_im = (bins, bins) if np.isscalar(bins) else bins
    if nb_re < 1 or nb_im < 1 or nb_im % 2 == 0:
        raise ValueError("need re_bins >= 1 and an odd im_bins")
    pure = (np.abs(lam.real) <= PURE_IMAGINARY_TOL) & (lam.imag != 0.0)
    keep = lam[~pure]
    if re_range is None:
        lo, hi = (keep.real.min(), keep.real.max()) if keep.size else (-1.0, 1.0)
        re_range = (lo - 0.5, hi + 0.5) if lo == hi else (lo, hi)
    if im_limit is None:
        im_limit = float(np.abs(keep.imag).max()) if keep.size else 0.0
    im_limit = im_limit if im_limit > 0.0 else 1.0
    re_edges = np.linspace(re_range[0], re_range[1], nb_re + 1)
    im_edges = np.linspace(-im_limit, im_limit, nb_im + 1)

    ri = np.searchsorted(re_edges, keep.real, side="right") - 1
    ri[keep.real == re_edges[-1]] = nb_re - 1
    mag = np.abs(keep.imag)
    up = np.searchsorted(im_edges, mag, side="right") - 1
    up[mag == im_edges[-1]] = nb_im - 1
    col = np.where(keep.imag < 0.0, nb_im - 1 - up, up)
    ok = (ri >= 0) & (ri < nb_re) & (mag <= im_edges[-1])
    counts = np.zeros((nb_re, nb_im), dtype=np.int64)
    np.add.at(counts, (ri[ok], col[ok]), 1)
    return DensityGrid(re_edges, im_edges, counts, int(np.count_nonzero(pure) + np.count_nonzero(~ok)))
