"""Pearson-system variates with prescribed mean, sd, skewness and kurtosis.

Work in standardised coordinates ``z = (x - mean) / sd`` with ``b1 = skew**2``
and ``b2 = kurt`` (raw kurtosis, 3 for the normal). The density solves

    f'(z) / f(z) = -(z + c1) / (c0 + c1 z + c2 z^2)

with ``D = 10 b2 - 12 b1 - 18``, ``c0 = (4 b2 - 3 b1) / D``,
``c1 = skew (b2 + 3) / D`` and ``c2 = (2 b2 - 3 b1 - 6) / D``. The member is
picked by ``k = b1 (b2 + 3)^2 / (4 (4 b2 - 3 b1)(2 b2 - 3 b1 - 6))``:

====== =================================== =====================================
type   region                              variate
====== =================================== =====================================
0      skew = 0, kurt = 3                  normal
I      k < 0 (II when skew = 0)            shifted, scaled beta
III    2 b2 - 3 b1 - 6 = 0                 shifted, scaled gamma
IV     0 < k < 1                           ``c tan(t)``, ``t`` ~ cos^(2m-2) e^(-nu t)
V      k = 1                               shifted, scaled inverse gamma
VI     k > 1                               shifted, scaled beta prime
VII    skew = 0, kurt > 3                  scaled Student t
====== =================================== =====================================

Type I shapes come from ``r = 6 (b2 - b1 - 1) / (6 + 3 b1 - 2 b2)`` rather than
from the quadratic, because ``D`` vanishes inside the type I region (the
uniform distribution sits on ``D = 0``). In the other regions ``D > 0``.
Type IV has no convenient inverse CDF; ``t`` lives on ``(-pi/2, pi/2)`` where
its density is log-concave, so it is inverted numerically on a grid covering
all but ``exp(-45)`` of the mass.
"""

from dataclasses import dataclass, field

import numpy as np

BOUNDARY_TOL = 1e-9
NORMAL_TOL = 1e-9
TYPE_EDGE_TOL = 1e-9
_IV_GRID = 8193
_IV_LOG_DROP = 45.0


class PearsonError(ValueError):
    """The requested moments do not define a usable Pearson distribution."""


@dataclass(frozen=True)
class PearsonFit:
    """A fitted member of the Pearson system.

    ``x = loc + sign * scale * w`` where ``w`` follows the standard family
    named by ``base`` with shape ``shape``.
    """

    kind: str
    mean: float
    sd: float
    skew: float
    kurt: float
    base: str
    shape: tuple = ()
    loc: float = 0.0
    scale: float = 1.0
    sign: float = 1.0
    _iv_table: tuple = field(default=None, repr=False, compare=False)

    def _standard(self, rng, size):
        s = self.shape
        if self.base == "normal":
            return rng.standard_normal(size)
        if self.base == "beta":
            return rng.beta(s[0], s[1], size)
        if self.base == "gamma":
            return rng.standard_gamma(s[0], size)
        if self.base == "invgamma":
            return 1.0 / rng.standard_gamma(s[0], size)
        if self.base == "betaprime":
            return rng.standard_gamma(s[0], size) / rng.standard_gamma(s[1], size)
        if self.base == "t":
            return rng.standard_t(s[0], size)
        if self.base == "pearson4":
            grid_t, cdf = self._iv_table
            return np.tan(np.interp(rng.random(size), cdf, grid_t))
        raise AssertionError(self.base)

    def sample(self, rng, size):
        return self.loc + self.sign * self.scale * self._standard(rng, size)


def standardized_coefficients(skew, kurt):
    """``(c0, c1, c2)`` of the standardised Pearson equation."""
    b1 = skew * skew
    d = 10.0 * kurt - 12.0 * b1 - 18.0
    return (4.0 * kurt - 3.0 * b1) / d, skew * (kurt + 3.0) / d, (2.0 * kurt - 3.0 * b1 - 6.0) / d


def criterion(skew, kurt):
    b1 = skew * skew
    return b1 * (kurt + 3.0) ** 2 / (4.0 * (4.0 * kurt - 3.0 * b1) * (2.0 * kurt - 3.0 * b1 - 6.0))


def classify(skew, kurt):
    """Pearson type label for the given skewness and raw kurtosis."""
    b1 = skew * skew
    gap = kurt - b1 - 1.0
    if gap < -BOUNDARY_TOL:
        raise PearsonError(f"kurtosis {kurt:.6g} < skewness^2 + 1 = {b1 + 1:.6g}: no distribution")
    if gap <= BOUNDARY_TOL:
        raise PearsonError("moments lie on the two-point boundary kurt = skew^2 + 1")
    if abs(skew) <= NORMAL_TOL:
        if abs(kurt - 3.0) <= NORMAL_TOL:
            return "0"
        return "II" if kurt < 3.0 else "VII"
    line3 = 2.0 * kurt - 3.0 * b1 - 6.0
    if abs(line3) <= TYPE_EDGE_TOL * (1.0 + kurt):
        return "III"
    if line3 < 0.0:
        return "I"
    k = criterion(skew, kurt)
    if abs(k - 1.0) <= TYPE_EDGE_TOL:
        return "V"
    return "IV" if k < 1.0 else "VI"


def _beta_shapes(skew, kurt):
    b1 = skew * skew
    r = 6.0 * (kurt - b1 - 1.0) / (6.0 + 3.0 * b1 - 2.0 * kurt)
    root = (r + 2.0) * np.sqrt(b1 / ((r + 2.0) ** 2 * b1 + 16.0 * (r + 1.0)))
    small, large = 0.5 * r * (1.0 - root), 0.5 * r * (1.0 + root)
    # positive skew puts the long tail on the right: smaller first shape
    return (small, large) if skew > 0 else (large, small)


def _iv_table(m, nu):
    # log density of t = arctan(u / c): (2m - 2) log cos t - nu t, log-concave
    half = 0.5 * np.pi

    def logf(t):
        return (2.0 * m - 2.0) * np.log(np.cos(t)) - nu * t

    mode = -np.arctan(nu / (2.0 * m - 2.0))
    top = logf(mode)

    def edge(lo_side):
        # bisect for logf = top - drop between the mode and the interval end
        a, b = (mode, -half) if lo_side else (mode, half)
        if logf(b + (1e-300 if lo_side else -1e-300)) >= top - _IV_LOG_DROP:
            return b
        for _ in range(200):
            mid = 0.5 * (a + b)
            if logf(mid) >= top - _IV_LOG_DROP:
                a = mid
            else:
                b = mid
        return b

    lo, hi = edge(True), edge(False)
    t = np.linspace(lo, hi, _IV_GRID)
    with np.errstate(divide="ignore"):
        dens = np.exp(logf(t) - top)
    dens[~np.isfinite(dens)] = 0.0
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))))
    cdf /= cdf[-1]
    # drop flat stretches so the inverse interpolation is well defined
    keep = np.concatenate(([True], np.diff(cdf) > 0.0))
    return t[keep], cdf[keep]


def fit_pearson(mean, sd, skew, kurt):
    """Fit the Pearson member with these four moments."""
    mean, sd, skew, kurt = float(mean), float(sd), float(skew), float(kurt)
    if not sd > 0.0:
        raise PearsonError("standard deviation must be positive")
    kind = classify(skew, kurt)
    common = dict(kind=kind, mean=mean, sd=sd, skew=skew, kurt=kurt)

    if kind == "0":
        return PearsonFit(base="normal", loc=mean, scale=sd, **common)

    if kind in ("I", "II"):
        a, b = _beta_shapes(skew, kurt) if kind == "I" else _beta_shapes(0.0, kurt)
        w_mean = a / (a + b)
        w_sd = np.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))
        scale = sd / w_sd
        return PearsonFit(base="beta", shape=(a, b), loc=mean - scale * w_mean, scale=scale, **common)

    if kind == "III":
        shape = 4.0 / (skew * skew)
        scale = sd / np.sqrt(shape)
        sign = 1.0 if skew > 0 else -1.0
        return PearsonFit(base="gamma", shape=(shape,), loc=mean - sign * scale * shape,
                          scale=scale, sign=sign, **common)

    c0, c1, c2 = standardized_coefficients(skew, kurt)

    if kind == "VII":
        m = 1.0 / (2.0 * c2)
        df = 2.0 * m - 1.0
        c = np.sqrt(c0 / c2)
        return PearsonFit(base="t", shape=(df,), loc=mean, scale=sd * c / np.sqrt(df), **common)

    if kind == "IV":
        m = 1.0 / (2.0 * c2)
        c = np.sqrt(4.0 * c0 * c2 - c1 * c1) / (2.0 * c2)
        nu = c1 * (1.0 - 1.0 / (2.0 * c2)) / (c2 * c)
        centre = -c1 / (2.0 * c2)
        return PearsonFit(base="pearson4", shape=(m, nu), loc=mean + sd * centre, scale=sd * c,
                          _iv_table=_iv_table(m, nu), **common)

    if kind == "V":
        r0 = -c1 / (2.0 * c2)
        g = (r0 + c1) / c2
        shape = 1.0 / c2 - 1.0
        # density ~ |z - r0|^(-1/c2) exp(g / (z - r0)): support on the side where g/(z - r0) < 0
        sign = 1.0 if g < 0 else -1.0
        return PearsonFit(base="invgamma", shape=(shape,), loc=mean + sd * r0, scale=sd * abs(g),
                          sign=sign, **common)

    # type VI: real roots of the same sign
    disc = np.sqrt(c1 * c1 - 4.0 * c0 * c2)
    a1, a2 = (-c1 - disc) / (2.0 * c2), (-c1 + disc) / (2.0 * c2)
    e1 = -(c1 + a1) / (c2 * (a1 - a2))
    e2 = -(c1 + a2) / (c2 * (a2 - a1))
    width = a2 - a1
    if -c1 > a2:
        # support (a2, inf): z = a2 + width * t, t ~ BetaPrime(e2 + 1, -e1 - e2 - 1)
        return PearsonFit(base="betaprime", shape=(e2 + 1.0, -e1 - e2 - 1.0), loc=mean + sd * a2,
                          scale=sd * width, **common)
    return PearsonFit(base="betaprime", shape=(e1 + 1.0, -e1 - e2 - 1.0), loc=mean + sd * a1,
                      scale=sd * width, sign=-1.0, **common)


def sample_pearson(rng, mean, sd, skew, kurt, size):
    """Draw ``size`` variates; ``sd == 0`` returns the constant ``mean``."""
    if sd == 0.0:
        return np.full(size, float(mean))
    return fit_pearson(mean, sd, skew, kurt).sample(rng, size)
