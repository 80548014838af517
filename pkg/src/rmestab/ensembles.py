"""Derived ensembles built from an FCS ensemble.

Kinds: ``fcs``, ``independent`` (K*), ``iid`` (L*), ``ind-normal``,
``ind-pearson``, ``iid-normal`` and ``mvn``.

Moment conventions are population ones (``1/N``); kurtosis is raw, so a normal
cell has kurtosis 3. A cell whose values span less than ``CONSTANT_RTOL``
relative to its magnitude is treated as constant: sd 0, skewness and kurtosis
undefined (NaN), and every derived ensemble reproduces its mean exactly.

Randomness for kind ``k`` comes from the substream ``(seed, k)`` in blocks of
``BLOCK_SIZE`` output matrices, so blocks can be generated independently.
"""

from dataclasses import dataclass

import numpy as np

from . import pearson as _pearson
from .sampler import Ensemble
from .streams import substream

KINDS = ("fcs", "independent", "iid", "ind-normal", "ind-pearson", "iid-normal", "mvn")
BLOCK_SIZE = 4096
CONSTANT_RTOL = 1e-12
EIG_CLIP_RTOL = 1e-12


@dataclass(frozen=True)
class MomentSummary:
    mean: np.ndarray
    sd: np.ndarray
    skew: np.ndarray
    kurt: np.ndarray
    constant: np.ndarray
    samples: int

    @property
    def order(self):
        return self.mean.shape[0]


@dataclass(frozen=True)
class CovarianceModel:
    """Mean and MLE covariance of column-stacked matrices."""

    mean: np.ndarray
    cov: np.ndarray
    constant: np.ndarray
    order: int


def vec(matrices):
    """Column-stack each matrix: ``(N, p, p) -> (N, p*p)``."""
    m = np.asarray(matrices)
    return np.swapaxes(m, -1, -2).reshape(m.shape[:-2] + (-1,))


def unvec(vectors, p):
    v = np.asarray(vectors)
    return np.swapaxes(v.reshape(v.shape[:-1] + (p, p)), -1, -2)


def _blocks(n):
    for b, start in enumerate(range(0, n, BLOCK_SIZE)):
        yield b, start, min(start + BLOCK_SIZE, n)


def _require(fcs, minimum=1):
    if len(fcs) < minimum:
        raise ValueError(f"ensemble needs at least {minimum} matrices, has {len(fcs)}")


def _derived(matrices, kind, source, seed, **extra):
    recipe = dict(source.recipe) if isinstance(source, Ensemble) else {}
    recipe.update(kind=kind, seed=seed, **extra)
    return Ensemble(matrices, kind, recipe)


def constant_cells(values):
    """Mask of cells that do not vary across the first axis."""
    values = np.asarray(values, dtype=float)
    spread = np.ptp(values, axis=0)
    size = np.max(np.abs(values), axis=0)
    return spread <= CONSTANT_RTOL * np.maximum(size, 1.0)


def permute_independent(fcs, seed):
    """K*: each cell of each output matrix copied from an independently chosen draw."""
    _require(fcs)
    J = fcs.matrices
    N, p, _ = J.shape
    out = np.empty_like(J)
    rows, cols = np.indices((p, p))
    for b, start, stop in _blocks(N):
        rng = substream(seed, "independent", b)
        q = rng.integers(0, N, size=(stop - start, p, p))
        out[start:stop] = J[q, rows, cols]
    return _derived(out, "independent", fcs, seed)


def permute_iid(fcs, seed):
    """L*: each cell copied from a random draw and a random (row, column)."""
    _require(fcs)
    J = fcs.matrices
    N, p, _ = J.shape
    out = np.empty_like(J)
    for b, start, stop in _blocks(N):
        rng = substream(seed, "iid", b)
        shape = (stop - start, p, p)
        q = rng.integers(0, N, size=shape)
        r = rng.integers(0, p, size=shape)
        s = rng.integers(0, p, size=shape)
        out[start:stop] = J[q, r, s]
    return _derived(out, "iid", fcs, seed)


def fit_moments(ensemble):
    """Per-cell mean, sd, skewness and raw kurtosis (population convention)."""
    _require(ensemble, 2)
    J = np.asarray(ensemble.matrices, dtype=float)
    const = constant_cells(J)
    mean = J.mean(axis=0)
    dev = J - mean
    m2 = np.mean(dev ** 2, axis=0)
    m3 = np.mean(dev ** 3, axis=0)
    m4 = np.mean(dev ** 4, axis=0)
    sd = np.sqrt(m2)
    sd[const] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(const, np.nan, m3 / m2 ** 1.5)
        kurt = np.where(const, np.nan, m4 / m2 ** 2)
    return MomentSummary(mean, sd, skew, kurt, const, len(J))


def _cellwise_normal(mean, sd, n, seed, kind, source):
    p = mean.shape[0]
    out = np.empty((n, p, p))
    for b, start, stop in _blocks(n):
        rng = substream(seed, kind, b)
        out[start:stop] = mean + sd * rng.standard_normal((stop - start, p, p))
    out[:, sd == 0.0] = mean[sd == 0.0]
    return _derived(out, kind, source, seed)


def sample_independent_normal(ms, n, seed):
    """Each cell drawn independently from Normal(mean_ij, sd_ij)."""
    return _cellwise_normal(ms.mean, ms.sd, n, seed, "ind-normal", ms)


def sample_independent_pearson(ms, n, seed):
    """Each cell drawn independently from the Pearson member matching its four moments."""
    p = ms.order
    fits = {}
    for i in range(p):
        for j in range(p):
            if ms.sd[i, j] == 0.0:
                continue
            try:
                fits[i, j] = _pearson.fit_pearson(ms.mean[i, j], ms.sd[i, j], ms.skew[i, j], ms.kurt[i, j])
            except _pearson.PearsonError as exc:
                raise _pearson.PearsonError(f"cell ({i + 1},{j + 1}): {exc}") from exc
    out = np.empty((n, p, p))
    out[:] = ms.mean
    for b, start, stop in _blocks(n):
        rng = substream(seed, "ind-pearson", b)
        # fixed cell order keeps the stream layout independent of which cells are constant
        for i in range(p):
            for j in range(p):
                if (i, j) in fits:
                    out[start:stop, i, j] = fits[i, j].sample(rng, stop - start)
    ens = _derived(out, "ind-pearson", ms, seed)
    ens.recipe["pearson_types"] = {f"{i + 1},{j + 1}": f.kind for (i, j), f in fits.items()}
    return ens


def sample_iid_normal(iid, n, seed):
    """Fit a per-cell normal to the L* entries and sample as independent normal."""
    ms = fit_moments(iid)
    return _cellwise_normal(ms.mean, ms.sd, n, seed, "iid-normal", iid)


def fit_mvn(fcs):
    """Maximum-likelihood normal fit to the column-stacked matrices."""
    _require(fcs, 2)
    J = np.asarray(fcs.matrices, dtype=float)
    p = J.shape[1]
    v = vec(J)
    const = vec(constant_cells(J)[None])[0]
    mean = v.mean(axis=0)
    dev = v - mean
    dev[:, const] = 0.0
    cov = dev.T @ dev / len(v)
    cov = 0.5 * (cov + cov.T)
    return CovarianceModel(mean, cov, const, p)


def _mvn_factor(cm):
    lam, vecs = np.linalg.eigh(cm.cov)
    floor = EIG_CLIP_RTOL * max(float(np.trace(cm.cov)), 0.0)
    lam = np.where(lam > floor, lam, 0.0)
    return vecs * np.sqrt(lam)


def sample_mvn(cm, n, seed):
    """Sample ``n`` matrices; clipped eigen-directions keep constants and exact linear relations."""
    factor = _mvn_factor(cm)
    d = len(cm.mean)
    out = np.empty((n, d))
    for b, start, stop in _blocks(n):
        rng = substream(seed, "mvn", b)
        out[start:stop] = cm.mean + rng.standard_normal((stop - start, d)) @ factor.T
    out[:, cm.constant] = cm.mean[cm.constant]
    return _derived(unvec(out, cm.order), "mvn", cm, seed)


def build_ensemble(kind, fcs, seed, n=None):
    """Construct ensemble ``kind`` from ``fcs``; every kind uses its own substream."""
    n = len(fcs) if n is None else n
    if kind == "fcs":
        return fcs
    if kind == "independent":
        return permute_independent(fcs, seed)
    if kind == "iid":
        return permute_iid(fcs, seed)
    if kind == "ind-normal":
        return sample_independent_normal(fit_moments(fcs), n, seed)
    if kind == "ind-pearson":
        return sample_independent_pearson(fit_moments(fcs), n, seed)
    if kind == "iid-normal":
        return sample_iid_normal(permute_iid(fcs, seed), n, seed)
    if kind == "mvn":
        return sample_mvn(fit_mvn(fcs), n, seed)
    raise KeyError(f"unknown ensemble kind {kind!r}; expected one of {', '.join(KINDS)}")
