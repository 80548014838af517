import numpy as np
import pytest
from scipy import integrate, stats

from rmestab.pearson import PearsonError, classify, criterion, fit_pearson, sample_pearson

TARGET_MEAN, TARGET_SD = 1.5, 2.0

# (skew, raw kurtosis, expected type)
CASES = [
    (0.0, 3.0, "0"),
    (0.5, 2.5, "I"),
    (-0.8, 3.2, "I"),
    (0.0, 1.8, "II"),  # uniform
    (0.0, 2.4, "II"),
    (1.0, 4.5, "III"),  # 2 b2 - 3 b1 - 6 = 0
    (-2.0, 9.0, "III"),
    (0.5, 4.0, "IV"),
    (-1.0, 6.0, "IV"),
    (1.0, 4.8, "VI"),
    (-1.5, 7.0, "VI"),
    (2.0, 10.0, "VI"),
    (0.0, 4.5, "VII"),
    (0.0, 9.0, "VII"),
]


def _standard_dist(fit):
    s = fit.shape
    if fit.base == "normal":
        return stats.norm()
    if fit.base == "beta":
        return stats.beta(*s)
    if fit.base == "gamma":
        return stats.gamma(s[0])
    if fit.base == "invgamma":
        return stats.invgamma(s[0])
    if fit.base == "betaprime":
        return stats.betaprime(*s)
    if fit.base == "t":
        return stats.t(s[0])
    raise AssertionError(fit.base)


def exact_moments(fit):
    """Mean, sd, skew, raw kurtosis of loc + sign * scale * W, exactly."""
    if fit.base == "pearson4":
        m, nu = fit.shape

        def dens(t):
            return np.cos(t) ** (2 * m - 2) * np.exp(-nu * t)

        lim = (-np.pi / 2, np.pi / 2)
        Z = integrate.quad(dens, *lim, limit=400)[0]
        raw = [integrate.quad(lambda t, k=k: np.tan(t) ** k * dens(t), *lim, limit=400)[0] / Z
               for k in range(1, 5)]
        mu = raw[0]
        var = raw[1] - mu ** 2
        m3 = raw[2] - 3 * mu * raw[1] + 2 * mu ** 3
        m4 = raw[3] - 4 * mu * raw[2] + 6 * mu ** 2 * raw[1] - 3 * mu ** 4
        mw, vw, sw, kw = mu, var, m3 / var ** 1.5, m4 / var ** 2
    else:
        mw, vw, sw, kw = (float(v) for v in _standard_dist(fit).stats("mvsk"))
        kw += 3.0
    return (fit.loc + fit.sign * fit.scale * mw, fit.scale * np.sqrt(vw), fit.sign * sw, kw)


@pytest.mark.parametrize("skew, kurt, kind", CASES)
def test_classification(skew, kurt, kind):
    assert classify(skew, kurt) == kind


@pytest.mark.parametrize("skew, kurt, kind", CASES)
def test_exact_moments(skew, kurt, kind):
    fit = fit_pearson(TARGET_MEAN, TARGET_SD, skew, kurt)
    np.testing.assert_allclose(exact_moments(fit), [TARGET_MEAN, TARGET_SD, skew, kurt],
                               rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("a, sign", [(6.0, 1), (9.0, 1), (15.0, -1)])
def test_type_v(a, sign):
    _, _, s, k = (float(v) for v in stats.invgamma(a).stats("mvsk"))
    skew, kurt = sign * s, k + 3.0
    assert criterion(skew, kurt) == pytest.approx(1.0, abs=1e-12)
    assert classify(skew, kurt) == "V"
    fit = fit_pearson(TARGET_MEAN, TARGET_SD, skew, kurt)
    np.testing.assert_allclose(exact_moments(fit), [TARGET_MEAN, TARGET_SD, skew, kurt], rtol=1e-9)


def _moment_check(x, mean, sd, skew, kurt, k=4.0):
    """Sample moments within k standard errors (standard errors estimated from the sample)."""
    n = len(x)
    z = (x - x.mean()) / x.std()
    se_mean = sd / np.sqrt(n)
    se_sd = np.sqrt(np.var((x - x.mean()) ** 2) / n) / (2 * sd)
    se_skew = np.std(z ** 3 - 3 * z) / np.sqrt(n)
    se_kurt = np.std(z ** 4 - 4 * skew * z) / np.sqrt(n)
    assert abs(x.mean() - mean) <= k * se_mean
    assert abs(x.std() - sd) <= k * se_sd
    assert abs(np.mean(z ** 3) - skew) <= k * se_skew
    assert abs(np.mean(z ** 4) - kurt) <= k * se_kurt


@pytest.mark.parametrize("skew, kurt", [(0.0, 2.4), (0.5, 2.5), (1.0, 4.5), (0.5, 4.0), (1.0, 4.8), (0.0, 4.5)])
def test_monte_carlo_moments(skew, kurt):
    rng = np.random.default_rng(17)
    x = sample_pearson(rng, TARGET_MEAN, TARGET_SD, skew, kurt, 100_000)
    _moment_check(x, TARGET_MEAN, TARGET_SD, skew, kurt)


def test_type0_is_normal_by_ks():
    rng = np.random.default_rng(1)
    x = sample_pearson(rng, 0.3, 1.7, 0.0, 3.0, 10_000)
    y = 0.3 + 1.7 * np.random.default_rng(2).standard_normal(10_000)
    assert stats.ks_2samp(x, y).pvalue > 0.01


def test_type_iv_cdf_by_ks():
    fit = fit_pearson(0.0, 1.0, 0.5, 4.0)
    m, nu = fit.shape
    Z = integrate.quad(lambda t: np.cos(t) ** (2 * m - 2) * np.exp(-nu * t), -np.pi / 2, np.pi / 2)[0]

    def cdf(x):
        t = np.arctan((np.asarray(x) - fit.loc) / fit.scale)
        return np.array([integrate.quad(lambda s: np.cos(s) ** (2 * m - 2) * np.exp(-nu * s),
                                        -np.pi / 2, u)[0] / Z for u in np.atleast_1d(t)])

    x = fit.sample(np.random.default_rng(4), 3000)
    assert stats.kstest(x, cdf).pvalue > 0.01


def test_infeasible_and_boundary():
    with pytest.raises(PearsonError, match="no distribution"):
        classify(1.0, 1.5)
    with pytest.raises(PearsonError, match="two-point"):
        classify(1.0, 2.0 + 1e-12)
    with pytest.raises(PearsonError):
        fit_pearson(0.0, 0.0, 0.0, 3.0)


def test_constant_cell():
    x = sample_pearson(np.random.default_rng(0), 2.5, 0.0, np.nan, np.nan, 5)
    np.testing.assert_array_equal(x, 2.5)


def test_deterministic_given_rng():
    a = sample_pearson(np.random.default_rng(3), 0, 1, 0.5, 4.0, 100)
    b = sample_pearson(np.random.default_rng(3), 0, 1, 0.5, 4.0, 100)
    np.testing.assert_array_equal(a, b)
