import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from strongmax.errors import DomainError, UnsupportedFamilyError
from strongmax.margins import (default_norming_constants, exponential, frechet, gev_cdf,
                               gev_logcdf, gev_pdf, gev_quantile, margin_family, pareto, uniform,
                               von_mises_diagnostic, von_mises_for_family)

GAMMAS = [-0.8, -0.3, 0.0, 1e-9, 0.25, 1.0]


@pytest.mark.parametrize("gamma", GAMMAS)
def test_gev_against_scipy(gamma):
    # scipy's shape is c = -gamma
    ref = stats.genextreme(-gamma, loc=0.3, scale=1.7)
    x = ref.ppf(np.linspace(0.01, 0.99, 25))
    assert_allclose(gev_cdf(gamma, x, 0.3, 1.7), ref.cdf(x), rtol=1e-7, atol=1e-12)
    assert_allclose(gev_pdf(gamma, x, 0.3, 1.7), ref.pdf(x), rtol=1e-7, atol=1e-12)
    q = np.linspace(0.01, 0.99, 25)
    assert_allclose(gev_quantile(gamma, q, 0.3, 1.7), ref.ppf(q), rtol=1e-7, atol=1e-9)


def test_gev_outside_support():
    assert gev_cdf(0.5, -3.0) == 0.0
    assert gev_pdf(0.5, -3.0) == 0.0
    assert gev_cdf(-0.5, 3.0) == 1.0
    assert gev_logcdf(-0.5, 3.0) == 0.0
    assert gev_pdf(-0.5, 3.0) == 0.0


@given(st.floats(-1.0, 1.0), st.floats(1e-6, 1 - 1e-6))
@settings(max_examples=150, deadline=None)
def test_gev_quantile_inverts_cdf(gamma, q):
    x = gev_quantile(gamma, q)
    assert_allclose(gev_cdf(gamma, x), q, rtol=1e-9, atol=1e-12)


def test_gev_quantile_domain():
    with pytest.raises(DomainError):
        gev_quantile(0.1, 1.0)


@pytest.mark.parametrize("fam", [frechet(2.0), pareto(1.0), pareto(3.0), exponential(),
                                 uniform(1.0), uniform(2.5)], ids=lambda f: f"{f.name}-{f.param}")
def test_family_consistency(fam):
    q = np.linspace(0.05, 0.95, 19)
    x = fam.quantile(q)
    assert_allclose(fam.cdf(x), q, rtol=1e-12)
    assert_allclose(fam.sf(x), 1 - q, rtol=1e-10)
    h = 1e-6 * np.maximum(1.0, np.abs(x))
    assert_allclose(fam.pdf(x), (fam.cdf(x + h) - fam.cdf(x - h)) / (2 * h), rtol=1e-6)


@pytest.mark.parametrize("fam", [frechet(2.0), pareto(1.0), exponential(), uniform(1.0),
                                 uniform(2.0)], ids=lambda f: f"{f.name}-{f.param}")
def test_norming_convergence(fam):
    g, loc, scale = fam.limit
    x = gev_quantile(g, np.linspace(0.1, 0.9, 9), loc, scale)
    errs = []
    for n in (10, 1000, 100000):
        a, b = default_norming_constants(fam, n)
        errs.append(np.max(np.abs(fam.cdf(a * x + b) ** n - gev_cdf(g, x, loc, scale))))
    assert errs[-1] < 1e-4
    assert errs[2] <= errs[0] + 1e-10


def test_frechet_is_max_stable():
    fam = frechet(1.5)
    x = np.array([0.5, 1.0, 4.0])
    for n in (1, 7, 300):
        a, b = fam.norming(n)
        assert_allclose(fam.cdf(a * x + b) ** n, fam.cdf(x), rtol=1e-12)


@pytest.mark.parametrize("fam", [pareto(1.0), pareto(2.0), uniform(1.0), uniform(3.0),
                                 exponential(), frechet(1.0)],
                         ids=lambda f: f"{f.name}-{f.param}")
def test_von_mises_ratios(fam):
    pts = fam.quantile(1 - 10.0 ** -np.arange(1, 9))
    rows = von_mises_for_family(fam, pts)
    if fam.name == "frechet":
        # only asymptotically equal to the target
        assert abs(rows[-1][1] - rows[-1][2]) < 1e-6
    else:
        assert_allclose([r[1] for r in rows], [r[2] for r in rows], rtol=0, atol=1e-10)


def test_von_mises_quadrature_fallback():
    fam = exponential()
    rows = von_mises_for_family(fam, [0.5, 3.0, 12.0], use_closed_tail=False)
    assert_allclose([r[1] for r in rows], 1.0, atol=1e-10)


def test_von_mises_gamma_sign_mismatch():
    fam = pareto(1.0)
    with pytest.raises(DomainError):
        von_mises_diagnostic(fam.cdf, fam.pdf, -1.0, fam.endpoint, [2.0])
    with pytest.raises(DomainError):
        von_mises_diagnostic(fam.cdf, fam.pdf, 1.0, 1.0, [0.5])
    with pytest.raises(DomainError):
        von_mises_for_family(uniform(1.0), [1.0])


def test_margin_lookup():
    assert margin_family("pareto", 2.0).gamma == 0.5
    assert margin_family("uniform").gamma == -1.0
    with pytest.raises(UnsupportedFamilyError):
        margin_family("lognormal")
    with pytest.raises(DomainError):
        margin_family("exponential", 1.0)
    with pytest.raises(DomainError):
        default_norming_constants("pareto", 0)
