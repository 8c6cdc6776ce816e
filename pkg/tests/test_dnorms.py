import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from strongmax.dnorms import (DNorm, dnorm_block_partial, dnorm_eval, inclusion_exclusion,
                              logistic, phi_block_partial, sup_norm)
from strongmax.errors import DomainError, UnsupportedFamilyError

NORMS = [logistic(2, 1.0), logistic(2, 2.0), logistic(3, 1.5), logistic(3, 4.0),
         inclusion_exclusion(2), inclusion_exclusion(3), inclusion_exclusion(4),
         sup_norm(2), sup_norm(3)]


def fd_partial(f, x, block, h=1e-2):
    """Nested central differences over ``block`` with one Richardson step."""
    signs = list(itertools.product((-1.0, 1.0), repeat=len(block)))

    def central(step):
        tot = 0.0
        for s in signs:
            y = x.copy()
            for i, si in zip(block, s):
                y[i] += si * step
            tot += np.prod(s) * f(y)
        return tot / (2 * step) ** len(block)

    return (4 * central(h / 2) - central(h)) / 3


def test_spot_values():
    assert_allclose(dnorm_eval(logistic(2, 2.0), [-3.0, -4.0]), 5.0, rtol=1e-15)
    x = np.array([-3.0, -4.0])
    assert_allclose(dnorm_block_partial(logistic(2, 2.0), (0,), x), -0.6, rtol=1e-14)
    assert_allclose(dnorm_block_partial(logistic(2, 2.0), (0, 1), x), -0.096, rtol=1e-14)
    ie = inclusion_exclusion(2)
    assert_allclose(ie([-1.0, -1.0]), 1.5)
    assert_allclose(ie.block_partial((0,), [-1.0, -1.0]), -0.75)
    assert_allclose(ie.block_partial((0, 1), [-1.0, -1.0]), -0.25)
    assert_allclose(phi_block_partial(ie, (0, 1), [-1.0, -1.0]), 0.25)
    assert sup_norm(3)([1.0, -5.0, 2.0]) == 5.0


def test_unit_vectors_and_p1():
    for dn in NORMS:
        for i in range(dn.d):
            e = np.zeros(dn.d)
            e[i] = -1.0
            assert_allclose(dn(e), 1.0, rtol=1e-14)
    x = np.array([-0.5, -1.5, -2.0])
    assert_allclose(logistic(3, 1.0)(x), 4.0)


def vec(d):
    return st.lists(st.floats(-10, 10, allow_nan=False), min_size=d, max_size=d).map(np.array)


@given(st.sampled_from(NORMS).flatmap(lambda dn: st.tuples(st.just(dn), vec(dn.d), vec(dn.d),
                                                            st.floats(0, 5))))
@settings(max_examples=200, deadline=None)
def test_dnorm_axioms(args):
    dn, x, y, t = args
    nx = dn(x)
    # bounds shared by every D-norm: sup norm <= D-norm <= l1 norm
    assert np.max(np.abs(x)) - 1e-9 <= nx <= np.sum(np.abs(x)) + 1e-9
    assert_allclose(dn(t * x), t * nx, rtol=1e-9, atol=1e-12)
    assert dn(x + y) <= nx + dn(y) + 1e-9 * (1 + nx + dn(y))
    assert_allclose(dn(-x), nx, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("dn", [n for n in NORMS if n.differentiable], ids=str)
def test_block_partials_vs_finite_differences(dn):
    rng = np.random.default_rng(7)
    for x in rng.uniform(-3, -0.3, size=(5, dn.d)):
        for r in range(1, dn.d + 1):
            for block in itertools.combinations(range(dn.d), r):
                exact = dn.block_partial(block, x)
                approx = fd_partial(dn, x, block, h=0.03 * np.min(np.abs(x)))
                assert_allclose(exact, approx, rtol=2e-5, atol=1e-7)


def test_logistic_p1_higher_partials_vanish():
    assert logistic(3, 1.0).block_partial((0, 2), [-1.0, -2.0, -3.0]) == 0.0


def test_vectorised_evaluation():
    dn = logistic(2, 3.0)
    x = np.array([[-1.0, -2.0], [-0.5, -0.1]])
    assert_allclose(dn(x), [dn(x[0]), dn(x[1])])
    assert_allclose(dn.block_partial((0, 1), x), [dn.block_partial((0, 1), r) for r in x])


def test_large_logistic_is_stable():
    assert_allclose(logistic(2, 50.0)([-1e200, -1e200]), 1e200 * 2 ** (1 / 50), rtol=1e-12)


def test_errors():
    with pytest.raises(UnsupportedFamilyError):
        DNorm(2, "huesler-reiss")
    with pytest.raises(DomainError):
        logistic(2, 0.5)
    with pytest.raises(DomainError):
        logistic(2, 2.0)([1.0, 2.0, 3.0])
    with pytest.raises(UnsupportedFamilyError):
        sup_norm(2).block_partial((0, 1), [-1.0, -1.0])
    with pytest.raises(DomainError):
        logistic(2, 2.0).block_partial((0,), [-1.0, 0.0])
    with pytest.raises(DomainError):
        inclusion_exclusion(9)
