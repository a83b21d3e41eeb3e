import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msetarx import (
    ExogenousSpec,
    ModelSpec,
    RegimeCoefficients,
    ThresholdPartition,
    build_regressor,
    regime_index,
    stack_blocks,
    stack_theta,
    unstack_theta,
    validate_model,
)
from msetarx.exceptions import ShapeError, ValidationError

DGP1_PARTITION = ThresholdPartition(((-0.5, 0.5), (0.0,)))


def brute_force_regimes(partition, y):
    """All tuples whose cell [lo, hi) contains y in every coordinate."""
    hits = []
    for J in itertools.product(*(range(1, n + 1) for n in partition.cells)):
        ok = True
        for b, j, v in zip(partition.breakpoints, J, y):
            edges = (-np.inf, *b, np.inf)
            ok &= edges[j - 1] <= v < edges[j]
        if ok:
            hits.append(J)
    return hits


partitions = st.lists(
    st.lists(st.floats(-5, 5, allow_nan=False), max_size=3, unique=True).map(sorted),
    min_size=1,
    max_size=3,
).map(ThresholdPartition)


class TestRegimeIndex:
    def test_dgp1_regime5(self):
        assert regime_index(DGP1_PARTITION, (0.74, -0.20)) == (3, 1)
        assert DGP1_PARTITION.linear_index((3, 1)) == 4  # "Regime 5"

    def test_no_breakpoints(self):
        part = ThresholdPartition(((), (), ()))
        assert regime_index(part, (1e9, -3.0, 0.0)) == (1, 1, 1)

    def test_boundaries_go_right(self):
        assert regime_index(DGP1_PARTITION, (-0.5, 0.0)) == (2, 2)

    def test_dgp1_numbering(self):
        assert DGP1_PARTITION.regimes() == [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            regime_index(DGP1_PARTITION, (np.nan, 0.0))

    def test_wrong_length(self):
        with pytest.raises(ShapeError):
            regime_index(DGP1_PARTITION, (0.0,))

    @settings(max_examples=200, deadline=None)
    @given(partitions, st.data())
    def test_exactly_one_regime(self, part, data):
        y = data.draw(st.lists(st.floats(-6, 6), min_size=part.dim, max_size=part.dim))
        hits = brute_force_regimes(part, y)
        assert hits == [regime_index(part, y)]
        assert part.locate(np.array([y]))[0] == part.linear_index(hits[0])

    @settings(max_examples=100, deadline=None)
    @given(partitions)
    def test_linear_index_bijection(self, part):
        assert part.n_regimes == int(np.prod(part.cells)) <= part.max_cells**part.dim
        seen = [part.linear_index(part.tuple_index(k)) for k in range(part.n_regimes)]
        assert seen == list(range(part.n_regimes))
        assert [part.linear_index(J) for J in part.regimes()] == list(range(part.n_regimes))


class TestRegressor:
    def test_layout(self):
        Y = np.array([[0.0, 0.0], [1.0, 2.0]])
        F = np.array([[0.0, 0.0], [3.0, 4.0]])
        np.testing.assert_array_equal(build_regressor(Y, F, 1, 1, 1), [1, 1, 2, 3, 4])

    def test_no_exogenous(self):
        Y = np.arange(6.0).reshape(3, 2)
        phi = build_regressor(Y, None, 2, 2, 0)
        assert phi.shape == (1 + 2 * 2,)

    def test_scalar_two_lags(self):
        np.testing.assert_array_equal(build_regressor([7.0, 5.0], None, 1, 2, 0), [1, 5, 7])

    def test_too_early(self):
        with pytest.raises(IndexError):
            build_regressor(np.zeros((5, 1)), None, 0, 2, 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 3), st.integers(1, 3), st.integers(0, 2))
    def test_leading_one(self, p, q, D, k):
        rng = np.random.default_rng(p * 100 + q * 10 + D)
        Y, F = rng.standard_normal((10, D)), rng.standard_normal((10, k + 1))
        phi = build_regressor(Y, F, 9, p, q)
        assert phi[0] == 1.0
        assert phi.shape == (1 + D * p + (k + 1) * q,)


class TestStackTheta:
    def test_zero(self):
        c = RegimeCoefficients(a0=[0, 0], A=[np.zeros((2, 2))], Lambda=np.zeros((2, 2)))
        exo = ExogenousSpec(Xi=[np.eye(2)], noise_cov=np.eye(2))
        np.testing.assert_array_equal(stack_theta(c, exo), np.zeros((5, 2)))

    def test_scalar(self):
        c = RegimeCoefficients(a0=[1.0], A=[[[0.5]]])
        theta = stack_theta(c, ExogenousSpec.none())
        np.testing.assert_array_equal(theta.T, [[1.0, 0.5]])

    def test_dgp2_regime1_exogenous_block(self, dgp2):
        theta = dgp2.theta((1, 1))
        # Lambda^(1) Xi_1 = [[0.2,0],[0,0]] [[0.5,0],[0.3,0]] = [[0.1,0],[0,0]] (by hand)
        np.testing.assert_allclose(theta[3:5].T, [[0.1, 0.0], [0.0, 0.0]], atol=1e-15)

    def test_prediction_convention(self):
        rng = np.random.default_rng(0)
        a0, A1, A2, LX = rng.standard_normal(2), *rng.standard_normal((2, 2, 2)), rng.standard_normal((2, 3))
        theta = stack_blocks(a0, [A1, A2], [LX])
        y1, y0, f = rng.standard_normal(2), rng.standard_normal(2), rng.standard_normal(3)
        phi = np.concatenate([[1.0], y1, y0, f])
        np.testing.assert_allclose(phi @ theta, a0 + A1 @ y1 + A2 @ y0 + LX @ f, atol=1e-14)

    def test_linear(self):
        rng = np.random.default_rng(1)
        exo = ExogenousSpec(Xi=rng.standard_normal((2, 2, 2)), noise_cov=np.eye(2))

        def coeffs():
            return RegimeCoefficients(
                a0=rng.standard_normal(3), A=rng.standard_normal((2, 3, 3)),
                Lambda=rng.standard_normal((3, 2)),
            )

        c1, c2 = coeffs(), coeffs()
        s = RegimeCoefficients(a0=c1.a0 + c2.a0, A=c1.A + c2.A, Lambda=c1.Lambda + c2.Lambda)
        np.testing.assert_allclose(stack_theta(s, exo), stack_theta(c1, exo) + stack_theta(c2, exo), atol=1e-13)

    def test_unstack_roundtrip(self):
        rng = np.random.default_rng(2)
        theta = rng.standard_normal((1 + 2 * 3 + 2 * 2, 2))
        a0, A, LX = unstack_theta(theta, D=2, p=3, kappa=2, q=2)
        np.testing.assert_array_equal(stack_blocks(a0, A, LX), theta)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            stack_blocks([0.0, 0.0], [np.zeros((3, 3))])


def tiny_model(**overrides):
    kw = dict(
        D=2, kappa=0, p=1, q=0, d=1,
        partition=ThresholdPartition(((0.0,), ())),
        regimes={(1, 1): RegimeCoefficients([0, 0], [np.zeros((2, 2))]),
                 (2, 1): RegimeCoefficients([0, 0], [np.zeros((2, 2))])},
        exogenous=ExogenousSpec.none(),
        noise_cov_eps=np.eye(2),
    )
    kw.update(overrides)
    return ModelSpec(**kw)


class TestValidate:
    def test_dgp1_valid(self, dgp1, dgp2):
        assert validate_model(dgp1) == []
        assert validate_model(dgp2) == []

    def test_unsorted_breakpoints(self):
        problems = validate_model(tiny_model(partition=ThresholdPartition(((0.5, -0.5), ()))))
        assert any("breakpoints not increasing" in p for p in problems)

    def test_not_psd(self):
        # eigenvalues of [[1,2],[2,1]] are 1 +/- 2 = 3, -1
        problems = validate_model(tiny_model(noise_cov_eps=[[1.0, 2.0], [2.0, 1.0]]))
        assert len(problems) == 1
        assert "covariance not PSD" in problems[0] and "-1" in problems[0]

    def test_missing_regime_and_dims(self):
        spec = tiny_model(regimes={(1, 1): RegimeCoefficients([0, 0, 0], [np.zeros((2, 2))])})
        problems = validate_model(spec)
        assert "missing regime (2, 1)" in problems
        assert any("a0 has shape" in p for p in problems)

    def test_reports_everything(self):
        spec = tiny_model(
            partition=ThresholdPartition(((0.5, -0.5), ())),
            noise_cov_eps=[[1.0, 2.0], [2.0, 1.0]],
        )
        assert len(validate_model(spec)) >= 3  # ordering, missing regimes, PSD

    def test_equality(self, dgp1):
        from msetarx import make_dgp

        assert make_dgp("dgp1") == dgp1
        assert make_dgp("dgp2") != dgp1
