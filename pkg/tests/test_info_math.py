import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ic_lab.errors import DomainError, ValidationError
from ic_lab.info_math import (
    BiasedProbability,
    JointDistribution,
    binary_entropy,
    fano_information,
    mutual_information,
    unbiased_error_joint,
)
from oracles import fano_literal, h, mutual_information_loops


class TestBinaryEntropy:
    def test_half_is_one_bit(self):
        assert binary_entropy(0.5) == 1.0

    def test_deterministic_is_zero(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_value_at_011(self):
        # natural-log oracle, converted to bits
        assert binary_entropy(0.11) == pytest.approx(h(0.11), abs=1e-15)
        assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-4)

    @pytest.mark.parametrize("q", [-0.01, 1.0001, math.nan])
    def test_domain(self, q):
        with pytest.raises(DomainError):
            binary_entropy(q)

    @given(st.floats(0.0, 1.0))
    def test_symmetry(self, q):
        assert binary_entropy(q) == pytest.approx(binary_entropy(1.0 - q), abs=1e-12)


class TestFanoInformation:
    def test_perfect_bit(self):
        assert fano_information(2, 1.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("d", [2, 3, 7, 20, 256])
    def test_zero_bias_carries_nothing(self, d):
        assert fano_information(d, 0.0) == 0.0

    def test_tsirelson_bias(self):
        e = 1 / math.sqrt(2)
        expected = 1 - h((1 + e) / 2)
        assert fano_information(2, e) == pytest.approx(expected, abs=1e-14)
        joint = unbiased_error_joint(2, e)
        assert mutual_information(joint) == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("d", [2, 3, 5, 8, 20])
    @pytest.mark.parametrize("e", [0.05, 0.2, 0.5, 0.702, 0.9, 1.0])
    def test_matches_literal_formula(self, d, e):
        assert fano_information(d, e) == pytest.approx(fano_literal(d, e), abs=1e-13)

    @pytest.mark.parametrize("d", [2, 3, 8])
    def test_series_branch_joins_smoothly(self, d):
        cut = 0.05 / (d - 1)
        below, above = fano_information(d, cut * (1 - 1e-9)), fano_information(d, cut * (1 + 1e-9))
        assert below < above
        assert above - below < 1e-9 * fano_information(d, cut) * 10

    @pytest.mark.parametrize("d", [2, 3, 8])
    def test_quadratic_near_zero(self, d):
        # I_d(e) ~ (d-1) e^2 / (2 ln 2)
        for e in (1e-4, 1e-6, 1e-9):
            assert fano_information(d, e) / e**2 == pytest.approx((d - 1) / (2 * math.log(2)), rel=1e-3)

    @pytest.mark.parametrize("d", [2, 3, 4, 8, 20])
    def test_strictly_increasing(self, d):
        grid = np.linspace(1e-4, 1.0, 2001)
        values = np.array([fano_information(d, e) for e in grid])
        assert np.all(np.diff(values) > 0)

    @pytest.mark.parametrize("d,e", [(1, 0.5), (2, -0.1), (2, 1.1), (2.5, 0.5)])
    def test_domain(self, d, e):
        with pytest.raises(DomainError):
            fano_information(d, e)

    @settings(max_examples=200)
    @given(st.integers(2, 16), st.floats(0.0, 1.0))
    def test_fano_equality_property(self, d, e):
        joint = unbiased_error_joint(d, e)
        assert mutual_information(joint) == pytest.approx(fano_information(d, e), abs=1e-10)


class TestBiasedProbability:
    @given(st.integers(2, 50), st.floats(0.0, 1.0))
    def test_roundtrip(self, d, e):
        bp = BiasedProbability.from_bias(d, e)
        back = BiasedProbability.from_probability(d, bp.p)
        assert back.e == pytest.approx(e, abs=1e-12)
        assert abs(bp.p - (1 + (d - 1) * bp.e) / d) <= 1e-12

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValidationError):
            BiasedProbability(2, 0.9, 0.5)

    def test_probability_below_uniform_rejected(self):
        with pytest.raises(DomainError):
            BiasedProbability.from_probability(3, 0.2)


class TestJointDistribution:
    def test_small_deviation_is_renormalized(self):
        j = JointDistribution([[0.5, 0.0], [0.0, 0.5 + 5e-10]])
        assert j.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_large_deviation_rejected(self):
        with pytest.raises(ValidationError):
            mutual_information(JointDistribution([[0.5, 0.0], [0.0, 0.4]]))

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            JointDistribution([[0.6, -0.1], [0.0, 0.5]])

    def test_immutable(self):
        j = JointDistribution([[0.25, 0.25], [0.25, 0.25]])
        with pytest.raises(ValueError):
            j.weights[0, 0] = 1.0


class TestMutualInformation:
    @pytest.mark.parametrize("shape", [(2, 2), (3, 5), (8, 2)])
    def test_uniform_product_is_zero(self, shape):
        w = np.full(shape, 1.0 / (shape[0] * shape[1]))
        assert mutual_information(JointDistribution(w)) == pytest.approx(0.0, abs=1e-15)

    def test_diagonal_bit(self):
        assert mutual_information(JointDistribution(np.eye(2) / 2)) == pytest.approx(1.0, abs=1e-15)

    def test_matches_loop_oracle_on_random_tables(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            rows, cols = rng.integers(2, 6, size=2)
            w = rng.random((rows, cols)) * (rng.random((rows, cols)) > 0.2)
            w[0, 0] += 1e-3
            w /= w.sum()
            assert mutual_information(JointDistribution(w)) == pytest.approx(
                mutual_information_loops(w.tolist()), abs=1e-12
            )

    def test_nonnegative_and_zero_iff_independent(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            rows, cols = rng.integers(2, 5, size=2)
            if rng.random() < 0.5:
                w = np.outer(rng.dirichlet(np.ones(rows)), rng.dirichlet(np.ones(cols)))
            else:
                w = rng.dirichlet(np.ones(rows * cols)).reshape(rows, cols)
            info = mutual_information(JointDistribution(w))
            conditional = w / w.sum(axis=1, keepdims=True)
            independent = np.allclose(conditional, conditional[0], atol=1e-12)
            assert info >= 0
            assert (info < 1e-12) == independent
