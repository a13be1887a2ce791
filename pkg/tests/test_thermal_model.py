import numpy as np
import pytest
from hypothesis import given, strategies as st

from heatid.thermal_model import (
    LumpedThermalModel, build_continuous_matrices, chain_conductance, true_convection_surrogate,
)


class TestModelValidation:
    def test_rejects_asymmetric_conductance(self):
        K = np.array([[-1.0, 1.0], [0.5, -0.5]])
        with pytest.raises(ValueError, match="symmetric"):
            LumpedThermalModel([1.0, 1.0], K, 1.0, [1.0, 1.0])

    def test_rejects_nonzero_row_sum(self):
        K = np.array([[-2.0, 1.0], [1.0, -1.0]])
        with pytest.raises(ValueError, match="sum to zero"):
            LumpedThermalModel([1.0, 1.0], K, 1.0, [1.0, 1.0])

    def test_row_sum_tolerance(self):
        K = chain_conductance([1.0]) + 1e-10 * np.eye(2)
        LumpedThermalModel([1.0, 1.0], K, 1.0, [1.0, 1.0])

    @pytest.mark.parametrize("cap,area", [([0.0, 1.0], [1.0, 1.0]), ([1.0, -1.0], [1.0, 1.0]), ([1.0, 1.0], [1.0, 0.0])])
    def test_rejects_nonpositive(self, cap, area):
        with pytest.raises(ValueError, match="strictly positive"):
            LumpedThermalModel(cap, chain_conductance([1.0]), 1.0, area)

    def test_rejects_negative_off_diagonal(self):
        K = np.array([[1.0, -1.0], [-1.0, 1.0]])
        with pytest.raises(ValueError, match=">= 0"):
            LumpedThermalModel([1.0, 1.0], K, 1.0, [1.0, 1.0])

    def test_fields_immutable(self):
        m = LumpedThermalModel.chain([1.0, 2.0], [3.0], 1.0, [1.0, 1.0])
        with pytest.raises(ValueError):
            m.heat_capacity[0] = 5.0


class TestContinuousMatrices:
    def test_zero_convection(self):
        m = LumpedThermalModel.chain([5.0, 6.0, 7.0], [1.0, 2.0], 0.0, [1.0, 2.0, 3.0])
        mats = build_continuous_matrices(m)
        np.testing.assert_array_equal(mats.F, m.conductance)
        np.testing.assert_array_equal(mats.G, np.hstack([np.zeros((3, 1)), np.eye(3)]))

    def test_simulated_rod(self):
        m = LumpedThermalModel.chain([1000.0] * 3, [10.0, 10.0], 2.0, [1.0, 1.0, 1.0])
        mats = build_continuous_matrices(m)
        np.testing.assert_array_equal(mats.F, [[-12, 10, 0], [10, -22, 10], [0, 10, -12]])
        np.testing.assert_array_equal(mats.G[:, 0], [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(mats.G[:, 1:], np.eye(3))

    def test_single_block_device(self):
        m = LumpedThermalModel([0.276 * 910], [[0.0]], 7.75, [0.0066])
        mats = build_continuous_matrices(m)
        assert mats.F[0, 0] == pytest.approx(-0.051150, abs=1e-12)
        np.testing.assert_allclose(mats.G, [[0.051150, 1.0]], atol=1e-12)

    @given(
        st.lists(st.floats(0.0, 50.0), min_size=1, max_size=5),
        st.floats(0.0, 20.0),
        st.data(),
    )
    def test_row_sums(self, couplings, ha, data):
        d = len(couplings) + 1
        area = np.array(data.draw(st.lists(st.floats(0.01, 10.0), min_size=d, max_size=d)))
        m = LumpedThermalModel.chain(np.ones(d), couplings, ha, area)
        F = build_continuous_matrices(m).F
        np.testing.assert_allclose(F.sum(axis=1), -ha * area, rtol=1e-12, atol=1e-12)


class TestSurrogate:
    @pytest.mark.parametrize("Ti,Ta,expected", [(21, 21, 0.0), (31, 21, -10.0), (11, 21, 10.0)])
    def test_values(self, Ti, Ta, expected):
        assert true_convection_surrogate(Ti, Ta) == pytest.approx(expected)

    @given(st.floats(-100, 100), st.floats(-50, 50))
    def test_odd_symmetry(self, x, y):
        assert true_convection_surrogate(x, y) == pytest.approx(-true_convection_surrogate(2 * y - x, y), abs=1e-9)
