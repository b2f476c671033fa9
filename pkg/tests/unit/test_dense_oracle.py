"""The dense reference used to check the symmetric engine."""

import numpy as np
import pytest

import symtensor
from symtensor import IN, OUT
from symtensor.dense_oracle import (
    dense_contract,
    dense_fuse,
    dense_permute,
    dense_split,
    dense_svd,
    graded_permute,
    invariance_residual,
    random_invariant,
)
from symtensor.exception import FusionRuleError, InvalidArgError, StructureMismatchError
from symtensor.rep_spaces import fuse_many
from tests import TOL
from tests.helpers import su2, u1, z2f


class TestPermutations:
    def test_dense_permute(self):
        x = np.arange(24.0).reshape(2, 3, 4)
        assert dense_permute(x, (2, 0, 1)).shape == (4, 2, 3)
        with pytest.raises(InvalidArgError):
            dense_permute(x, (0, 0, 1))

    def test_graded_permute_signs_odd_pairs(self):
        z = z2f({0: 1, 1: 1})
        x = np.ones((2, 2))
        np.testing.assert_array_equal(graded_permute(x, (1, 0), [z, z]), [[1, 1], [1, -1]])

    def test_graded_permute_is_plain_for_bosons(self, rng):
        x = rng.standard_normal((3, 4))
        spaces = [u1({0: 1, 1: 2}), u1({-1: 2, 1: 2})]
        np.testing.assert_array_equal(graded_permute(x, (1, 0), spaces), x.T)


class TestInvariance:
    def test_singlet_is_invariant(self, half):
        singlet = np.array([[0.0, -1.0], [1.0, 0.0]]) / np.sqrt(2)
        assert invariance_residual(singlet, [half, half]) < TOL

    def test_product_state_is_not(self, half):
        assert invariance_residual(np.array([[1.0, 0.0], [0.0, 0.0]]), [half, half]) > 0.1

    def test_incoming_identity(self, half):
        assert invariance_residual(np.eye(2), [half, half], [OUT, IN]) < TOL

    def test_abelian_charges(self):
        v = u1({0: 1, 1: 1})
        x = np.zeros((2, 2))
        x[1, 1] = 1.0
        assert invariance_residual(x.reshape(2, 2, 1), [v, v], root=2) == 0.0
        assert invariance_residual(x, [v, v]) == pytest.approx(1.0)

    def test_shape_is_checked(self, half):
        with pytest.raises(StructureMismatchError):
            invariance_residual(np.zeros((2, 3)), [half, half])

    def test_random_tensors(self, rng, half):
        t = random_invariant([half, su2({0: 1, 2: 1}), half], (OUT, IN, OUT), rng=rng)
        assert invariance_residual(t.to_dense(), t.spaces, t.directions) < 1e-9

    def test_unreachable_root(self, half):
        with pytest.raises(FusionRuleError):
            random_invariant([half] * 3)


class TestFuseAndContract:
    def test_split_inverts_fuse(self, rng):
        spaces = [su2({1: 2}), su2({0: 1, 2: 1}), su2({1: 1})]
        record = fuse_many(spaces)
        x = rng.standard_normal((3, 4, 4, 2))
        fused = dense_fuse(x, 1, record)
        assert fused.shape == (3, 32)
        np.testing.assert_allclose(dense_split(fused, 1, record), x, atol=TOL)

    def test_fuse_checks_dims(self, rng):
        record = fuse_many([su2({1: 1}), su2({1: 1})])
        with pytest.raises(StructureMismatchError):
            dense_fuse(np.zeros((3, 2)), 0, record)

    def test_contract_counts_flops(self, rng, counters_reset):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 4))
        with symtensor.counting() as delta:
            np.testing.assert_allclose(dense_contract(a, b, [(1, 0)]), a @ b)
        assert delta["dense_flops"] == 24

    def test_contract_checks_dims(self):
        with pytest.raises(StructureMismatchError):
            dense_contract(np.zeros((2, 3)), np.zeros((2, 4)), [(1, 0)])

    def test_graded_contract_moves_legs_with_signs(self):
        z = z2f({0: 1, 1: 1})
        a = np.zeros((2, 2))
        a[1, 1] = 1.0
        b = np.eye(2)
        # contracting the first leg of a moves it past an odd second leg
        result = dense_contract(a, b, [(0, 0)], ([z, z], [z, z]))
        np.testing.assert_array_equal(result, [[0.0, 0.0], [0.0, -1.0]])

    def test_svd_values(self):
        np.testing.assert_allclose(dense_svd(np.diag([1.0, 3.0, 2.0])), [3.0, 2.0, 1.0])
