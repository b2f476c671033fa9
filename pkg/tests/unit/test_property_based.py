"""Property-based tests using hypothesis."""

import numpy as np
import pytest

hypothesis = pytest.importorskip("hypothesis")
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from symtensor import IN, OUT
from symtensor.block_linalg import BlockDiagMatrix, svd, truncate
from symtensor.dense_oracle import graded_permute
from symtensor.su2_kernels import cg_block, triangle, wigner_6j
from symtensor.sym_tensor import fuse_with_records, permute, split
from tests.helpers import random_tensor, su2

twice_spins = st.integers(min_value=0, max_value=6)
seeds = st.integers(min_value=0, max_value=2**32 - 1)
permutations = st.permutations(range(4))
system_names = st.sampled_from(["su2", "u1", "z2f"])


# ── Kernels ────────────────────────────────────────────────


class TestKernelProperties:
    @given(ta=twice_spins, tb=twice_spins)
    @settings(max_examples=30, deadline=None)
    def test_clebsch_gordan_columns_are_orthonormal(self, ta, tb):
        dim = (ta + 1) * (tb + 1)
        columns = [cg_block(ta, tb, tc).reshape(dim, tc + 1) for tc in range(abs(ta - tb), ta + tb + 1, 2)]
        v = np.concatenate(columns, axis=1)
        assert v.shape == (dim, dim)
        np.testing.assert_allclose(v.T @ v, np.eye(dim), atol=1e-10)

    @given(args=st.tuples(*[twice_spins] * 6))
    @settings(max_examples=60, deadline=None)
    def test_six_j_tetrahedral_symmetry(self, args):
        a, b, c, d, e, f = args
        value = wigner_6j(a, b, c, d, e, f)
        assert wigner_6j(b, a, c, e, d, f) == pytest.approx(value, abs=1e-12)
        assert wigner_6j(a, e, f, d, b, c) == pytest.approx(value, abs=1e-12)
        assert wigner_6j(d, e, c, a, b, f) == pytest.approx(value, abs=1e-12)

    @given(ta=twice_spins, tb=twice_spins, tc=twice_spins)
    def test_triangle_is_symmetric(self, ta, tb, tc):
        assert triangle(ta, tb, tc) == triangle(tb, tc, ta) == triangle(tc, ta, tb)


# ── Tensors ────────────────────────────────────────────────


class TestTensorProperties:
    @given(seed=seeds, perm=permutations, system_name=system_names)
    @settings(max_examples=25, deadline=None)
    def test_permute_matches_graded_transpose(self, seed, perm, system_name):
        t = random_tensor(np.random.default_rng(seed), system_name, (OUT, IN, OUT, IN))
        expected = graded_permute(t.to_dense(), perm, t.spaces)
        np.testing.assert_allclose(permute(t, perm).to_dense(), expected, atol=1e-9)

    @given(seed=seeds, perm=permutations)
    @settings(max_examples=25, deadline=None)
    def test_permute_then_inverse_is_identity(self, seed, perm):
        t = random_tensor(np.random.default_rng(seed), "su2", (OUT, OUT, IN, IN))
        back = permute(permute(t, perm), tuple(int(i) for i in np.argsort(perm)))
        np.testing.assert_allclose(back.to_dense(), t.to_dense(), atol=1e-9)

    @given(seed=seeds, system_name=st.sampled_from(["su2", "u1"]))
    @settings(max_examples=20, deadline=None)
    def test_split_undoes_fuse(self, seed, system_name):
        t = random_tensor(np.random.default_rng(seed), system_name, (OUT, OUT, IN, IN))
        fused, records = fuse_with_records(t, [2, 2])
        back = split(split(fused, 1, records[1]), 0, records[0])
        np.testing.assert_allclose(back.to_dense(), t.to_dense(), atol=1e-9)


# ── Truncation ─────────────────────────────────────────────


class TestTruncationProperties:
    @given(seed=seeds, chi=st.integers(min_value=1, max_value=30))
    @settings(max_examples=40, deadline=None)
    def test_kept_and_discarded_weights_add_up(self, seed, chi):
        rng = np.random.default_rng(seed)
        space = su2({0: 2, 2: 3, 4: 1})
        m = BlockDiagMatrix(space, space, {c: rng.standard_normal((k, k)) for c, k in space.sectors})
        assume(np.all([np.any(b) for b in m.blocks.values()]))
        result = truncate(svd(m), chi)
        assert result.kept.dim <= chi
        kept = sum(space.system.dim(c) * float(np.sum(np.diag(b) ** 2)) for c, b in result.s.blocks.items())
        assert kept + result.discarded_weight == pytest.approx(float(np.sum(m.dense() ** 2)), rel=1e-9)
