"""Block-diagonal matrices: products, decompositions and the rank-2 tree bridge."""

import numpy as np
import pytest

import symtensor
from symtensor import IN, IN_R, OUT
from symtensor.block_linalg import (
    BlockDiagMatrix,
    add,
    blockdiag_to_tree,
    dense_matmul_flops,
    eig,
    identity,
    matmul,
    matmul_flops,
    polar_isometry,
    qr,
    scale,
    svd,
    tree_to_blockdiag,
    truncate,
)
from symtensor.dense_oracle import random_invariant
from symtensor.exception import ChargeSystemMismatchError, InvalidArgError, StructureMismatchError
from tests import TOL
from tests.helpers import all_out, su2, u1


def _random(rng, rows, cols):
    shared = [c for c in rows.charges if c in cols]
    return BlockDiagMatrix(rows, cols, {c: rng.standard_normal((rows.degeneracy(c), cols.degeneracy(c))) for c in shared})


@pytest.fixture
def space():
    return su2({0: 2, 2: 3, 4: 1})


class TestBlockDiagMatrix:
    def test_dense_realization(self):
        v = su2({0: 1, 2: 1})
        m = BlockDiagMatrix(v, v, {0: np.array([[2.0]]), 2: np.array([[-1.0]])})
        np.testing.assert_array_equal(m.dense(), np.diag([2.0, -1.0, -1.0, -1.0]))
        assert m.shape == (4, 4)
        assert m.num_coefficients == 2

    def test_missing_block_reads_as_zero(self, space):
        m = BlockDiagMatrix(space, space, {})
        assert m.block(2).shape == (3, 3)
        assert not np.any(m.dense())

    def test_adjoint(self, rng, space):
        m = _random(rng, space, su2({0: 1, 2: 2}))
        np.testing.assert_allclose(m.H.dense(), m.dense().conj().T)

    @pytest.mark.parametrize(
        "blocks",
        [{1: np.ones((1, 1))}, {0: np.ones((3, 2))}],
    )
    def test_invalid_blocks(self, space, blocks):
        with pytest.raises(StructureMismatchError):
            BlockDiagMatrix(space, space, blocks)

    def test_systems_must_match(self):
        with pytest.raises(ChargeSystemMismatchError):
            BlockDiagMatrix(su2({0: 1}), u1({0: 1}), {})


# ── products ───────────────────────────────────────────────


class TestProducts:
    def test_matmul_against_dense(self, rng, space):
        m, n = _random(rng, space, space), _random(rng, space, space)
        np.testing.assert_allclose((m @ n).dense(), m.dense() @ n.dense(), atol=TOL)

    def test_rectangular_chain(self, rng):
        a, b, c = su2({0: 2, 2: 1}), su2({0: 1, 2: 3, 4: 2}), su2({2: 2, 4: 1})
        m, n = _random(rng, a, b), _random(rng, b, c)
        np.testing.assert_allclose(matmul(m, n).dense(), m.dense() @ n.dense(), atol=TOL)

    def test_inner_spaces_must_match(self, rng, space):
        m = _random(rng, space, space)
        with pytest.raises(StructureMismatchError):
            matmul(m, _random(rng, su2({0: 1}), su2({0: 1})))

    def test_flop_counts(self, rng, counters_reset):
        v = su2({0: 2, 2: 2, 4: 2})
        m = _random(rng, v, v)
        assert matmul_flops(m, m) == 3 * 2**3
        assert dense_matmul_flops(m, m) == 18**3
        with symtensor.counting() as delta:
            matmul(m, m)
        assert delta["block_flops"] == 24

    def test_add_scale_identity(self, rng, space):
        m = _random(rng, space, space)
        np.testing.assert_allclose(add(m, scale(m, -1.0)).dense(), 0.0, atol=TOL)
        np.testing.assert_allclose((identity(space) @ m).dense(), m.dense(), atol=TOL)
        np.testing.assert_array_equal(identity(space).dense(), np.eye(space.dim))


# ── decompositions ─────────────────────────────────────────


class TestSvd:
    def test_reconstruction(self, rng):
        rows, cols = su2({0: 3, 2: 2, 4: 2}), su2({0: 2, 2: 3, 4: 1})
        m = _random(rng, rows, cols)
        u, s, v = svd(m)
        np.testing.assert_allclose((u @ s @ v).dense(), m.dense(), atol=1e-9)
        values = np.sort(np.diag(s.dense()))[::-1]
        np.testing.assert_allclose(values, np.linalg.svd(m.dense(), compute_uv=False)[: len(values)], atol=1e-9)

    def test_values_descend_per_charge(self, rng, space):
        _, s, _ = svd(_random(rng, space, space))
        for block in s.blocks.values():
            diagonal = np.diag(block)
            assert np.all(diagonal[:-1] >= diagonal[1:])

    def test_zero_matrix_has_no_bond(self, space):
        with pytest.raises(InvalidArgError):
            svd(BlockDiagMatrix(space, space, {}))


class TestTruncate:
    @pytest.fixture
    def factors(self):
        v = su2({0: 1, 2: 1})
        return svd(BlockDiagMatrix(v, v, {0: np.array([[0.9]]), 2: np.array([[0.8]])}))

    def test_whole_multiplets_only(self, factors):
        result = truncate(factors, 3)
        assert result.kept == su2({0: 1})
        assert result.discarded_weight == pytest.approx(3 * 0.8**2)
        assert result.s.blocks[0].item() == pytest.approx(0.9)

    def test_everything_fits(self, factors):
        result = truncate(factors, 4)
        assert result.kept == su2({0: 1, 2: 1})
        assert result.discarded_weight == 0.0

    def test_smaller_multiplet_still_taken(self):
        v = su2({0: 1, 2: 1})
        factors = svd(BlockDiagMatrix(v, v, {0: np.array([[0.1]]), 2: np.array([[0.8]])}))
        assert truncate(factors, 2).kept == su2({0: 1})

    @pytest.mark.parametrize("chi", [0, -3])
    def test_chi_must_be_positive(self, factors, chi):
        with pytest.raises(InvalidArgError):
            truncate(factors, chi)

    def test_nothing_fits(self):
        v = su2({2: 1})
        factors = svd(BlockDiagMatrix(v, v, {2: np.array([[1.0]])}))
        with pytest.raises(InvalidArgError):
            truncate(factors, 2)


class TestEigQrPolar:
    def test_eig_of_a_swap(self):
        v = su2({0: 2})
        result = eig(BlockDiagMatrix(v, v, {0: np.array([[0.0, 1.0], [1.0, 0.0]])}))
        np.testing.assert_allclose(result.values[0], [-1.0, 1.0], atol=TOL)

    def test_eig_against_dense(self, rng, space):
        m = _random(rng, space, space)
        m = add(m, m.H)
        result = eig(m)
        multiplets = np.sort(
            np.concatenate([np.repeat(vals, space.system.dim(c)) for c, vals in result.values.items()])
        )
        np.testing.assert_allclose(multiplets, np.linalg.eigvalsh(m.dense()), atol=1e-9)

    @pytest.mark.parametrize("kwargs", [{}, {"hermitian": False}])
    def test_eig_rejects(self, rng, space, kwargs):
        m = _random(rng, space, space)
        if not kwargs:
            m = add(m, scale(m.H, -1.0))
            m = add(m, identity(space))
        with pytest.raises(InvalidArgError):
            eig(m, **kwargs)

    def test_eig_needs_square(self, rng, space):
        with pytest.raises(InvalidArgError):
            eig(_random(rng, space, su2({0: 1})))

    def test_qr(self, rng):
        rows, cols = su2({0: 4, 2: 3}), su2({0: 2, 2: 2})
        m = _random(rng, rows, cols)
        q, r = qr(m)
        np.testing.assert_allclose((q @ r).dense(), m.dense(), atol=1e-9)
        for c, block in q.blocks.items():
            np.testing.assert_allclose(block.T @ block, np.eye(block.shape[1]), atol=TOL)

    def test_polar_isometry(self, rng):
        rows, cols = su2({0: 4, 2: 3}), su2({0: 2, 2: 2})
        w = polar_isometry(_random(rng, rows, cols))
        for c, block in w.blocks.items():
            np.testing.assert_allclose(block.T @ block, np.eye(cols.degeneracy(c)), atol=TOL)


# ── rank-2 tensors ─────────────────────────────────────────


class TestTreeBridge:
    @pytest.mark.parametrize("incoming", [IN, IN_R])
    def test_dense_agrees(self, rng, space, incoming):
        t = random_invariant([space, space], (OUT, incoming), rng=rng)
        m = tree_to_blockdiag(t)
        np.testing.assert_allclose(m.dense(), t.to_dense(), atol=TOL)
        back = blockdiag_to_tree(m, (OUT, incoming))
        for path, block in t.blocks.items():
            np.testing.assert_allclose(back.blocks[path], block, atol=TOL)

    def test_identity_tensor(self, space):
        np.testing.assert_allclose(blockdiag_to_tree(identity(space)).to_dense(), np.eye(space.dim), atol=TOL)

    def test_u1_operator(self, rng):
        v = u1({-1: 1, 0: 2, 1: 1})
        t = random_invariant([v, v], (OUT, IN), rng=rng)
        np.testing.assert_allclose(tree_to_blockdiag(t).dense(), t.to_dense(), atol=TOL)

    def test_needs_rank_two(self, rng, space):
        with pytest.raises(InvalidArgError, match="rank-2"):
            tree_to_blockdiag(random_invariant([space] * 3, all_out(3), rng=rng))

    def test_needs_out_in(self, rng, space):
        with pytest.raises(InvalidArgError):
            tree_to_blockdiag(random_invariant([space, space], (IN, OUT), rng=rng))
        with pytest.raises(InvalidArgError):
            blockdiag_to_tree(identity(space), (OUT, OUT))
