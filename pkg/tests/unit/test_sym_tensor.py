"""SymTensor construction, dense conversion, tree operations and contraction."""

import numpy as np
import pytest

import symtensor
from symtensor import IN, IN_R, OUT, config
from symtensor.dense_oracle import dense_contract, dense_fuse, dense_reverse, graded_permute, random_invariant
from symtensor.exception import (
    FuseMapError,
    InvalidArgError,
    NonInvariantError,
    OracleSizeError,
    StructureMismatchError,
)
from symtensor.fusion_trees import SectorPath, left_comb, right_comb
from symtensor.sym_tensor import (
    absorb_bends,
    add,
    contract,
    contract_scalar,
    dagger,
    from_blocks,
    from_dense,
    from_json,
    fuse,
    fuse_records,
    fuse_with_records,
    identity,
    inner,
    insert_trivial_leg,
    load,
    new_tree,
    norm,
    permute,
    release_bends,
    remove_trivial_leg,
    reverse,
    save,
    scale,
    split,
    tensors_residual,
    zeros,
)
from tests import TOL
from tests.helpers import all_out, max_abs, random_tensor, su2

STORAGE_SPACE = {0: 1, 2: 3, 4: 1}


def _same_blocks(a, b):
    assert set(a.blocks) == set(b.blocks)
    for path, block in a.blocks.items():
        np.testing.assert_allclose(block, b.blocks[path], atol=TOL)


class TestConstruction:
    def test_singlet_of_two_halves(self, half):
        dense = np.array([[0.0, -1 / np.sqrt(2)], [1 / np.sqrt(2), 0.0]])
        t = from_dense(dense, [half, half])
        assert list(t.blocks) == [SectorPath((1, 1), (0,))]
        assert t.blocks[SectorPath((1, 1), (0,))].item() == pytest.approx(1.0, abs=TOL)
        assert t.norm() == pytest.approx(1.0, abs=TOL)
        np.testing.assert_allclose(t.to_dense(), dense, atol=TOL)

    def test_rank_two_storage(self):
        v = su2(STORAGE_SPACE)
        t = zeros([v, v], (OUT, IN))
        assert t.num_coefficients == 11
        assert t.dense_size == 225

    def test_rank_three_storage(self):
        v = su2(STORAGE_SPACE)
        t = zeros([v] * 3)
        assert len(t.blocks) == 15
        assert t.num_coefficients == 95
        assert t.dense_size == 3375

    def test_blocks_have_one_axis_per_leaf(self, rng):
        v = su2({0: 2, 2: 1})
        for t in (zeros([v] * 3), random_invariant([v] * 3, rng=rng), zeros([v] * 3).random_like(rng)):
            assert t.blocks[SectorPath((0, 0, 0), (0, 0))].shape == (2, 2, 2)
            assert t.blocks[SectorPath((0, 2, 2), (2, 0))].shape == (2, 1, 1)
            for path, block in t.blocks.items():
                assert block.shape == tuple(v.degeneracy(c) for c in path.leaves)

    def test_random_matrix_with_degenerate_sectors(self, rng):
        v = su2({0: 2, 2: 1})
        t = random_invariant([v, v], (OUT, IN), rng=rng)
        assert t.blocks[SectorPath((0, 0), (0,))].shape == (2, 2)
        _same_blocks(from_dense(t.to_dense(), [v, v], (OUT, IN)), t)

    def test_fused_blocks_keep_one_axis_per_leg(self, rng):
        v = su2({0: 2, 2: 1})
        f = fuse(random_invariant([v] * 3, rng=rng), [2, 1])
        assert len(f.spaces) == 2
        for path, block in f.blocks.items():
            assert block.shape == tuple(s.degeneracy(c) for c, s in zip(path.leaves, f.tree_spaces))

    def test_not_invariant(self, half):
        with pytest.raises(NonInvariantError) as info:
            from_dense(np.array([[1.0, 0.0], [0.0, 0.0]]), [half, half])
        assert info.value.residual > 0.5

    def test_invariance_check_can_be_skipped(self, half):
        t = from_dense(np.array([[1.0, 0.0], [0.0, 0.0]]), [half, half], policy={"check_invariance": False})
        assert t.rank == 2

    def test_dense_shape_must_match(self, half):
        with pytest.raises(StructureMismatchError):
            from_dense(np.zeros((3, 2)), [half, half])

    def test_block_shape_is_checked(self, half):
        with pytest.raises(StructureMismatchError):
            from_blocks([half, half], None, {SectorPath((1, 1), (0,)): np.ones((2, 1))})

    def test_path_must_end_in_root(self, half):
        with pytest.raises(symtensor.FusionRuleError):
            from_blocks([half, half], None, {SectorPath((1, 1), (2,)): np.ones((1, 1))})

    def test_round_trip(self, rng, system_name):
        t = random_tensor(rng, system_name, (OUT, OUT, IN, IN_R))
        back = from_dense(t.to_dense(), t.spaces, t.directions, t.tree)
        _same_blocks(back, t)

    def test_covariant_round_trip(self, rng, half):
        t = random_invariant([half] * 3, root=1, rng=rng)
        x = t.to_dense()
        assert x.shape == (2, 2, 2, 2)
        _same_blocks(from_dense(x, t.spaces, root=1), t)
        assert tensors_residual([t]) < 1e-9

    def test_random_tensors_are_invariant(self, rng, system_name):
        t = random_tensor(rng, system_name, (OUT, IN, OUT))
        assert tensors_residual([t]) < 1e-9

    def test_size_guard(self, half, monkeypatch):
        monkeypatch.setattr(config, "ORACLE_MAX_ENTRIES", 8)
        t = zeros([half] * 4)
        with pytest.raises(OracleSizeError):
            t.to_dense()

    def test_repr(self, half):
        t = zeros([half, half])
        assert repr(t).startswith("SymTensor([out:RepSpace(su2, {1:1}), out:")


# ── leg directions and trees ───────────────────────────────


class TestLegOperations:
    @pytest.mark.parametrize("new", [IN, IN_R])
    def test_reverse_against_dense(self, rng, new):
        t = random_tensor(rng, "su2", (OUT, OUT, IN))
        r = reverse(t, {0: new})
        assert r.blocks is t.blocks
        np.testing.assert_allclose(r.to_dense(), dense_reverse(t.to_dense(), 0, t.tree_spaces[0], OUT, new), atol=TOL)
        assert tensors_residual([r]) < 1e-9

    def test_reverse_needs_one_direction_per_leg(self, rng):
        t = random_tensor(rng, "su2", all_out(3))
        with pytest.raises(StructureMismatchError):
            reverse(t, [OUT, IN])

    def test_absorbed_bends_keep_the_dense_tensor(self, rng):
        t = random_tensor(rng, "su2", (IN, OUT, IN_R))
        absorbed = absorb_bends(t)
        assert absorbed.has_absorbed_bends
        np.testing.assert_allclose(absorbed.to_dense(), t.to_dense(), atol=TOL)
        _same_blocks(release_bends(absorbed), t)

    def test_permute_against_dense(self, rng, system_name):
        t = random_tensor(rng, system_name, (OUT, IN, OUT, IN))
        perm = (2, 0, 3, 1)
        expected = graded_permute(t.to_dense(), perm, t.spaces)
        np.testing.assert_allclose(permute(t, perm).to_dense(), expected, atol=1e-9)
        np.testing.assert_allclose(permute(t, perm, right_comb(4)).to_dense(), expected, atol=1e-9)

    def test_permute_then_inverse(self, rng, system_name):
        t = random_tensor(rng, system_name, all_out(4))
        perm = (3, 1, 0, 2)
        back = permute(permute(t, perm), np.argsort(perm))
        _same_blocks(back, t)

    def test_permute_counts_coefficients(self, rng, counters_reset):
        t = random_tensor(rng, "su2", all_out(3))
        with symtensor.counting() as delta:
            permute(t, (1, 0, 2))
        assert delta["gamma_coefficients_touched"] > 0

    def test_not_a_permutation(self, rng):
        t = random_tensor(rng, "su2", all_out(3))
        with pytest.raises(InvalidArgError):
            permute(t, (0, 1, 1))

    def test_new_tree_keeps_dense(self, rng):
        t = random_tensor(rng, "su2", all_out(4))
        np.testing.assert_allclose(new_tree(t, right_comb(4)).to_dense(), t.to_dense(), atol=1e-9)
        with pytest.raises(StructureMismatchError):
            new_tree(t, left_comb(3))


# ── fusing and splitting ───────────────────────────────────


class TestFuseSplit:
    @pytest.mark.parametrize("system_name", ["su2", "u1"])
    def test_fuse_against_dense(self, rng, system_name):
        t = random_tensor(rng, system_name, (OUT, OUT, IN, IN))
        fused, records = fuse_with_records(t, [2, 2])
        assert fused.rank == 2
        expected = dense_fuse(dense_fuse(t.to_dense(), 2, records[1]), 0, records[0])
        np.testing.assert_allclose(fused.to_dense(), expected, atol=1e-9)

    def test_split_undoes_fuse(self, rng, system_name):
        t = random_tensor(rng, system_name, all_out(4))
        fused, records = fuse_with_records(t, [[0, 1], [2, 3]])
        back = split(split(fused, 1, records[1]), 0, records[0])
        np.testing.assert_allclose(back.to_dense(), t.to_dense(), atol=1e-9)

    def test_records_match_fuse(self, rng):
        t = random_tensor(rng, "su2", all_out(3))
        records = fuse_records(t, [2, 1])
        assert fuse(t, [2, 1]).spaces == tuple(r.product for r in records)

    def test_groups_must_cover_legs(self, rng):
        t = random_tensor(rng, "su2", all_out(3))
        with pytest.raises(InvalidArgError):
            fuse(t, [2])
        with pytest.raises(InvalidArgError):
            fuse(t, [[1, 2], [0]])

    def test_split_with_wrong_record(self, rng, half):
        t = random_invariant([half] * 4, rng=rng)
        fused, records = fuse_with_records(t, [3, 1])
        with pytest.raises(FuseMapError):
            split(fused, 1, records[0])


class TestTrivialLegs:
    @pytest.mark.parametrize("position", [0, 1, 3])
    def test_insert_and_remove(self, rng, position):
        t = random_tensor(rng, "su2", all_out(3))
        padded = insert_trivial_leg(t, position)
        assert padded.rank == 4
        np.testing.assert_allclose(padded.to_dense(), np.expand_dims(t.to_dense(), position), atol=TOL)
        _same_blocks(remove_trivial_leg(padded, position), t)

    def test_remove_nontrivial(self, half):
        with pytest.raises(InvalidArgError):
            remove_trivial_leg(zeros([half, half]), 0)


# ── contraction ────────────────────────────────────────────


class TestContract:
    def test_against_dense(self, rng, system_name):
        a = random_tensor(rng, system_name, (OUT, OUT, IN))
        b = random_invariant([a.spaces[1], a.spaces[1]], (IN, OUT), rng=rng)
        c = contract(a, b, [(1, 0)])
        expected = dense_contract(a.to_dense(), b.to_dense(), [(1, 0)], (a.spaces, b.spaces))
        np.testing.assert_allclose(c.to_dense(), expected, atol=1e-9)

    @pytest.mark.parametrize("directions", [(OUT, OUT, IN), (IN, OUT, OUT), (IN_R, OUT, OUT)])
    def test_against_dense_every_orientation(self, rng, directions):
        a = random_tensor(rng, "su2", directions)
        b = random_invariant([a.spaces[0], a.spaces[0]], (IN, OUT), rng=rng)
        # leg 1 of b is outgoing, leg 0 incoming
        j = 1 if directions[0].incoming else 0
        c = contract(a, b, [(0, j)])
        expected = dense_contract(a.to_dense(), b.to_dense(), [(0, j)])
        np.testing.assert_allclose(c.to_dense(), expected, atol=1e-9)

    def test_outer_product(self, rng):
        a = random_tensor(rng, "su2", (OUT, IN))
        b = random_tensor(rng, "su2", (OUT, IN))
        c = contract(a, b, [])
        np.testing.assert_allclose(c.to_dense(), np.multiply.outer(a.to_dense(), b.to_dense()), atol=1e-9)

    def test_full_contraction_is_a_scalar(self, rng):
        t = random_tensor(rng, "su2", (OUT, OUT, IN))
        with pytest.raises(InvalidArgError, match="contract_scalar"):
            contract(t, dagger(t), [(0, 0), (1, 1), (2, 2)])
        value = contract_scalar(t, dagger(t), [(0, 0), (1, 1), (2, 2)])
        assert value == pytest.approx(norm(t) ** 2, rel=1e-9)

    def test_same_orientation_is_rejected(self, rng):
        a = random_tensor(rng, "su2", all_out(3))
        with pytest.raises(StructureMismatchError, match="outgoing"):
            contract(a, a, [(0, 0)])

    def test_different_spaces_are_rejected(self, half):
        a = zeros([half, half], (OUT, IN))
        one = su2({0: 1, 2: 1})
        b = zeros([one, one], (OUT, IN))
        with pytest.raises(StructureMismatchError):
            contract(a, b, [(1, 0)])

    def test_covariant_tensors_are_rejected(self, rng, half):
        t = random_invariant([half] * 3, root=1, rng=rng)
        with pytest.raises(InvalidArgError):
            contract(t, t, [(0, 0)])

    def test_repeated_legs(self, rng):
        a = random_tensor(rng, "su2", (OUT, OUT, IN))
        with pytest.raises(InvalidArgError):
            contract(a, dagger(a), [(0, 0), (0, 1)])


# ── adjoint, arithmetic and serialization ──────────────────


class TestArithmetic:
    @pytest.mark.parametrize("system_name", ["su2", "u1"])
    def test_dagger_conjugates_dense(self, rng, system_name):
        spaces = random_tensor(rng, system_name, (OUT, IN, IN_R)).spaces
        t = random_invariant(spaces, (OUT, IN, IN_R), rng=rng, dtype=complex)
        d = dagger(t)
        assert d.directions == (IN, OUT, OUT)
        assert d.spaces == t.spaces
        np.testing.assert_allclose(d.to_dense(), t.to_dense().conj(), atol=TOL)

    def test_identity(self):
        v = su2(STORAGE_SPACE)
        eye = identity(v)
        assert eye.directions == (OUT, IN)
        np.testing.assert_allclose(eye.to_dense(), np.eye(v.dim), atol=TOL)

    def test_add_and_scale(self, rng):
        t = random_tensor(rng, "su2", all_out(3))
        assert norm(add(t, scale(t, -1.0))) == pytest.approx(0.0, abs=TOL)
        np.testing.assert_allclose(add(t, t).to_dense(), scale(t, 2.0).to_dense(), atol=TOL)

    def test_add_needs_same_structure(self, rng):
        t = random_tensor(rng, "su2", all_out(3))
        with pytest.raises(StructureMismatchError):
            add(t, reverse(t, {0: IN}))

    def test_norm_and_inner_match_dense(self, rng, system_name):
        a = random_tensor(rng, system_name, (OUT, OUT, IN))
        b = a.random_like(rng)
        assert norm(a) == pytest.approx(np.linalg.norm(a.to_dense()), rel=1e-9)
        assert inner(a, b) == pytest.approx(np.vdot(a.to_dense(), b.to_dense()), rel=1e-9, abs=1e-9)

    def test_norm_of_covariant_tensor(self, rng, half):
        t = random_invariant([half] * 3, root=3, rng=rng)
        assert norm(t) == pytest.approx(np.linalg.norm(t.to_dense()), rel=1e-9)


class TestJson:
    def test_round_trip(self, rng, system_name):
        t = random_tensor(rng, system_name, (OUT, IN, IN_R))
        back = from_json(t.to_json())
        assert back.same_structure(t)
        _same_blocks(back, t)

    def test_complex_blocks(self, rng, half):
        t = random_invariant([half, half], rng=rng, dtype=complex)
        assert np.iscomplexobj(next(iter(from_json(t.to_json()).blocks.values())))

    def test_save_and_load(self, rng, tmp_path):
        t = random_tensor(rng, "su2", (OUT, OUT, IN))
        file = tmp_path / "t.json"
        save(t, file)
        assert max_abs(load(file).to_dense() - t.to_dense()) < TOL

    def test_unknown_format_version(self, rng):
        data = random_tensor(rng, "su2", all_out(2)).to_json()
        data["format_version"] = 99
        with pytest.raises(InvalidArgError, match="format version"):
            from_json(data)
