"""Charge systems: fusion rules, duals, recoupling and swap data."""

import pickle

import numpy as np
import pytest

import symtensor
from symtensor.charge_systems import su2_system, system_by_name, u1_system, z2_fermion_system
from symtensor.exception import InvalidArgError


class TestLookup:
    @pytest.mark.parametrize("name", ["su2", "u1", "z2f"])
    def test_by_name_round_trip(self, name):
        assert system_by_name(name).name == name

    def test_unknown_name(self):
        with pytest.raises(InvalidArgError, match="unknown charge system"):
            system_by_name("su3")

    def test_singletons_compare_by_name(self):
        assert su2_system() == system_by_name("su2")
        assert su2_system() != u1_system()
        assert len({su2_system(), system_by_name("su2"), u1_system()}) == 2

    def test_pickle_keeps_identity(self, system_name):
        system = system_by_name(system_name)
        assert pickle.loads(pickle.dumps(system)) is system

    def test_names_are_exported(self):
        assert symtensor.SYSTEM_NAMES == ("su2", "u1", "z2f")


# ── SU(2) ──────────────────────────────────────────────────


class TestSU2:
    def test_fusion_rule(self):
        s = su2_system()
        assert s.fuse(1, 1) == (0, 2)
        assert s.fuse(2, 3) == (1, 3, 5)
        assert s.fuse(0, 4) == (4,)

    def test_dims_and_duals(self):
        s = su2_system()
        assert [s.dim(c) for c in range(4)] == [1, 2, 3, 4]
        assert all(s.dual(c) == c for c in range(6))

    def test_validity(self):
        s = su2_system()
        assert s.valid(3)
        assert not s.valid(-1)

    def test_data_delegates_to_kernels(self):
        s = su2_system()
        assert s.f_coeff(1, 1, 1, 1, 0, 0) == pytest.approx(-0.5)
        assert s.r_coeff(1, 1, 0) == -1.0
        assert s.cup_transpose_phase(1) == -1.0
        assert s.fusion_tensor(1, 1, 2).shape == (2, 2, 3)

    def test_not_abelian(self):
        with pytest.raises(InvalidArgError):
            su2_system().combine(np.zeros(2), np.zeros(2))


# ── Abelian systems ────────────────────────────────────────


class TestU1:
    def test_fusion_and_duals(self):
        s = u1_system()
        assert s.fuse(2, -3) == (-1,)
        assert s.dual(4) == -4
        assert s.dim(7) == 1
        assert s.r_coeff(1, 1, 2) == 1.0

    def test_recoupling_is_one_when_allowed(self):
        s = u1_system()
        assert s.f_coeff(1, 1, 1, 3, 2, 2) == 1.0
        assert s.f_coeff(1, 1, 1, 3, 0, 2) == 0.0

    def test_combine(self):
        np.testing.assert_array_equal(u1_system().combine(np.array([0, 1]), np.array([-1, 1])), [[-1, 1], [0, 2]])


class TestZ2Fermion:
    def test_parity_fusion(self):
        s = z2_fermion_system()
        assert s.fuse(1, 1) == (0,)
        assert s.fuse(0, 1) == (1,)
        assert s.dual(1) == 1
        assert not s.valid(2)

    def test_graded_swap(self):
        s = z2_fermion_system()
        assert s.graded
        assert s.r_coeff(1, 1, 0) == -1.0
        assert s.r_coeff(0, 1, 1) == 1.0

    def test_combine(self):
        np.testing.assert_array_equal(z2_fermion_system().combine(np.array([0, 1]), np.array([1])), [[1], [0]])
