"""Ternary MERA: construction, energy evaluation and variational sweeps."""

import numpy as np
import pytest

from symtensor.exception import FusionRuleError, InvalidArgError
from symtensor.gamma_engine import GammaCache
from symtensor.models import (
    MeraState,
    ascend,
    blocked_chain_gate,
    descend,
    exact_diag,
    heisenberg_gate,
    isometry_residual,
    layer_energy,
    mera_build,
    mera_energy,
    mera_optimize,
    projection_energies,
    top_density,
)
from symtensor.models.mera import OPERATOR_TREE, T_GROUPS, U_GROUPS, W_GROUPS
from symtensor.network import contract_network
from symtensor.sym_tensor import new_tree, tensors_residual
from tests.helpers import su2

TRACE_LABELS = [[3, 4, 1, 2], [1, 2, 3, 4]]


@pytest.fixture
def state(rng):
    return mera_build(1, rng=rng)


@pytest.fixture
def gate():
    return new_tree(blocked_chain_gate(), OPERATOR_TREE)


class TestBuild:
    def test_one_layer(self, state, site):
        assert state.levels == 1
        assert state.num_sites == 6
        assert state.bond_dimensions == [4]
        assert state.site == site
        assert len(state.tensors()) == 3

    def test_tensors_are_isometries(self, state):
        layer = state.layers[0]
        assert isometry_residual(layer.u, U_GROUPS) < 1e-10
        assert isometry_residual(layer.w, W_GROUPS) < 1e-10
        assert isometry_residual(state.top, T_GROUPS) < 1e-10

    def test_tensors_are_invariant(self, state):
        assert tensors_residual(state.tensors()) < 1e-9

    def test_two_layers(self, rng):
        coarse = su2({0: 2, 2: 1})
        state = mera_build(2, [coarse, coarse], rng=rng)
        assert state.num_sites == 18
        assert state.bond_dimensions == [5, 5]

    def test_top_multiplets(self, rng):
        state = mera_build(1, top_charge=2, chi_top=2, rng=rng)
        assert state.top.spaces[2] == su2({2: 2})
        assert isometry_residual(state.top, T_GROUPS) < 1e-10

    def test_oversized_assignment_warns(self, rng):
        # three coupled sites hold only five singlets
        with pytest.warns(RuntimeWarning, match="needs 6 states"):
            state = mera_build(1, [su2({0: 6})], rng=rng)
        assert isometry_residual(state.layers[0].w, W_GROUPS) == 1.0

    @pytest.mark.parametrize(
        "kwargs",
        [{"levels": 0}, {"chi_top": 0}, {"levels": 2, "assignments": [su2({0: 1, 2: 1})]}],
    )
    def test_invalid(self, rng, kwargs):
        with pytest.raises(InvalidArgError):
            mera_build(rng=rng, **kwargs)

    def test_unreachable_top_charge(self, rng):
        with pytest.raises(FusionRuleError, match="top charge 1"):
            mera_build(1, top_charge=1, rng=rng)


# ── energies ───────────────────────────────────────────────


class TestEnergy:
    def test_matches_projection(self, state):
        assert mera_energy(state) == pytest.approx(float(np.sum(projection_energies(state))), rel=1e-9)

    def test_multiplet_counted_once(self, rng):
        state = mera_build(1, top_charge=2, chi_top=1, rng=rng)
        per_state = projection_energies(state)
        assert len(per_state) == 3
        np.testing.assert_allclose(per_state, per_state[0], atol=1e-9)
        assert mera_energy(state) == pytest.approx(float(per_state[0]), rel=1e-9)

    def test_layer_energy_is_a_top_trace(self, state, gate):
        expected = mera_energy(state)
        assert layer_energy(state.layers[0], gate, top_density(state.top)) == pytest.approx(expected, rel=1e-9)

    def test_ascend_and_descend_are_adjoint(self, state, gate):
        layer = state.layers[0]
        rho = top_density(state.top)
        up = contract_network([rho, ascend(layer, gate)], TRACE_LABELS)
        down = contract_network([descend(layer, rho), gate], TRACE_LABELS)
        assert up == pytest.approx(down, rel=1e-9)

    @pytest.mark.slow
    def test_variational_bound(self, state):
        ground = exact_diag(2 * state.num_sites, sectors=[0])[0].energies[0]
        assert mera_energy(state) >= ground - 1e-9

    def test_gate_must_act_on_sites(self, state):
        with pytest.raises(InvalidArgError):
            mera_energy(state, heisenberg_gate())


# ── optimization ───────────────────────────────────────────


class TestOptimize:
    @pytest.fixture(scope="class")
    def optimized(self):
        records = []
        state, result = mera_optimize(
            mera_build(1, rng=np.random.default_rng(7)), sweeps=4, cache=GammaCache(), callback=records.append
        )
        return state, result, records

    def test_trace_shape(self, optimized):
        _, result, records = optimized
        assert len(result.energies) == 4
        assert [r.sweep for r in result.sweeps] == [1, 2, 3, 4]
        assert records == result.sweeps

    def test_energy_does_not_rise(self, optimized):
        _, result, _ = optimized
        for before, after in zip(result.energies, result.energies[1:]):
            assert after <= before + 1e-8 * max(1.0, abs(before))

    def test_last_energy_is_the_kept_multiplets(self, optimized):
        state, result, _ = optimized
        assert result.energies[-1] == pytest.approx(float(np.sum(result.multiplet_energies)), rel=1e-12)
        assert mera_energy(state) == pytest.approx(result.energies[-1], rel=1e-8, abs=1e-8)

    def test_tensors_stay_isometric_and_invariant(self, optimized):
        _, result, _ = optimized
        for record in result.sweeps:
            assert record.isometry_residual < 1e-8
            assert record.invariance_residual < 1e-8

    def test_maps_are_built_in_the_first_sweep_only(self, optimized):
        _, result, _ = optimized
        assert result.sweeps[0].spin_networks > 0
        assert [r.spin_networks for r in result.sweeps[1:]] == [0, 0, 0]

    def test_persisted_maps_are_not_rebuilt(self, tmp_path):
        start = mera_build(1, rng=np.random.default_rng(3))
        _, first = mera_optimize(start, sweeps=1, cache=GammaCache(tmp_path))
        assert first.sweeps[0].spin_networks > 0
        fresh = GammaCache(tmp_path)
        _, again = mera_optimize(start, sweeps=1, cache=fresh)
        assert again.sweeps[0].spin_networks == 0
        assert fresh.stats()["disk_loads"] > 0
        assert again.energies == pytest.approx(first.energies, rel=1e-10)

    @pytest.mark.slow
    def test_bounded_by_exact_ground_state(self, optimized):
        state, result, _ = optimized
        ground = exact_diag(2 * state.num_sites, sectors=[0])[0].energies[0]
        assert result.energies[-1] >= ground - 1e-9

    @pytest.mark.slow
    def test_close_to_the_exact_ground_state(self):
        state, result = mera_optimize(mera_build(1, rng=np.random.default_rng(7)), sweeps=150)
        ground = exact_diag(2 * state.num_sites, sectors=[0])[0].energies[0]
        energies = np.asarray(result.energies)
        assert np.all(np.diff(energies) <= 1e-8 * np.maximum(1.0, np.abs(energies[:-1])))
        assert energies[-1] >= ground - 1e-9
        assert abs(energies[-1] - ground) / abs(ground) <= 0.02


class TestSerialization:
    def test_json_round_trip(self, state):
        back = MeraState.from_json(state.to_json())
        assert back.spaces == state.spaces
        assert mera_energy(back) == pytest.approx(mera_energy(state), rel=1e-12)

    def test_save_and_load(self, state, tmp_path):
        file = tmp_path / "mera.json"
        state.save(file)
        assert MeraState.load(file).top_charge == state.top_charge

    def test_unknown_format_version(self, state):
        data = state.to_json()
        data["format_version"] = 0
        with pytest.raises(InvalidArgError):
            MeraState.from_json(data)
