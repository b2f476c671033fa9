"""Heisenberg exchange gates."""

import numpy as np
import pytest

from symtensor.exception import ChargeSystemMismatchError
from symtensor.models import (
    GATE_DIRECTIONS,
    blocked_chain_dense,
    blocked_chain_gate,
    gate_spectrum,
    heisenberg_dense,
    heisenberg_gate,
)
from tests import TOL
from tests.helpers import u1


def _multiplets(spectrum, system):
    return np.sort(np.concatenate([np.repeat(v, system.dim(c)) for c, v in spectrum.items()]))


class TestSpinHalfGate:
    def test_singlet_and_triplet(self):
        spectrum = gate_spectrum(heisenberg_gate())
        assert sorted(spectrum) == [0, 2]
        np.testing.assert_allclose(spectrum[0], [-3.0], atol=TOL)
        np.testing.assert_allclose(spectrum[2], [1.0], atol=TOL)

    def test_dense_form(self, half):
        h = heisenberg_dense(half)
        np.testing.assert_allclose(np.linalg.eigvalsh(h), [-3.0, 1.0, 1.0, 1.0], atol=TOL)
        np.testing.assert_allclose(heisenberg_gate().to_dense().reshape(4, 4), h, atol=TOL)

    def test_leg_directions(self):
        assert heisenberg_gate().directions == GATE_DIRECTIONS

    def test_needs_su2(self):
        with pytest.raises(ChargeSystemMismatchError):
            heisenberg_dense(u1({0: 1, 1: 1}))


class TestBlockedGates:
    def test_exchange_between_coupled_sites(self, site):
        gate = heisenberg_gate(site)
        expected = np.linalg.eigvalsh(heisenberg_dense(site))
        np.testing.assert_allclose(_multiplets(gate_spectrum(gate), site.system), expected, atol=1e-9)

    def test_blocked_chain_term(self, site):
        gate = blocked_chain_gate()
        assert gate.spaces == (site,) * 4
        np.testing.assert_allclose(
            _multiplets(gate_spectrum(gate), site.system), np.linalg.eigvalsh(blocked_chain_dense()), atol=1e-9
        )

    def test_blocked_chain_term_is_symmetric(self):
        h = blocked_chain_dense()
        np.testing.assert_allclose(h, h.T, atol=TOL)
        # the open four-spin chain with half-weight end bonds has trace zero
        assert np.trace(h) == pytest.approx(0.0, abs=TOL)
