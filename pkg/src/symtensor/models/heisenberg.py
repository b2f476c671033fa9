"""Heisenberg exchange as invariant two-site gates."""

from __future__ import annotations

import numpy as np

from symtensor._types import Direction
from symtensor.block_linalg import eig, tree_to_blockdiag
from symtensor.charge_systems import su2_system
from symtensor.exception import ChargeSystemMismatchError
from symtensor.rep_spaces import RepSpace, dense_fusion_unitary, fuse_spaces, space_generators
from symtensor.sym_tensor import SymTensor, from_dense, fuse

__all__ = [
    "spin_half",
    "two_spin_site",
    "heisenberg_dense",
    "heisenberg_gate",
    "blocked_chain_dense",
    "blocked_chain_gate",
    "gate_spectrum",
    "GATE_DIRECTIONS",
]

GATE_DIRECTIONS = (Direction.OUT, Direction.OUT, Direction.IN, Direction.IN)
"""Leg order of every gate: two outputs above, two inputs below."""

_GATE_POLICY = {"tolerance": 1e-12}


def spin_half() -> RepSpace:
    return RepSpace.from_dict(su2_system(), {1: 1})


def two_spin_site() -> RepSpace:
    """A site holding two spins one half: one singlet and one triplet."""
    return RepSpace.from_dict(su2_system(), {0: 1, 2: 1})


def heisenberg_dense(site: RepSpace) -> np.ndarray:
    """``4 (Jx⊗Jx + Jy⊗Jy + Jz⊗Jz)`` as a ``(d*d, d*d)`` matrix."""
    if site.system.name != "su2":
        raise ChargeSystemMismatchError(f"the Heisenberg gate needs an SU(2) site, got {site.system.name}")
    gens = space_generators(site)
    h = 4 * sum(np.kron(g, g) for g in gens)
    return np.ascontiguousarray(h.real)


def heisenberg_gate(site: RepSpace | None = None) -> SymTensor:
    """Exchange gate ``h[o1, o2, i1, i2]`` on two copies of ``site`` (spin one half by default).

    Raises:
        ChargeSystemMismatchError: ``site`` is not an SU(2) space.
    """
    site = site or spin_half()
    d = site.dim
    dense = heisenberg_dense(site).reshape(d, d, d, d)
    return from_dense(dense, [site] * 4, GATE_DIRECTIONS, policy=_GATE_POLICY)


def blocked_chain_dense() -> np.ndarray:
    """Two-site term of a spin-one-half chain blocked in pairs, on the coupled site basis.

    The inter-pair bond enters with weight one and each intra-pair bond with
    one half, so summing the term over all neighbouring sites of a ring
    gives the full chain Hamiltonian.
    """
    half = spin_half()
    h = heisenberg_dense(half)
    eye = np.eye(2)
    chain = 0.5 * np.kron(np.kron(h, eye), eye) + np.kron(np.kron(eye, h), eye) + 0.5 * np.kron(np.kron(eye, eye), h)
    _, fmap = fuse_spaces(half, half)
    v = dense_fusion_unitary(fmap).reshape(4, 4)
    vv = np.kron(v, v)
    return vv.T @ chain @ vv


def blocked_chain_gate() -> SymTensor:
    site = two_spin_site()
    dense = blocked_chain_dense().reshape(4, 4, 4, 4)
    return from_dense(dense, [site] * 4, GATE_DIRECTIONS, policy=_GATE_POLICY)


def gate_spectrum(gate: SymTensor) -> dict[int, np.ndarray]:
    """Eigenvalues of a two-site gate per coupled charge of the pair, ascending."""
    matrix = tree_to_blockdiag(fuse(gate, [2, 2]))
    return eig(matrix).values
