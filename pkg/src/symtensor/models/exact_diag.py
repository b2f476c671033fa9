"""Exact diagonalization of the spin-one-half Heisenberg chain.

The blocked solver never forms a product-basis vector. States of total spin
``J`` are the sector paths of the left comb over ``L`` spins; each bond
``h(i, i+1)`` is diagonal on a tree that fuses ``i`` and ``i+1`` first, with
eigenvalue ``-3`` on the singlet and ``+1`` on the triplet. Recoupling maps
carry the comb to that tree and back, so ``H_J = Σ_bond Γᵀ D Γ``.

The dense solver builds the same Hamiltonian with :mod:`scipy.sparse` and
serves as the reference.
"""

from __future__ import annotations

from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from symtensor._observability import logger
from symtensor._types import Direction
from symtensor.exception import InvalidArgError
from symtensor.fusion_trees import enumerate_paths, left_comb, paired_comb, tree_node_index
from symtensor.gamma_engine import cached_gamma
from symtensor.models.heisenberg import spin_half
from symtensor.rep_spaces import check_size
from symtensor.types import SectorSpectrum

if TYPE_CHECKING:
    from symtensor.gamma_engine import GammaCache, GammaMap

__all__ = [
    "chain_bonds",
    "sector_charges",
    "blocked_hamiltonian",
    "exact_diag",
    "dense_hamiltonian",
    "dense_spectrum",
    "dense_ground_energy",
    "dense_sector_spectra",
    "m_resolved_spectra",
    "ground_sector",
]

PAIR_ENERGY = {0: -3.0, 2: 1.0}
"""Eigenvalue of ``4 S_i·S_j`` by twice the pair spin."""

DENSE_FULL_MAX_SITES = 10


def chain_bonds(length: int, periodic: bool = True) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds; a two-site ring has a single bond."""
    if length < 2:
        raise InvalidArgError(f"a chain needs at least two spins, got {length}")
    bonds = [(i, i + 1) for i in range(length - 1)]
    if periodic and length > 2:
        bonds.append((length - 1, 0))
    return bonds


def sector_charges(length: int) -> list[int]:
    """Twice the total spins reachable by ``length`` spins one half."""
    return list(range(length % 2, length + 1, 2))


def _check_sectors(length: int, sectors: Iterable[int] | None) -> list[int]:
    allowed = sector_charges(length)
    if sectors is None:
        return allowed
    chosen = sorted({int(c) for c in sectors})
    bad = [c for c in chosen if c not in allowed]
    if bad:
        raise InvalidArgError(f"sectors {bad} are not reachable by {length} spins; choose from {allowed}")
    return chosen


def _bond_map(length: int, bond: tuple[int, int], twice_j: int, cache: GammaCache | None) -> tuple[GammaMap, int]:
    spaces = [spin_half()] * length
    directions = (Direction.OUT,) * length
    i, j = bond
    if j == i + 1:
        tree = paired_comb(length, i)
        gamma = cached_gamma(left_comb(length), range(length), tree, spaces, directions, twice_j, cache)
        return gamma, tree_node_index(tree, (i, j))
    # wrap-around bond: bring spin i to the front, next to spin j = 0
    perm = [i, *range(i)]
    tree = paired_comb(length, 0)
    gamma = cached_gamma(left_comb(length), perm, tree, spaces, directions, twice_j, cache)
    return gamma, tree_node_index(tree, (0, 1))


def blocked_hamiltonian(
    length: int, twice_j: int, periodic: bool = True, cache: GammaCache | None = None
) -> np.ndarray:
    """Hamiltonian of the total-spin sector ``twice_j`` on the coupled (sector path) basis."""
    check_size(2**length)
    _check_sectors(length, [twice_j])
    paths = enumerate_paths(left_comb(length), [spin_half()] * length, twice_j)
    index = {p: n for n, p in enumerate(paths)}
    h = np.zeros((len(paths), len(paths)))
    for bond in chain_bonds(length, periodic):
        gamma, node = _bond_map(length, bond, twice_j, cache)
        outs, ins, g = gamma.matrix()
        full = np.zeros((len(outs), len(paths)))
        full[:, [index[p] for p in ins]] = g
        d = np.array([PAIR_ENERGY[q.internal[node]] for q in outs])
        h += full.T @ (d[:, None] * full)
    return h


def exact_diag(
    length: int,
    periodic: bool = True,
    sectors: Iterable[int] | None = None,
    method: str = "blocked",
    cache: GammaCache | None = None,
    threads: int = 1,
) -> list[SectorSpectrum]:
    """Spectrum of the Heisenberg chain per total-spin sector.

    Args:
        length: Number of spins one half.
        periodic: Close the chain into a ring.
        sectors: Twice the total spins to solve; all by default.
        method: ``"blocked"`` (coupled basis) or ``"dense"`` (product basis,
            highest-weight projection).
        threads: Sectors solved concurrently (blocked method only).

    Returns:
        One :class:`SectorSpectrum` per sector with energies ascending and
        multiplicity ``2J+1``.
    """
    chosen = _check_sectors(length, sectors)
    if method == "dense":
        return dense_sector_spectra(length, periodic, chosen)
    if method != "blocked":
        raise InvalidArgError(f"unknown method {method!r}; expected 'blocked' or 'dense'")

    def solve(twice_j: int) -> SectorSpectrum:
        h = blocked_hamiltonian(length, twice_j, periodic, cache)
        energies = np.linalg.eigvalsh(h)
        logger.info("ED L=%d 2J=%d: %d states, lowest %.10f", length, twice_j, len(energies), energies[0])
        return SectorSpectrum(twice_j, energies, twice_j + 1)

    if threads <= 1 or len(chosen) == 1:
        return [solve(c) for c in chosen]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(solve, chosen))


def ground_sector(spectra: Iterable[SectorSpectrum]) -> tuple[int, float]:
    """``(twice_j, energy)`` of the lowest level across sectors (smaller spin wins ties)."""
    best = min(((float(s.energies[0]), s.charge) for s in spectra if len(s.energies)), default=None)
    if best is None:
        raise InvalidArgError("no energies given")
    return best[1], best[0]


# ---------------------------------------------------------------------------
# Product-basis reference
# ---------------------------------------------------------------------------

_SP = scipy.sparse.csr_array(np.array([[0.0, 0.0], [1.0, 0.0]]))  # ascending m: |down>, |up>
_SZ = scipy.sparse.csr_array(np.diag([-0.5, 0.5]))


def _site_op(op: scipy.sparse.csr_array, site: int, length: int) -> scipy.sparse.csr_array:
    left = scipy.sparse.identity(2**site, format="csr")
    right = scipy.sparse.identity(2 ** (length - site - 1), format="csr")
    return scipy.sparse.kron(scipy.sparse.kron(left, op, format="csr"), right, format="csr")


def dense_hamiltonian(length: int, periodic: bool = True) -> scipy.sparse.csr_array:
    """Sparse ``Σ 4 S_i·S_j`` on the ``2**length`` product basis."""
    check_size(2**length)
    dim = 2**length
    h = scipy.sparse.csr_array((dim, dim))
    sp = [_site_op(_SP, s, length) for s in range(length)]
    sz = [_site_op(_SZ, s, length) for s in range(length)]
    for i, j in chain_bonds(length, periodic):
        h = h + 2 * (sp[i] @ sp[j].T + sp[i].T @ sp[j]) + 4 * (sz[i] @ sz[j])
    return scipy.sparse.csr_array(h)


def dense_spectrum(length: int, periodic: bool = True) -> np.ndarray:
    """Every eigenvalue, ascending, by full diagonalization."""
    if length > DENSE_FULL_MAX_SITES:
        raise InvalidArgError(f"full dense spectrum is limited to {DENSE_FULL_MAX_SITES} spins")
    return np.linalg.eigvalsh(dense_hamiltonian(length, periodic).toarray())


def dense_ground_energy(length: int, periodic: bool = True, count: int = 1) -> np.ndarray:
    """Lowest ``count`` eigenvalues by sparse Lanczos."""
    h = dense_hamiltonian(length, periodic)
    if h.shape[0] <= max(2 * count + 2, 16):
        return np.linalg.eigvalsh(h.toarray())[:count]
    values = scipy.sparse.linalg.eigsh(h, k=count, which="SA", return_eigenvectors=False)
    return np.sort(values)


def _up_counts(length: int) -> np.ndarray:
    return np.bitwise_count(np.arange(2**length, dtype=np.uint64))


def m_resolved_spectra(length: int, periodic: bool = True) -> dict[int, np.ndarray]:
    """Eigenvalues per twice ``m_J`` of the total ``S_z``; each multiplet shows up once per ``m_J``."""
    h = dense_hamiltonian(length, periodic)
    ups = _up_counts(length)
    out = {}
    for n_up in range(length + 1):
        idx = np.flatnonzero(ups == n_up)
        block = h[idx][:, idx].toarray()
        out[2 * n_up - length] = np.linalg.eigvalsh(block)
    return out


def dense_sector_spectra(
    length: int, periodic: bool = True, sectors: Iterable[int] | None = None
) -> list[SectorSpectrum]:
    """Total-spin sectors from the product basis via highest-weight states.

    In the ``m_J = J`` subspace the states annihilated by the total raising
    operator span exactly the spin-``J`` multiplets, one state each.
    """
    chosen = _check_sectors(length, sectors)
    h = dense_hamiltonian(length, periodic)
    raising = _site_op(_SP, 0, length)
    for s in range(1, length):
        raising = raising + _site_op(_SP, s, length)
    ups = _up_counts(length)
    out = []
    for twice_j in chosen:
        n_up = (length + twice_j) // 2
        idx = np.flatnonzero(ups == n_up)
        block = h[idx][:, idx].toarray()
        if n_up < length:
            above = np.flatnonzero(ups == n_up + 1)
            basis = scipy.linalg.null_space(raising[above][:, idx].toarray())
        else:
            basis = np.eye(len(idx))
        energies = np.linalg.eigvalsh(basis.T @ block @ basis)
        out.append(SectorSpectrum(twice_j, energies, twice_j + 1))
    return out
