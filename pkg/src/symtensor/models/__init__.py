"""Physics workloads built on the symmetric engine."""

from symtensor.models.exact_diag import (
    blocked_hamiltonian,
    chain_bonds,
    dense_ground_energy,
    dense_hamiltonian,
    dense_sector_spectra,
    dense_spectrum,
    exact_diag,
    ground_sector,
    m_resolved_spectra,
    sector_charges,
)
from symtensor.models.heisenberg import (
    GATE_DIRECTIONS,
    blocked_chain_dense,
    blocked_chain_gate,
    gate_spectrum,
    heisenberg_dense,
    heisenberg_gate,
    spin_half,
    two_spin_site,
)
from symtensor.models.mera import (
    MeraLayer,
    MeraState,
    ascend,
    bond_dimension,
    descend,
    isometry_residual,
    layer_energy,
    mera_build,
    mera_energy,
    mera_optimize,
    projection_energies,
    top_density,
)

__all__ = [
    # Gates
    "GATE_DIRECTIONS",
    "spin_half",
    "two_spin_site",
    "heisenberg_dense",
    "heisenberg_gate",
    "blocked_chain_dense",
    "blocked_chain_gate",
    "gate_spectrum",
    # Exact diagonalization
    "chain_bonds",
    "sector_charges",
    "blocked_hamiltonian",
    "exact_diag",
    "ground_sector",
    "dense_hamiltonian",
    "dense_spectrum",
    "dense_ground_energy",
    "dense_sector_spectra",
    "m_resolved_spectra",
    # MERA
    "MeraLayer",
    "MeraState",
    "mera_build",
    "mera_optimize",
    "mera_energy",
    "ascend",
    "descend",
    "layer_energy",
    "top_density",
    "projection_energies",
    "isometry_residual",
    "bond_dimension",
]
