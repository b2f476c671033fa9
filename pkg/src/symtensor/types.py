"""Typed result structures returned by symtensor operations."""

from __future__ import annotations

from typing import TYPE_CHECKING, NamedTuple, TypedDict

if TYPE_CHECKING:
    import numpy as np

    from symtensor.block_linalg import BlockDiagMatrix
    from symtensor.rep_spaces import RepSpace

# ---------------------------------------------------------------------------
# NamedTuple types (return values)
# ---------------------------------------------------------------------------


class SvdResult(NamedTuple):
    """Blockwise SVD: ``T = U @ S @ V``."""

    u: BlockDiagMatrix
    s: BlockDiagMatrix
    v: BlockDiagMatrix


class TruncationResult(NamedTuple):
    """Truncated SVD factors plus the kept bond space."""

    u: BlockDiagMatrix
    s: BlockDiagMatrix
    v: BlockDiagMatrix
    kept: RepSpace
    discarded_weight: float


class EigResult(NamedTuple):
    """Blockwise eigendecomposition; values ascend within each charge."""

    values: dict[int, np.ndarray]
    vectors: BlockDiagMatrix


class SectorSpectrum(NamedTuple):
    """Energies of one total-charge sector, each with multiplicity ``multiplicity``."""

    charge: int
    energies: np.ndarray
    multiplicity: int


class SweepRecord(NamedTuple):
    """One MERA sweep: energy, isometry residuals and invariance residual."""

    sweep: int
    energy: float
    isometry_residual: float
    invariance_residual: float
    spin_networks: int


class MeraResult(NamedTuple):
    """Outcome of :func:`symtensor.models.mera_optimize`."""

    energies: list[float]
    sweeps: list[SweepRecord]
    multiplet_energies: np.ndarray


# ---------------------------------------------------------------------------
# TypedDict policies (input parameters)
# ---------------------------------------------------------------------------


class TensorPolicy(TypedDict, total=False):
    """Policy for dense conversions.

    Keys:
        tolerance: Relative residual above which a dense tensor is rejected.
        check_invariance: Skip the residual check when ``False``.
    """

    tolerance: float
    check_invariance: bool
