"""Invariant matrices as one degeneracy block per charge.

By Schur's lemma an invariant operator between two spaces is
``⊕_c T_c ⊗ 1_{dim(c)}``; :class:`BlockDiagMatrix` stores the ``T_c``.
Multiplication, SVD, QR and eigendecomposition act block by block, and the
flop counters record exactly the block work done.

A rank-2 tree tensor stores ``B_c`` against the normalized singlet node, so
``T_c = s_c · B_c`` with ``s_c`` the trace of the bent node over ``dim(c)``.
For an ``(OUT, IN_R)`` pair ``s_c = 1/sqrt(dim c)``; writing the unnormalized
splitting-tensor data as ``T'_c = sqrt(dim c) · B_c`` this is the familiar
``T_c = T'_c / dim(c)``.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from symtensor._cache import Memo
from symtensor._observability import bump
from symtensor._types import Direction
from symtensor.exception import ChargeSystemMismatchError, InvalidArgError, StructureMismatchError
from symtensor.fusion_trees import SectorPath, left_comb, structural_tensor
from symtensor.gamma_engine import bend_matrix
from symtensor.rep_spaces import RepSpace, check_size
from symtensor.sym_tensor import SymTensor, release_bends
from symtensor.types import EigResult, SvdResult, TruncationResult

if TYPE_CHECKING:
    from symtensor.charge_systems import ChargeSystem

__all__ = [
    "BlockDiagMatrix",
    "matmul",
    "matmul_flops",
    "dense_matmul_flops",
    "svd",
    "truncate",
    "eig",
    "qr",
    "polar_isometry",
    "identity",
    "add",
    "scale",
    "tree_to_blockdiag",
    "blockdiag_to_tree",
]


@dataclass(frozen=True, eq=False)
class BlockDiagMatrix:
    """Degeneracy blocks ``T_c`` of an invariant map ``cols -> rows``.

    Charges missing from ``blocks`` are zero.
    """

    rows: RepSpace
    cols: RepSpace
    blocks: Mapping[int, np.ndarray]

    def __post_init__(self) -> None:
        if self.rows.system != self.cols.system:
            raise ChargeSystemMismatchError("row and column spaces from different charge systems")
        for c, block in self.blocks.items():
            if c not in self.rows or c not in self.cols:
                raise StructureMismatchError(f"charge {c} is not present in both {self.rows!r} and {self.cols!r}")
            expected = (self.rows.degeneracy(c), self.cols.degeneracy(c))
            if block.shape != expected:
                raise StructureMismatchError(f"block {c} has shape {block.shape}, expected {expected}")

    @property
    def system(self) -> ChargeSystem:
        return self.rows.system

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.dim, self.cols.dim

    @property
    def num_coefficients(self) -> int:
        return sum(b.size for b in self.blocks.values())

    def dense(self) -> np.ndarray:
        """Dense realization ``⊕_c T_c ⊗ 1_{dim(c)}``."""
        check_size(self.rows.dim * self.cols.dim)
        dtype = np.result_type(float, *{b.dtype for b in self.blocks.values()})
        out = np.zeros(self.shape, dtype=dtype)
        for c, block in self.blocks.items():
            out[self.rows.sector_slice(c), self.cols.sector_slice(c)] = np.kron(block, np.eye(self.system.dim(c)))
        return out

    @property
    def H(self) -> BlockDiagMatrix:
        return BlockDiagMatrix(self.cols, self.rows, {c: b.conj().T for c, b in self.blocks.items()})

    def block(self, c: int) -> np.ndarray:
        found = self.blocks.get(c)
        if found is not None:
            return found
        return np.zeros((self.rows.degeneracy(c), self.cols.degeneracy(c)))

    def __matmul__(self, other: BlockDiagMatrix) -> BlockDiagMatrix:
        return matmul(self, other)


# ---------------------------------------------------------------------------
# Products and flop accounting
# ---------------------------------------------------------------------------


def matmul_flops(m: BlockDiagMatrix, n: BlockDiagMatrix) -> int:
    """Multiply-adds of the blockwise product: ``Σ_c rows_c · inner_c · cols_c``."""
    return sum(
        m.rows.degeneracy(c) * m.cols.degeneracy(c) * n.cols.degeneracy(c) for c in m.blocks if c in n.blocks
    )


def dense_matmul_flops(m: BlockDiagMatrix, n: BlockDiagMatrix) -> int:
    """Multiply-adds of multiplying the dense realizations."""
    return m.rows.dim * m.cols.dim * n.cols.dim


def matmul(m: BlockDiagMatrix, n: BlockDiagMatrix) -> BlockDiagMatrix:
    if m.cols != n.rows:
        raise StructureMismatchError(f"inner spaces differ: {m.cols!r} vs {n.rows!r}")
    blocks = {}
    for c, left in m.blocks.items():
        right = n.blocks.get(c)
        if right is None or c not in n.cols:
            continue
        blocks[c] = left @ right
    bump("block_flops", matmul_flops(m, n))
    return BlockDiagMatrix(m.rows, n.cols, blocks)


def add(m: BlockDiagMatrix, n: BlockDiagMatrix) -> BlockDiagMatrix:
    if m.rows != n.rows or m.cols != n.cols:
        raise StructureMismatchError("matrices act between different spaces")
    blocks = dict(m.blocks)
    for c, b in n.blocks.items():
        blocks[c] = blocks[c] + b if c in blocks else b
    return BlockDiagMatrix(m.rows, m.cols, blocks)


def scale(m: BlockDiagMatrix, factor: complex) -> BlockDiagMatrix:
    return BlockDiagMatrix(m.rows, m.cols, {c: factor * b for c, b in m.blocks.items()})


def identity(space: RepSpace) -> BlockDiagMatrix:
    return BlockDiagMatrix(space, space, {c: np.eye(d) for c, d in space.sectors})


# ---------------------------------------------------------------------------
# Decompositions
# ---------------------------------------------------------------------------


def _bond(system: ChargeSystem, dims: Mapping[int, int]) -> RepSpace:
    sectors = tuple((c, k) for c, k in sorted(dims.items()) if k > 0)
    if not sectors:
        raise InvalidArgError("decomposition of an all-zero matrix has no bond")
    return RepSpace(system, sectors)


def svd(m: BlockDiagMatrix) -> SvdResult:
    """Blockwise thin SVD ``M = U S V`` with singular values descending per charge."""
    factors = {c: np.linalg.svd(b, full_matrices=False) for c, b in m.blocks.items() if min(b.shape) > 0}
    bond = _bond(m.system, {c: s.shape[0] for c, (_, s, _) in factors.items()})
    bump("block_flops", sum(min(b.shape) ** 2 * max(b.shape) for b in m.blocks.values()))
    u = BlockDiagMatrix(m.rows, bond, {c: f[0] for c, f in factors.items()})
    s = BlockDiagMatrix(bond, bond, {c: np.diag(f[1]) for c, f in factors.items()})
    v = BlockDiagMatrix(bond, m.cols, {c: f[2] for c, f in factors.items()})
    return SvdResult(u, s, v)


def truncate(factors: SvdResult, chi: int) -> TruncationResult:
    """Keep the largest singular values, whole multiplets only, within ``chi`` dimensions.

    Values are visited in descending order (ties: larger charge first, then
    lower index). A value of charge ``c`` costs ``dim(c)``; values that no
    longer fit are skipped while smaller multiplets may still be taken.

    Raises:
        InvalidArgError: ``chi`` is not positive or not even one multiplet fits.
    """
    if chi <= 0:
        raise InvalidArgError(f"chi must be positive, got {chi}")
    u, s, v = factors
    system = s.system
    values = {c: np.diag(b) for c, b in s.blocks.items()}
    order = sorted(
        ((float(x), c, i) for c, vals in values.items() for i, x in enumerate(vals)),
        key=lambda item: (-item[0], -item[1], item[2]),
    )
    budget = chi
    kept: dict[int, int] = {}
    discarded = 0.0
    for value, c, _ in order:
        cost = system.dim(c)
        if cost <= budget:
            kept[c] = kept.get(c, 0) + 1
            budget -= cost
        else:
            discarded += cost * value**2
    if not kept:
        raise InvalidArgError(f"chi={chi} is smaller than every multiplet present")
    bond = _bond(system, kept)
    return TruncationResult(
        BlockDiagMatrix(u.rows, bond, {c: u.blocks[c][:, :k] for c, k in kept.items()}),
        BlockDiagMatrix(bond, bond, {c: s.blocks[c][:k, :k] for c, k in kept.items()}),
        BlockDiagMatrix(bond, v.cols, {c: v.blocks[c][:k, :] for c, k in kept.items()}),
        bond,
        discarded,
    )


def eig(m: BlockDiagMatrix, hermitian: bool = True, atol: float = 1e-10) -> EigResult:
    """Blockwise eigendecomposition of a hermitian matrix, eigenvalues ascending per charge.

    Raises:
        InvalidArgError: Rows and columns differ, a block is not hermitian,
            or ``hermitian`` is ``False``.
    """
    if m.rows != m.cols:
        raise InvalidArgError("eig needs a square matrix (equal row and column spaces)")
    if not hermitian:
        raise InvalidArgError("only hermitian eigendecomposition is supported")
    values: dict[int, np.ndarray] = {}
    vectors: dict[int, np.ndarray] = {}
    for c, block in m.blocks.items():
        if not np.allclose(block, block.conj().T, atol=atol):
            raise InvalidArgError(f"block {c} is not hermitian")
        values[c], vectors[c] = np.linalg.eigh(block)
        bump("block_flops", block.shape[0] ** 3)
    return EigResult(values, BlockDiagMatrix(m.rows, m.rows, vectors))


def qr(m: BlockDiagMatrix) -> tuple[BlockDiagMatrix, BlockDiagMatrix]:
    """Blockwise reduced QR; ``Q`` has orthonormal columns per charge."""
    factors = {c: np.linalg.qr(b) for c, b in m.blocks.items() if min(b.shape) > 0}
    bond = _bond(m.system, {c: q.shape[1] for c, (q, _) in factors.items()})
    q = BlockDiagMatrix(m.rows, bond, {c: f[0] for c, f in factors.items()})
    r = BlockDiagMatrix(bond, m.cols, {c: f[1] for c, f in factors.items()})
    return q, r


def polar_isometry(m: BlockDiagMatrix) -> BlockDiagMatrix:
    """``U V`` from the blockwise SVD: the isometry closest to ``m``.

    Charges present in only one of the spaces get no block, as do all-zero
    ones.
    """
    blocks = {}
    for c, b in m.blocks.items():
        if min(b.shape) == 0:
            continue
        u, _, vh = np.linalg.svd(b, full_matrices=False)
        blocks[c] = u @ vh
    return BlockDiagMatrix(m.rows, m.cols, blocks)


# ---------------------------------------------------------------------------
# Rank-2 tree tensors
# ---------------------------------------------------------------------------

_PAIR = left_comb(2)
_node_scales: Memo[float] = Memo("blockdiag_scale")


def _node_scale(system: ChargeSystem, c: int, direction: Direction) -> float:
    def build() -> float:
        dual = system.dual(c)
        q = structural_tensor(system, _PAIR, SectorPath((c, dual), (system.trivial,)))[..., 0]
        bent = q @ bend_matrix(system, dual, direction).T
        return float(np.trace(bent)) / system.dim(c)

    return _node_scales.get((system.name, c, direction.value), build)


def _check_operator(t: SymTensor) -> None:
    if t.rank != 2:
        raise InvalidArgError(f"block-diagonal form needs a rank-2 tensor, got rank {t.rank}")
    if t.root != t.system.trivial:
        raise InvalidArgError("block-diagonal form needs a trivial root")
    if t.directions[0] is not Direction.OUT or not t.directions[1].incoming:
        raise InvalidArgError(
            f"block-diagonal form needs (out, in) or (out, in_r) legs, got {[d.value for d in t.directions]}"
        )


def tree_to_blockdiag(t: SymTensor) -> BlockDiagMatrix:
    """Degeneracy blocks of a rank-2 ``(OUT, IN)`` or ``(OUT, IN_R)`` tensor."""
    t = release_bends(t)
    _check_operator(t)
    system = t.system
    blocks = {}
    for path, block in t.blocks.items():
        c = path.leaves[0]
        blocks[c] = block * _node_scale(system, c, t.directions[1])
    return BlockDiagMatrix(t.spaces[0], t.spaces[1], blocks)


def blockdiag_to_tree(
    m: BlockDiagMatrix, directions: Sequence[Direction] = (Direction.OUT, Direction.IN)
) -> SymTensor:
    """Inverse of :func:`tree_to_blockdiag`."""
    directions = tuple(Direction(d) for d in directions)
    if len(directions) != 2 or directions[0] is not Direction.OUT or not directions[1].incoming:
        raise InvalidArgError("blockdiag_to_tree builds (out, in) or (out, in_r) tensors")
    system = m.system
    blocks = {}
    for c, block in m.blocks.items():
        path = SectorPath((c, system.dual(c)), (system.trivial,))
        blocks[path] = block / _node_scale(system, c, directions[1])
    return SymTensor((m.rows, m.cols.dual()), directions, _PAIR, system.trivial, blocks)
