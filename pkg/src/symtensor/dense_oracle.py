"""Plain dense tensors and naive reference implementations.

Nothing here knows about fusion trees: tensors are numpy arrays indexed by
the leg spaces, and every primitive is textbook index arithmetic. Fusion of
legs uses :func:`~symtensor.rep_spaces.dense_fusion_unitary`, i.e. the same
coupled labelling as the symmetric engine, so results can be compared entry
by entry.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from symtensor._observability import bump
from symtensor._types import Direction
from symtensor.exception import ChargeSystemMismatchError, FusionRuleError, InvalidArgError, StructureMismatchError
from symtensor.fusion_trees import FusionTree, Shape, enumerate_paths, left_comb, path_shape, tree_node_index
from symtensor.gamma_engine import leg_bend_matrix
from symtensor.rep_spaces import FusedLeg, RepSpace, check_size, dense_fusion_unitary, space_generators
from symtensor.su2_kernels import generators
from symtensor.sym_tensor import SymTensor, _prepare

__all__ = [
    "DenseTensor",
    "dense_permute",
    "graded_permute",
    "dense_fuse",
    "dense_split",
    "dense_contract",
    "dense_svd",
    "dense_reverse",
    "fused_leg_unitary",
    "invariance_residual",
    "random_invariant",
    "check_size",
]

DenseTensor = np.ndarray
"""A dense tensor: a numpy array with one axis per leg."""


def dense_permute(x: DenseTensor, perm: Sequence[int]) -> DenseTensor:
    """New axis ``i`` is old axis ``perm[i]``."""
    if sorted(perm) != list(range(x.ndim)):
        raise InvalidArgError(f"{tuple(perm)} is not a permutation of {x.ndim} axes")
    return np.transpose(x, perm)


def _parities(space: RepSpace) -> np.ndarray:
    out = np.zeros(space.dim, dtype=np.int64)
    for c, _ in space.sectors:
        out[space.sector_slice(c)] = c
    return out


def graded_permute(x: DenseTensor, perm: Sequence[int], spaces: Sequence[RepSpace]) -> DenseTensor:
    """Permutation of fermionic legs: every entry picks up the sign of its odd-leg reordering.

    ``spaces`` are the leg spaces before permuting; their charges are the
    parities.
    """
    if not spaces or not spaces[0].system.graded:
        return dense_permute(x, perm)
    signs = np.ones(x.shape)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            a, b = perm[i], perm[j]
            if a < b:
                continue
            pa = _parities(spaces[a]).reshape([-1 if l == a else 1 for l in range(x.ndim)])
            pb = _parities(spaces[b]).reshape([-1 if l == b else 1 for l in range(x.ndim)])
            signs = signs * (1 - 2 * (pa * pb))
    return dense_permute(x * signs, perm)


def fused_leg_unitary(record: FusedLeg) -> np.ndarray:
    """Dense fusing tensor of a whole group: ``(dim leg..., dim fused)``."""

    def walk(s: Shape) -> np.ndarray:
        if isinstance(s, int):
            return np.eye(record.spaces[s].dim)
        left = walk(s[0])
        right = walk(s[1])
        node = dense_fusion_unitary(record.node_maps[tree_node_index(record.tree, s)])
        out = np.einsum("xa,yb,abc->xyc", left.reshape(-1, node.shape[0]), right.reshape(-1, node.shape[1]), node)
        return out.reshape(left.shape[:-1] + right.shape[:-1] + (node.shape[2],))

    if record.tree.k == 1:
        return np.eye(record.product.dim)
    return walk(record.tree.shape)


def dense_fuse(x: DenseTensor, first: int, record: FusedLeg) -> DenseTensor:
    """Fuse legs ``first .. first+k-1`` of ``x`` into one leg through ``record``."""
    k = record.tree.k
    u = fused_leg_unitary(record)
    axes = list(range(first, first + k))
    if tuple(x.shape[a] for a in axes) != u.shape[:-1]:
        raise StructureMismatchError(f"legs {axes} have dims {x.shape[first:first + k]}, record expects {u.shape[:-1]}")
    out = np.tensordot(x, u, axes=(axes, list(range(k))))
    return np.moveaxis(out, -1, first)


def dense_split(x: DenseTensor, leg: int, record: FusedLeg) -> DenseTensor:
    """Inverse of :func:`dense_fuse` for the leg at position ``leg``."""
    u = fused_leg_unitary(record)
    if x.shape[leg] != u.shape[-1]:
        raise StructureMismatchError(f"leg {leg} has dim {x.shape[leg]}, record fuses to {u.shape[-1]}")
    k = record.tree.k
    out = np.tensordot(x, u.conj(), axes=([leg], [k]))
    # new axes were appended; move them into place
    return np.moveaxis(out, list(range(out.ndim - k, out.ndim)), list(range(leg, leg + k)))


def dense_contract(
    a: DenseTensor,
    b: DenseTensor,
    pairs: Sequence[tuple[int, int]],
    spaces: tuple[Sequence[RepSpace], Sequence[RepSpace]] | None = None,
) -> DenseTensor:
    """Contract ``a`` and ``b`` over ``pairs``; free legs of ``a`` come first.

    For fermionic legs pass ``spaces`` (leg spaces of both tensors): the
    contracted legs are then moved next to each other with parity signs
    before summing.
    """
    con_a = [i for i, _ in pairs]
    con_b = [j for _, j in pairs]
    for i, j in pairs:
        if a.shape[i] != b.shape[j]:
            raise StructureMismatchError(f"pair ({i}, {j}) joins dims {a.shape[i]} and {b.shape[j]}")
    bump("dense_flops", int(np.prod(a.shape)) * int(np.prod([b.shape[j] for j in range(b.ndim) if j not in con_b])))
    if spaces is not None and spaces[0] and spaces[0][0].system.graded:
        free_a = [i for i in range(a.ndim) if i not in con_a]
        free_b = [j for j in range(b.ndim) if j not in con_b]
        a = graded_permute(a, free_a + con_a, spaces[0])
        b = graded_permute(b, con_b + free_b, spaces[1])
        n = len(pairs)
        return np.tensordot(a, b, axes=(list(range(a.ndim - n, a.ndim)), list(range(n))))
    return np.tensordot(a, b, axes=(con_a, con_b))


def dense_svd(matrix: np.ndarray) -> np.ndarray:
    """Singular values of a dense matrix, descending."""
    return np.linalg.svd(matrix, compute_uv=False)


def dense_reverse(x: DenseTensor, leg: int, tree_space: RepSpace, old: Direction, new: Direction) -> DenseTensor:
    """Dense effect of reversing one leg whose tree space is ``tree_space``."""
    w_old = leg_bend_matrix(tree_space, old)
    w_new = leg_bend_matrix(tree_space, new)
    return np.moveaxis(np.tensordot(w_new @ w_old.T, x, axes=(1, leg)), 0, leg)


# ---------------------------------------------------------------------------
# Invariance
# ---------------------------------------------------------------------------


def _leg_operator(space: RepSpace, direction: Direction, alpha: int) -> np.ndarray:
    gen = space_generators(space)[alpha]
    return gen if direction is Direction.OUT else -gen.T


def _abelian_residual(
    x: DenseTensor, spaces: Sequence[RepSpace], directions: Sequence[Direction], root: int
) -> float:
    system = spaces[0].system
    total = np.zeros((), dtype=np.int64) + system.trivial
    for space, d in zip(spaces, directions):
        charges = _parities(space)
        if d.incoming:
            charges = np.array([system.dual(int(c)) for c in charges], dtype=np.int64)
        total = system.combine(total, charges)
    mask = total != root
    values = x.reshape(total.shape) if x.ndim == len(spaces) else x.reshape(total.shape + (1,))[..., 0]
    scale_ = float(np.linalg.norm(x))
    return float(np.linalg.norm(values[mask])) / scale_ if scale_ > 0 else 0.0


def invariance_residual(
    x: DenseTensor,
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction] | None = None,
    root: int | None = None,
) -> float:
    """Relative size of the generator action on ``x``; zero for invariant tensors.

    For SU(2) each outgoing leg is acted on by ``J_α`` and each incoming leg
    by ``-J_αᵀ``; a covariant tensor's trailing root axis counts as an
    incoming leg. Abelian systems check that every nonzero entry carries the
    root charge.
    """
    if not spaces:
        raise InvalidArgError("no leg spaces given")
    directions = list(directions) if directions is not None else [Direction.OUT] * len(spaces)
    system = spaces[0].system
    root = system.trivial if root is None else root
    root_axis = root != system.trivial
    expected = tuple(s.dim for s in spaces) + ((system.dim(root),) if root_axis else ())
    if x.shape != expected:
        raise StructureMismatchError(f"dense shape {x.shape} does not match {expected}")
    if system.abelian:
        return _abelian_residual(x, spaces, directions, root)
    if system.name != "su2":
        raise ChargeSystemMismatchError(f"no generators for {system.name}")
    scale_ = float(np.linalg.norm(x))
    if scale_ == 0:
        return 0.0
    worst = 0.0
    for alpha in range(3):
        acc = np.zeros(x.shape, dtype=complex)
        for l, (space, d) in enumerate(zip(spaces, directions)):
            op = _leg_operator(space, d, alpha)
            acc += np.moveaxis(np.tensordot(op, x, axes=(1, l)), 0, l)
        if root_axis:
            op = -generators(root)[alpha].T
            acc += np.moveaxis(np.tensordot(op, x, axes=(1, x.ndim - 1)), 0, x.ndim - 1)
        worst = max(worst, float(np.linalg.norm(acc)) / scale_)
    return worst


# ---------------------------------------------------------------------------
# Random inputs
# ---------------------------------------------------------------------------


def random_invariant(
    spaces: Sequence[RepSpace],
    directions: Sequence[Direction] | None = None,
    tree: FusionTree | None = None,
    root: int | None = None,
    rng: np.random.Generator | None = None,
    dtype: type = float,
) -> SymTensor:
    """Tensor with unit-Gaussian blocks on every path allowed by the fusion rules.

    Raises:
        FusionRuleError: No path reaches ``root``.
    """
    rng = rng or np.random.default_rng()
    tree_spaces, dirs, tree, root = _prepare(spaces, directions, tree or left_comb(len(spaces)), root)
    paths = enumerate_paths(tree, tree_spaces, root)
    if not paths:
        raise FusionRuleError(f"no sector path of {list(spaces)} reaches root charge {root}")
    blocks = {}
    for path in paths:
        shape = path_shape(path, tree_spaces)
        block = rng.standard_normal(shape)
        if np.issubdtype(dtype, np.complexfloating):
            block = block + 1j * rng.standard_normal(shape)
        blocks[path] = block
    return SymTensor(tree_spaces, dirs, tree, root, blocks)

